#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "ini/autodiff/tensor.hpp"

namespace ini::ad {

enum class OpKind : std::uint8_t {
  kVariable,
  kConstant,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kScale,
  kShift,
  kMatMul,
  kTranspose,
  kAddRowVector,
  kSumRows,
  kSumCols,
  kBroadcastRows,
  kBroadcastCols,
  kSum,
  kExpand,
  kRelu,
  kTanh,
  kExp,
  kLog,
  kClampMin,
  kAbs,
  kSqrt,
  kSafeReciprocal,
  kLogSoftmax,
  kSlice,
  kPad,
  kReshape,
};

const char* op_name(OpKind op);

/// Scalar parameters of an op. Unused fields stay zero.
struct OpAttrs {
  double scalar = 0.0;
  std::size_t offset = 0;
  std::size_t extent = 0;
  Shape shape;
};

struct RecordNode {
  OpKind op = OpKind::kVariable;
  OpAttrs attrs;
  std::array<std::size_t, 2> inputs{};
  std::uint8_t arity = 0;
  std::shared_ptr<const Array> value;
  int generation = 0;
};

/// Append-only computation record.
///
/// Every node's inputs precede it. A backward pass that builds a
/// differentiable gradient appends its own nodes with generation + 1, so the
/// original nodes are never revisited or rewritten and the gradient can be
/// differentiated again.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = delete;
  Tape& operator=(Tape&&) = delete;

  /// Registers `value` as a differentiable leaf.
  Tensor variable(const Tensor& value);

  std::size_t size() const noexcept { return nodes_.size(); }
  const RecordNode& node(std::size_t i) const { return nodes_.at(i); }
  int generation() const noexcept { return generation_; }

  /// Recomputes every node's forward value from the stored leaves.
  std::vector<Array> replay() const;

  /// True when replay() reproduces every stored value bit for bit.
  bool replay_matches() const;

  /// Internal: records an evaluated op. Used by the op library.
  Tensor append(OpKind op, const OpAttrs& attrs, std::span<const Tensor> inputs, Array value);

  /// Internal: a tensor handle for an existing node.
  Tensor at(std::size_t node);

  class GenerationScope {
   public:
    GenerationScope(Tape& tape, int level) : tape_(tape), saved_(tape.generation_) {
      tape_.generation_ = level;
    }
    ~GenerationScope() { tape_.generation_ = saved_; }
    GenerationScope(const GenerationScope&) = delete;
    GenerationScope& operator=(const GenerationScope&) = delete;

   private:
    Tape& tape_;
    int saved_;
  };

 private:
  std::vector<RecordNode> nodes_;
  int generation_ = 0;
};

}  // namespace ini::ad
