#include "ini/autodiff/tape.hpp"

#include <algorithm>
#include <cstring>

#include "ini/error.hpp"
#include "kernels.hpp"

namespace ini::ad {

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::kVariable: return "variable";
    case OpKind::kConstant: return "constant";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kDiv: return "div";
    case OpKind::kNeg: return "neg";
    case OpKind::kScale: return "scale";
    case OpKind::kShift: return "shift";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kAddRowVector: return "add_row_vector";
    case OpKind::kSumRows: return "sum_rows";
    case OpKind::kSumCols: return "sum_cols";
    case OpKind::kBroadcastRows: return "broadcast_rows";
    case OpKind::kBroadcastCols: return "broadcast_cols";
    case OpKind::kSum: return "sum";
    case OpKind::kExpand: return "expand";
    case OpKind::kRelu: return "relu";
    case OpKind::kTanh: return "tanh";
    case OpKind::kExp: return "exp";
    case OpKind::kLog: return "log";
    case OpKind::kClampMin: return "clamp_min";
    case OpKind::kAbs: return "abs";
    case OpKind::kSqrt: return "sqrt";
    case OpKind::kSafeReciprocal: return "safe_reciprocal";
    case OpKind::kLogSoftmax: return "log_softmax";
    case OpKind::kSlice: return "slice";
    case OpKind::kPad: return "pad";
    case OpKind::kReshape: return "reshape";
  }
  return "?";
}

Tensor Tape::variable(const Tensor& value) {
  RecordNode node;
  node.op = OpKind::kVariable;
  node.value = value.storage();
  node.generation = generation_;
  nodes_.push_back(std::move(node));
  return Tensor(nodes_.back().value, this, nodes_.size() - 1);
}

Tensor Tape::append(OpKind op, const OpAttrs& attrs, std::span<const Tensor> inputs, Array value) {
  RecordNode node;
  node.op = op;
  node.attrs = attrs;
  node.arity = static_cast<std::uint8_t>(inputs.size());
  int generation = generation_;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor& t = inputs[k];
    if (t.tracked()) {
      if (t.tape() != this) throw Error("tensor belongs to another record");
      node.inputs[k] = t.node();
      generation = std::max(generation, nodes_[t.node()].generation);
    } else {
      RecordNode constant;
      constant.op = OpKind::kConstant;
      constant.value = t.storage();
      constant.generation = generation_;
      nodes_.push_back(std::move(constant));
      node.inputs[k] = nodes_.size() - 1;
    }
  }
  node.generation = generation;
  node.value = std::make_shared<const Array>(std::move(value));
  nodes_.push_back(std::move(node));
  return Tensor(nodes_.back().value, this, nodes_.size() - 1);
}

Tensor Tape::at(std::size_t index) { return Tensor(nodes_.at(index).value, this, index); }

std::vector<Array> Tape::replay() const {
  std::vector<Array> values;
  values.reserve(nodes_.size());
  for (const RecordNode& node : nodes_) {
    if (node.op == OpKind::kVariable || node.op == OpKind::kConstant) {
      values.push_back(*node.value);
      continue;
    }
    std::array<const Array*, 2> in{};
    for (std::size_t k = 0; k < node.arity; ++k) in[k] = &values[node.inputs[k]];
    values.push_back(detail::evaluate(node.op, node.attrs,
                                      std::span<const Array* const>(in.data(), node.arity)));
  }
  return values;
}

bool Tape::replay_matches() const {
  const std::vector<Array> values = replay();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Array& stored = *nodes_[i].value;
    if (stored.shape != values[i].shape) return false;
    if (std::memcmp(stored.data.data(), values[i].data.data(), stored.data.size() * sizeof(double)) != 0) {
      return false;
    }
  }
  return true;
}

}  // namespace ini::ad
