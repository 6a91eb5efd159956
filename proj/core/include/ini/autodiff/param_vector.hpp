#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ini/autodiff/tape.hpp"
#include "ini/autodiff/tensor.hpp"

namespace ini::ad {

struct Segment {
  std::string name;
  Shape shape;
  std::size_t offset = 0;
};

/// Named, contiguous, non-overlapping segments over one flat buffer.
class ParamLayout {
 public:
  ParamLayout() = default;
  explicit ParamLayout(std::vector<std::pair<std::string, Shape>> entries);

  const std::vector<Segment>& segments() const noexcept { return segments_; }
  std::size_t size() const noexcept { return total_; }
  std::size_t index_of(const std::string& name) const;

  bool operator==(const ParamLayout& other) const;

 private:
  std::vector<Segment> segments_;
  std::size_t total_ = 0;
};

/// Flat parameter (or gradient) vector with a segment layout.
///
/// The flat buffer is a Tensor: when it is attached to a Tape the vector
/// carries a record and anything computed from it is differentiable.
class ParamVector {
 public:
  ParamVector() = default;
  ParamVector(std::shared_ptr<const ParamLayout> layout, Tensor flat);

  static ParamVector zeros(std::shared_ptr<const ParamLayout> layout);
  static ParamVector from_values(std::shared_ptr<const ParamLayout> layout,
                                 std::vector<double> values);
  /// Concatenates per-segment arrays in layout order.
  static ParamVector flatten(std::shared_ptr<const ParamLayout> layout,
                             const std::vector<Array>& segments);

  /// Per-segment copies of the values, in layout order.
  std::vector<Array> unflatten() const;

  /// Differentiable view of one segment, reshaped to its declared shape.
  Tensor segment(std::size_t index) const;

  const ParamLayout& layout() const { return *layout_; }
  const std::shared_ptr<const ParamLayout>& layout_ptr() const noexcept { return layout_; }
  const Tensor& flat() const noexcept { return flat_; }
  std::span<const double> values() const { return flat_.values(); }
  std::size_t size() const { return flat_.size(); }

  bool tracked() const noexcept { return flat_.tracked(); }
  /// Copy whose flat buffer is a fresh differentiable leaf on `tape`.
  ParamVector track(Tape& tape) const;
  ParamVector detach() const;
  ParamVector with_values(std::vector<double> values) const;

 private:
  std::shared_ptr<const ParamLayout> layout_;
  Tensor flat_;
};

}  // namespace ini::ad
