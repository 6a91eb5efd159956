#include "ini/autodiff/param_vector.hpp"

#include "ini/autodiff/ops.hpp"
#include "ini/error.hpp"

namespace ini::ad {

ParamLayout::ParamLayout(std::vector<std::pair<std::string, Shape>> entries) {
  for (auto& [name, shape] : entries) {
    const std::size_t extent = shape_size(shape);
    if (extent == 0) throw ShapeError("parameter segment '" + name + "' is empty");
    segments_.push_back(Segment{std::move(name), std::move(shape), total_});
    total_ += extent;
  }
}

std::size_t ParamLayout::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (segments_[i].name == name) return i;
  }
  throw Error("no parameter segment named '" + name + "'");
}

bool ParamLayout::operator==(const ParamLayout& other) const {
  if (total_ != other.total_ || segments_.size() != other.segments_.size()) return false;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const Segment& a = segments_[i];
    const Segment& b = other.segments_[i];
    if (a.name != b.name || a.shape != b.shape || a.offset != b.offset) return false;
  }
  return true;
}

ParamVector::ParamVector(std::shared_ptr<const ParamLayout> layout, Tensor flat)
    : layout_(std::move(layout)), flat_(std::move(flat)) {
  if (!layout_) throw Error("parameter vector without layout");
  if (flat_.rank() != 1 || flat_.size() != layout_->size()) {
    throw ShapeError("flat buffer " + shape_string(flat_.shape()) + " does not match layout of " +
                     std::to_string(layout_->size()) + " values");
  }
}

ParamVector ParamVector::zeros(std::shared_ptr<const ParamLayout> layout) {
  const std::size_t n = layout->size();
  return ParamVector(std::move(layout), Tensor::zeros({n}));
}

ParamVector ParamVector::from_values(std::shared_ptr<const ParamLayout> layout,
                                     std::vector<double> values) {
  const std::size_t n = values.size();
  return ParamVector(std::move(layout), Tensor::from({n}, std::move(values)));
}

ParamVector ParamVector::flatten(std::shared_ptr<const ParamLayout> layout,
                                 const std::vector<Array>& segments) {
  if (segments.size() != layout->segments().size()) {
    throw ShapeError("flatten: expected " + std::to_string(layout->segments().size()) + " segments");
  }
  std::vector<double> flat;
  flat.reserve(layout->size());
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].shape != layout->segments()[i].shape) {
      throw ShapeError("flatten: segment '" + layout->segments()[i].name + "' has shape " +
                       shape_string(segments[i].shape));
    }
    flat.insert(flat.end(), segments[i].data.begin(), segments[i].data.end());
  }
  return from_values(std::move(layout), std::move(flat));
}

std::vector<Array> ParamVector::unflatten() const {
  std::vector<Array> out;
  auto vals = values();
  for (const Segment& seg : layout_->segments()) {
    const std::size_t n = shape_size(seg.shape);
    out.push_back(Array{seg.shape, std::vector<double>(vals.begin() + static_cast<std::ptrdiff_t>(seg.offset),
                                                       vals.begin() + static_cast<std::ptrdiff_t>(seg.offset + n))});
  }
  return out;
}

Tensor ParamVector::segment(std::size_t index) const {
  const Segment& seg = layout_->segments().at(index);
  return reshape(slice(flat_, seg.offset, shape_size(seg.shape)), seg.shape);
}

ParamVector ParamVector::track(Tape& tape) const {
  return ParamVector(layout_, tape.variable(flat_.detach()));
}

ParamVector ParamVector::detach() const { return ParamVector(layout_, flat_.detach()); }

ParamVector ParamVector::with_values(std::vector<double> values) const {
  return from_values(layout_, std::move(values));
}

}  // namespace ini::ad
