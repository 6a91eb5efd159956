#include "ini/autodiff/tensor.hpp"

#include <sstream>

#include "ini/error.hpp"

namespace ini::ad {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t extent : shape) n *= extent;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Array array) {
  if (array.shape.empty() || array.shape.size() > 2) {
    throw ShapeError("tensor rank must be 1 or 2, got shape " + shape_string(array.shape));
  }
  for (std::size_t extent : array.shape) {
    if (extent == 0) throw ShapeError("tensor extents must be positive: " + shape_string(array.shape));
  }
  if (shape_size(array.shape) != array.data.size()) {
    throw ShapeError("shape " + shape_string(array.shape) + " does not match " +
                     std::to_string(array.data.size()) + " values");
  }
  data_ = std::make_shared<const Array>(std::move(array));
}

Tensor::Tensor(std::shared_ptr<const Array> data, Tape* tape, std::size_t node)
    : data_(std::move(data)), tape_(tape), node_(node) {}

Tensor Tensor::from(Shape shape, std::vector<double> values) {
  return Tensor(Array{std::move(shape), std::move(values)});
}

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  const std::size_t n = shape_size(shape);
  return Tensor(Array{std::move(shape), std::vector<double>(n, value)});
}

Tensor Tensor::scalar(double value) { return Tensor(Array{{1}, {value}}); }

const Shape& Tensor::shape() const {
  if (!data_) throw Error("use of undefined tensor");
  return data_->shape;
}

std::size_t Tensor::rows() const {
  const Shape& s = shape();
  return s.size() == 2 ? s[0] : 1;
}

std::size_t Tensor::cols() const {
  const Shape& s = shape();
  return s.back();
}

std::size_t Tensor::size() const { return data_ ? data_->data.size() : 0; }

std::span<const double> Tensor::values() const {
  if (!data_) throw Error("use of undefined tensor");
  return data_->data;
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape()));
  return data_->data[0];
}

double Tensor::operator()(std::size_t r, std::size_t c) const {
  return data_->data[r * cols() + c];
}

Tensor Tensor::detach() const { return Tensor(data_, nullptr, 0); }

}  // namespace ini::ad
