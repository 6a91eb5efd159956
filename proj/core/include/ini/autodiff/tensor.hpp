#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ini::ad {

/// Extents of a tensor. Operations in this library accept rank 1 and rank 2.
using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major storage.
struct Array {
  Shape shape;
  std::vector<double> data;
};

class Tape;

/// Handle to immutable values, optionally attached to a node of a Tape.
///
/// A detached tensor is a plain value and may be shared across threads.
/// An attached tensor is only valid while its Tape is alive and must stay on
/// the thread that owns the Tape.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Array array);

  static Tensor from(Shape shape, std::vector<double> values);
  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);

  bool defined() const noexcept { return data_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t rows() const;
  std::size_t cols() const;
  std::size_t size() const;

  std::span<const double> values() const;
  double item() const;
  double operator[](std::size_t i) const { return values()[i]; }
  double operator()(std::size_t r, std::size_t c) const;

  bool tracked() const noexcept { return tape_ != nullptr; }
  Tape* tape() const noexcept { return tape_; }
  std::size_t node() const noexcept { return node_; }

  /// Same values, no record.
  Tensor detach() const;
  const std::shared_ptr<const Array>& storage() const noexcept { return data_; }

 private:
  friend class Tape;
  Tensor(std::shared_ptr<const Array> data, Tape* tape, std::size_t node);

  std::shared_ptr<const Array> data_;
  Tape* tape_ = nullptr;
  std::size_t node_ = 0;
};

}  // namespace ini::ad
