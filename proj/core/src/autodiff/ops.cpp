#include "ini/autodiff/ops.hpp"

#include <array>
#include <cmath>
#include <initializer_list>

#include "ini/autodiff/tape.hpp"
#include "ini/error.hpp"
#include "kernels.hpp"

namespace ini::ad {

namespace {

Tensor apply(OpKind op, const OpAttrs& attrs, std::initializer_list<Tensor> inputs) {
  Tape* tape = nullptr;
  std::array<const Array*, 2> raw{};
  std::size_t k = 0;
  for (const Tensor& t : inputs) {
    if (!t.defined()) throw Error(std::string("undefined input to ") + op_name(op));
    if (t.tracked()) {
      if (tape && tape != t.tape()) {
        throw Error(std::string("inputs of ") + op_name(op) + " live on different records");
      }
      tape = t.tape();
    }
    raw[k++] = t.storage().get();
  }
  Array value = detail::evaluate(op, attrs, std::span<const Array* const>(raw.data(), k));
  if (!tape) return Tensor(std::move(value));
  return tape->append(op, attrs, std::span<const Tensor>(inputs.begin(), inputs.size()), std::move(value));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

void require_rank(const Tensor& a, std::size_t rank, const char* what) {
  if (a.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(a.shape()));
  }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  return apply(OpKind::kAdd, {}, {a, b});
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  return apply(OpKind::kSub, {}, {a, b});
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  return apply(OpKind::kMul, {}, {a, b});
}

Tensor div(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "div");
  return apply(OpKind::kDiv, {}, {a, b});
}

Tensor neg(const Tensor& a) { return apply(OpKind::kNeg, {}, {a}); }

Tensor scale(const Tensor& a, double factor) {
  OpAttrs attrs;
  attrs.scalar = factor;
  return apply(OpKind::kScale, attrs, {a});
}

Tensor shift(const Tensor& a, double offset) {
  OpAttrs attrs;
  attrs.scalar = offset;
  return apply(OpKind::kShift, attrs, {a});
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  if (a.shape()[1] != b.shape()[0]) {
    throw ShapeError("matmul: inner dimensions differ " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()));
  }
  return apply(OpKind::kMatMul, {}, {a, b});
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  return apply(OpKind::kTranspose, {}, {a});
}

Tensor add_row_vector(const Tensor& a, const Tensor& v) {
  require_rank(a, 2, "add_row_vector");
  require_rank(v, 1, "add_row_vector");
  if (a.cols() != v.size()) {
    throw ShapeError("add_row_vector: " + shape_string(a.shape()) + " + " + shape_string(v.shape()));
  }
  return apply(OpKind::kAddRowVector, {}, {a, v});
}

Tensor sum_rows(const Tensor& a) {
  require_rank(a, 2, "sum_rows");
  return apply(OpKind::kSumRows, {}, {a});
}

Tensor sum_cols(const Tensor& a) {
  require_rank(a, 2, "sum_cols");
  return apply(OpKind::kSumCols, {}, {a});
}

Tensor broadcast_rows(const Tensor& v, std::size_t rows) {
  require_rank(v, 1, "broadcast_rows");
  if (rows == 0) throw ShapeError("broadcast_rows: zero rows");
  OpAttrs attrs;
  attrs.extent = rows;
  return apply(OpKind::kBroadcastRows, attrs, {v});
}

Tensor broadcast_cols(const Tensor& v, std::size_t cols) {
  require_rank(v, 1, "broadcast_cols");
  if (cols == 0) throw ShapeError("broadcast_cols: zero cols");
  OpAttrs attrs;
  attrs.extent = cols;
  return apply(OpKind::kBroadcastCols, attrs, {v});
}

Tensor sum(const Tensor& a) { return apply(OpKind::kSum, {}, {a}); }

Tensor expand(const Tensor& s, const Shape& shape) {
  if (s.size() != 1) throw ShapeError("expand: source must hold one element");
  OpAttrs attrs;
  attrs.shape = shape;
  return apply(OpKind::kExpand, attrs, {s});
}

Tensor relu(const Tensor& a) { return apply(OpKind::kRelu, {}, {a}); }
Tensor tanh(const Tensor& a) { return apply(OpKind::kTanh, {}, {a}); }
Tensor exp(const Tensor& a) { return apply(OpKind::kExp, {}, {a}); }

Tensor log(const Tensor& a) {
  for (double x : a.values()) {
    if (!(x > 0.0)) throw DomainError("log of non-positive value " + std::to_string(x));
  }
  return apply(OpKind::kLog, {}, {a});
}

Tensor clamp_min(const Tensor& a, double floor) {
  OpAttrs attrs;
  attrs.scalar = floor;
  return apply(OpKind::kClampMin, attrs, {a});
}

Tensor abs(const Tensor& a) { return apply(OpKind::kAbs, {}, {a}); }

Tensor sqrt(const Tensor& a) {
  for (double x : a.values()) {
    if (x < 0.0) throw DomainError("sqrt of negative value " + std::to_string(x));
  }
  return apply(OpKind::kSqrt, {}, {a});
}

Tensor safe_reciprocal(const Tensor& a) { return apply(OpKind::kSafeReciprocal, {}, {a}); }

Tensor log_softmax(const Tensor& a) {
  require_rank(a, 2, "log_softmax");
  return apply(OpKind::kLogSoftmax, {}, {a});
}

Tensor softmax(const Tensor& a) { return exp(log_softmax(a)); }

Tensor slice(const Tensor& a, std::size_t offset, std::size_t extent) {
  require_rank(a, 1, "slice");
  if (extent == 0 || offset + extent > a.size()) {
    throw ShapeError("slice [" + std::to_string(offset) + ", " + std::to_string(offset + extent) +
                     ") out of range for length " + std::to_string(a.size()));
  }
  OpAttrs attrs;
  attrs.offset = offset;
  attrs.extent = extent;
  return apply(OpKind::kSlice, attrs, {a});
}

Tensor pad(const Tensor& a, std::size_t offset, std::size_t total) {
  require_rank(a, 1, "pad");
  if (offset + a.size() > total) throw ShapeError("pad: segment exceeds total length");
  OpAttrs attrs;
  attrs.offset = offset;
  attrs.extent = total;
  return apply(OpKind::kPad, attrs, {a});
}

Tensor reshape(const Tensor& a, const Shape& shape) {
  if (shape_size(shape) != a.size() || shape.empty() || shape.size() > 2) {
    throw ShapeError("reshape " + shape_string(a.shape()) + " -> " + shape_string(shape));
  }
  if (shape == a.shape()) return a;
  OpAttrs attrs;
  attrs.shape = shape;
  return apply(OpKind::kReshape, attrs, {a});
}

Tensor dot(const Tensor& a, const Tensor& b) { return sum(mul(a, b)); }

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

}  // namespace ini::ad
