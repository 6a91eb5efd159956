#pragma once

#include <cstddef>

#include "ini/autodiff/tensor.hpp"

// Differentiable primitives. Each op records a node when any input is
// attached to a Tape; otherwise it computes values only. All inputs of one
// op must share the same Tape. Reductions accumulate sequentially in index
// order.
namespace ini::ad {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double factor);
Tensor shift(const Tensor& a, double offset);

/// [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

/// [m,n] + [n] broadcast over rows.
Tensor add_row_vector(const Tensor& a, const Tensor& v);
/// [m,n] -> [n]
Tensor sum_rows(const Tensor& a);
/// [m,n] -> [m]
Tensor sum_cols(const Tensor& a);
/// [n] -> [m,n]
Tensor broadcast_rows(const Tensor& v, std::size_t rows);
/// [m] -> [m,n]
Tensor broadcast_cols(const Tensor& v, std::size_t cols);
/// any -> [1]
Tensor sum(const Tensor& a);
/// [1] -> shape
Tensor expand(const Tensor& s, const Shape& shape);

Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor clamp_min(const Tensor& a, double floor);
Tensor abs(const Tensor& a);
Tensor sqrt(const Tensor& a);
/// 1/x for x > 0 and 0 elsewhere.
Tensor safe_reciprocal(const Tensor& a);

/// Row-wise log-softmax of [m,n].
Tensor log_softmax(const Tensor& a);
Tensor softmax(const Tensor& a);

/// Contiguous range of a rank-1 tensor.
Tensor slice(const Tensor& a, std::size_t offset, std::size_t extent);
/// Embeds a rank-1 tensor at `offset` inside zeros of length `total`.
Tensor pad(const Tensor& a, std::size_t offset, std::size_t total);
Tensor reshape(const Tensor& a, const Shape& shape);

Tensor dot(const Tensor& a, const Tensor& b);
Tensor mean(const Tensor& a);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator-(const Tensor& a) { return neg(a); }
inline Tensor operator*(double c, const Tensor& a) { return scale(a, c); }

}  // namespace ini::ad
