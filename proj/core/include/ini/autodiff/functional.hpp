#pragma once

#include <cstddef>
#include <span>

#include "ini/autodiff/param_vector.hpp"
#include "ini/autodiff/tensor.hpp"

namespace ini::ad {

/// Probabilities are clamped to this floor before any logarithm.
inline constexpr double kProbabilityFloor = 1e-12;
/// Tolerance for "row lies on the probability simplex".
inline constexpr double kSimplexTolerance = 1e-6;
/// Norms at or below this value are treated as degenerate by cosine_similarity.
inline constexpr double kNormEpsilon = 1e-12;

/// Throws DomainError unless every row of the [B,K] tensor is non-negative and
/// sums to one within kSimplexTolerance. `what` names the argument.
void check_simplex_rows(const Tensor& rows, const char* what);

/// -(1/B) sum_b sum_i t_bi log softmax(logits)_bi. Gradient with respect to
/// the logits is (softmax(logits) - targets) / B.
Tensor softmax_cross_entropy(const Tensor& logits, const Tensor& targets);

/// (1/B) sum_b sum_i p_bi (log p_bi - log q_bi) with both p and q clamped at
/// kProbabilityFloor inside the logarithm.
Tensor kl_divergence(const Tensor& p, const Tensor& q);

/// <u,v>/(|u||v|). Throws DegenerateNormError naming "u" or "v" when a norm is
/// at or below kNormEpsilon.
Tensor cosine_similarity(const Tensor& u, const Tensor& v);
Tensor cosine_similarity(const ParamVector& u, const ParamVector& v);

/// Euclidean norm. Its gradient at the origin is taken as zero.
Tensor l2_norm(const Tensor& v);
Tensor l1_norm(const Tensor& v);

/// Row-wise one-hot of [B] class indices.
Tensor one_hot(std::span<const int> labels, std::size_t num_classes);

}  // namespace ini::ad
