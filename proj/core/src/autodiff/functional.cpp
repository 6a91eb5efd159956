#include "ini/autodiff/functional.hpp"

#include <cmath>

#include "ini/autodiff/ops.hpp"
#include "ini/error.hpp"

namespace ini::ad {

void check_simplex_rows(const Tensor& rows, const char* what) {
  if (rows.rank() != 2) {
    throw ShapeError(std::string(what) + ": expected [B,K], got " + shape_string(rows.shape()));
  }
  const std::size_t b = rows.rows(), k = rows.cols();
  auto vals = rows.values();
  for (std::size_t i = 0; i < b; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double v = vals[i * k + j];
      if (!(v >= 0.0)) {
        throw DomainError(std::string(what) + ": negative or NaN entry at row " + std::to_string(i));
      }
      total += v;
    }
    if (std::fabs(total - 1.0) > kSimplexTolerance) {
      throw DomainError(std::string(what) + ": row " + std::to_string(i) + " sums to " +
                        std::to_string(total));
    }
  }
}

Tensor softmax_cross_entropy(const Tensor& logits, const Tensor& targets) {
  if (logits.shape() != targets.shape() || logits.rank() != 2) {
    throw ShapeError("softmax_cross_entropy: logits " + shape_string(logits.shape()) + " vs targets " +
                     shape_string(targets.shape()));
  }
  check_simplex_rows(targets, "softmax_cross_entropy targets");
  const double inv_batch = 1.0 / static_cast<double>(logits.rows());
  return scale(sum(mul(targets, log_softmax(logits))), -inv_batch);
}

Tensor kl_divergence(const Tensor& p, const Tensor& q) {
  if (p.shape() != q.shape() || p.rank() != 2) {
    throw ShapeError("kl_divergence: " + shape_string(p.shape()) + " vs " + shape_string(q.shape()));
  }
  check_simplex_rows(p, "kl_divergence p");
  check_simplex_rows(q, "kl_divergence q");
  const double inv_batch = 1.0 / static_cast<double>(p.rows());
  const Tensor log_ratio = sub(log(clamp_min(p, kProbabilityFloor)), log(clamp_min(q, kProbabilityFloor)));
  return scale(sum(mul(p, log_ratio)), inv_batch);
}

Tensor l2_norm(const Tensor& v) { return sqrt(sum(mul(v, v))); }

Tensor l1_norm(const Tensor& v) { return sum(abs(v)); }

Tensor cosine_similarity(const Tensor& u, const Tensor& v) {
  if (u.shape() != v.shape()) {
    throw ShapeError("cosine_similarity: " + shape_string(u.shape()) + " vs " + shape_string(v.shape()));
  }
  const Tensor nu = l2_norm(u);
  const Tensor nv = l2_norm(v);
  if (!(nu.item() > kNormEpsilon)) throw DegenerateNormError("u", nu.item());
  if (!(nv.item() > kNormEpsilon)) throw DegenerateNormError("v", nv.item());
  return div(dot(u, v), mul(nu, nv));
}

Tensor cosine_similarity(const ParamVector& u, const ParamVector& v) {
  return cosine_similarity(u.flat(), v.flat());
}

Tensor one_hot(std::span<const int> labels, std::size_t num_classes) {
  std::vector<double> values(labels.size() * num_classes, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int label = labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= num_classes) {
      throw DomainError("label " + std::to_string(label) + " out of range at row " + std::to_string(i));
    }
    values[i * num_classes + static_cast<std::size_t>(label)] = 1.0;
  }
  return Tensor::from({labels.size(), num_classes}, std::move(values));
}

}  // namespace ini::ad
