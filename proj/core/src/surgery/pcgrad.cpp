#include "ini/surgery/pcgrad.hpp"

#include <cmath>

#include "ini/error.hpp"
#include "ini/rng.hpp"

namespace ini::surgery {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

}  // namespace

void GradientSet::validate() const {
  if (entries.empty()) throw DomainError("pcgrad: gradient set is empty");
  const std::size_t n = entries.front().second.size();
  for (const auto& [name, g] : entries) {
    if (g.size() != n) throw ShapeError("pcgrad: gradient '" + name + "' has a different length");
    for (double v : g.values()) {
      if (!std::isfinite(v)) throw DomainError("pcgrad: gradient '" + name + "' has a non-finite entry");
    }
  }
}

SurgeryResult pcgrad(const GradientSet& grads, std::uint64_t seed) {
  grads.validate();
  const std::size_t n = grads.size();
  const std::size_t dim = grads.entries.front().second.size();
  Rng rng(seed);

  std::vector<std::span<const double>> original(n);
  std::vector<double> sq_norm(n);
  for (std::size_t k = 0; k < n; ++k) {
    original[k] = grads.entries[k].second.values();
    sq_norm[k] = dot(original[k], original[k]);
  }

  SurgeryResult result;
  std::vector<std::vector<double>> projected(n);
  for (std::size_t i : rng.permutation(n)) {
    std::vector<double> g(original[i].begin(), original[i].end());
    for (std::size_t j : rng.permutation(n)) {
      if (j == i) continue;
      const double d = dot(g, original[j]);
      if (!(d < 0.0)) continue;
      const double norm_i = std::sqrt(dot(g, g));
      const double norm_j = std::sqrt(sq_norm[j]);
      if (!(sq_norm[j] > 0.0)) {
        result.warnings.push_back("skipped projection of '" + grads.entries[i].first + "' onto '" +
                                  grads.entries[j].first + "': zero norm");
        continue;
      }
      const double factor = d / sq_norm[j];
      for (std::size_t k = 0; k < dim; ++k) g[k] -= factor * original[j][k];
      Projection p;
      p.i = i;
      p.j = j;
      p.dot_before = d;
      p.norm_i_before = norm_i;
      p.cos_before = d / (norm_i * norm_j);
      p.dot_after = dot(g, original[j]);
      p.norm_i_after = std::sqrt(dot(g, g));
      p.norm_j = norm_j;
      p.cos_after = p.norm_i_after > 0.0 ? p.dot_after / (p.norm_i_after * norm_j) : 0.0;
      result.projections.push_back(p);
    }
    projected[i] = std::move(g);
  }

  std::vector<double> combined(projected[0]);
  for (std::size_t k = 1; k < n; ++k) {
    for (std::size_t c = 0; c < dim; ++c) combined[c] += projected[k][c];
  }
  const auto& layout = grads.entries.front().second.layout_ptr();
  for (auto& g : projected) result.projected.push_back(ad::ParamVector::from_values(layout, std::move(g)));
  result.combined = ad::ParamVector::from_values(layout, std::move(combined));
  return result;
}

}  // namespace ini::surgery
