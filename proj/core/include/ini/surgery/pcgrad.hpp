#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ini/autodiff/param_vector.hpp"

namespace ini::surgery {

/// Named gradients of equal length.
struct GradientSet {
  std::vector<std::pair<std::string, ad::ParamVector>> entries;

  void add(std::string name, ad::ParamVector grad) { entries.emplace_back(std::move(name), std::move(grad)); }
  std::size_t size() const { return entries.size(); }
  /// Throws unless non-empty, lengths agree and every value is finite.
  void validate() const;
};

/// One projection of g_i^PC against the original g_j.
struct Projection {
  std::size_t i = 0;
  std::size_t j = 0;
  /// <g_i^PC, g_j> right before the projection.
  double dot_before = 0.0;
  double norm_i_before = 0.0;
  double cos_before = 0.0;
  double cos_after = 0.0;
  /// <g_i^PC, g_j> right after the projection.
  double dot_after = 0.0;
  double norm_i_after = 0.0;
  double norm_j = 0.0;
};

struct SurgeryResult {
  ad::ParamVector combined;
  /// Projected gradients, indexed like the input set.
  std::vector<ad::ParamVector> projected;
  std::vector<Projection> projections;
  std::vector<std::string> warnings;
};

/// Projecting conflicting gradients.
///
/// Gradients are visited in an order shuffled by `seed`. For each g_i the
/// other original gradients g_j are visited in a fresh shuffled order;
/// whenever <g_i^PC, g_j> < 0 the component along g_j is removed. When such a
/// projection is required but |g_j|^2 is zero (underflow) it is skipped and a
/// warning is recorded. The result is the sum of the projected gradients in
/// input order.
SurgeryResult pcgrad(const GradientSet& grads, std::uint64_t seed);

}  // namespace ini::surgery
