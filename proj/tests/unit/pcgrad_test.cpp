#include <gtest/gtest.h>

#include <cmath>

#include "ini/error.hpp"
#include "ini/rng.hpp"
#include "ini/surgery/pcgrad.hpp"
#include "reference.hpp"

using namespace ini;

namespace {

std::shared_ptr<const ad::ParamLayout> layout(std::size_t n) {
  return std::make_shared<const ad::ParamLayout>(std::vector<std::pair<std::string, ad::Shape>>{{"g", {n}}});
}

surgery::GradientSet make_set(const std::vector<testref::Vec>& gs) {
  surgery::GradientSet set;
  const auto l = layout(gs.front().size());
  for (std::size_t i = 0; i < gs.size(); ++i) set.add("g" + std::to_string(i), ad::ParamVector::from_values(l, gs[i]));
  return set;
}

std::vector<testref::Vec> random_set(Rng& rng, std::size_t n, std::size_t dim, bool positive = false) {
  std::vector<testref::Vec> gs(n, testref::Vec(dim));
  for (auto& g : gs)
    for (auto& v : g) v = positive ? rng.uniform(0.0, 1.0) : rng.normal();
  return gs;
}

double dot(std::span<const double> a, std::span<const double> b) {
  return static_cast<double>(testref::exact_dot(testref::Vec(a.begin(), a.end()), testref::Vec(b.begin(), b.end())));
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace

TEST(Pcgrad, ProjectionsZeroTheInnerProduct) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto gs = random_set(rng, 2 + rng.index(3), 8 + rng.index(505));
    const auto r = surgery::pcgrad(make_set(gs), static_cast<std::uint64_t>(trial));
    for (const auto& p : r.projections) {
      EXPECT_LT(p.dot_before, 0.0);
      EXPECT_LE(std::fabs(p.dot_after), 1e-6 * p.norm_i_before * p.norm_j);
    }
  }
}

TEST(Pcgrad, MatchesReferenceImplementation) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto gs = random_set(rng, 2 + rng.index(3), 8 + rng.index(100));
    std::vector<testref::RefProjection> trace;
    const auto ref = testref::ref_pcgrad(gs, 77u + trial, &trace);
    const auto r = surgery::pcgrad(make_set(gs), 77u + trial);
    ASSERT_EQ(trace.size(), r.projections.size());
    for (std::size_t k = 0; k < trace.size(); ++k) {
      EXPECT_EQ(trace[k].i, r.projections[k].i);
      EXPECT_EQ(trace[k].j, r.projections[k].j);
    }
    for (std::size_t i = 0; i < gs.size(); ++i) {
      const double scale = norm(gs[i]) + 1.0;
      for (std::size_t c = 0; c < gs[i].size(); ++c) EXPECT_NEAR(r.projected[i].values()[c], ref[i][c], 1e-12 * scale);
    }
  }
}

TEST(Pcgrad, ConflictFreeSetsPassThroughExactly) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto gs = random_set(rng, 2 + rng.index(3), 8 + rng.index(100), true);
    const auto r = surgery::pcgrad(make_set(gs), static_cast<std::uint64_t>(trial));
    EXPECT_TRUE(r.projections.empty());
    testref::Vec sum(gs[0]);
    for (std::size_t i = 1; i < gs.size(); ++i)
      for (std::size_t c = 0; c < sum.size(); ++c) sum[c] += gs[i][c];
    for (std::size_t i = 0; i < gs.size(); ++i)
      for (std::size_t c = 0; c < gs[i].size(); ++c) EXPECT_EQ(r.projected[i].values()[c], gs[i][c]);
    for (std::size_t c = 0; c < sum.size(); ++c) EXPECT_EQ(r.combined.values()[c], sum[c]);
  }
}

TEST(Pcgrad, TwoGradientOutputsDoNotConflict) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto gs = random_set(rng, 2, 8 + rng.index(505));
    const auto r = surgery::pcgrad(make_set(gs), static_cast<std::uint64_t>(trial));
    EXPECT_GE(dot(r.projected[0].values(), r.projected[1].values()), -1e-9 * norm(gs[0]) * norm(gs[1]));
  }
}

TEST(Pcgrad, ExactOppositesCancelAndSingleGradientIsUntouched) {
  const auto r = surgery::pcgrad(make_set({{1.0, 2.0}, {-1.0, -2.0}}), 0);
  for (const auto& g : r.projected)
    for (double v : g.values()) EXPECT_NEAR(v, 0.0, 1e-15);
  const auto one = surgery::pcgrad(make_set({{3.0, -1.0}}), 0);
  EXPECT_EQ(one.combined.values()[0], 3.0);
  EXPECT_TRUE(one.projections.empty());
}

TEST(Pcgrad, ZeroGradientIsSkippedAndInvalidSetsRejected) {
  const auto r = surgery::pcgrad(make_set({{1.0, 0.0}, {0.0, 0.0}}), 0);
  EXPECT_TRUE(r.projections.empty());
  // The squared norm of the tiny gradient underflows to zero.
  const auto tiny = surgery::pcgrad(make_set({{-1.0, 0.0}, {1e-200, 0.0}}), 0);
  EXPECT_FALSE(tiny.warnings.empty());
  EXPECT_EQ(tiny.projected[0].values()[0], -1.0);
  EXPECT_THROW(surgery::pcgrad(surgery::GradientSet{}, 0), DomainError);
  auto bad = make_set({{1.0, 2.0}});
  bad.add("short", ad::ParamVector::from_values(layout(1), {1.0}));
  EXPECT_THROW(surgery::pcgrad(bad, 0), ShapeError);
  EXPECT_THROW(surgery::pcgrad(make_set({{1.0, NAN}}), 0), DomainError);
}

TEST(Pcgrad, SameSeedSameResult) {
  Rng rng(5);
  const auto gs = random_set(rng, 4, 64);
  const auto a = surgery::pcgrad(make_set(gs), 9), b = surgery::pcgrad(make_set(gs), 9);
  for (std::size_t c = 0; c < 64; ++c) EXPECT_EQ(a.combined.values()[c], b.combined.values()[c]);
}
