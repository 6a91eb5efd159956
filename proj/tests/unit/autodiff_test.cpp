#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "ini/autodiff/functional.hpp"
#include "ini/autodiff/grad.hpp"
#include "ini/autodiff/ops.hpp"
#include "ini/autodiff/param_vector.hpp"
#include "ini/autodiff/tape.hpp"
#include "ini/error.hpp"
#include "ini/nets/classifier.hpp"
#include "ini/rng.hpp"
#include "reference.hpp"

using namespace ini;
using ad::Tensor;

namespace {

Tensor random_tensor(ad::Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  std::vector<double> v(ad::shape_size(shape));
  for (auto& e : v) e = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v));
}

Tensor random_simplex(std::size_t rows, std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(rows * k);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += v[r * k + i] = rng.uniform(0.01, 1.0);
    for (std::size_t i = 0; i < k; ++i) v[r * k + i] /= s;
  }
  return Tensor::from({rows, k}, std::move(v));
}

// Compares the tape gradient of f at x with central differences of f.
void expect_matches_fd(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double tol = 1e-6) {
  ad::Tape tape;
  const Tensor leaf = tape.variable(x);
  const Tensor g = ad::gradient(f(leaf), leaf, false);
  const auto fd = testref::fd_gradient(
      [&](const testref::Vec& p) { return f(Tensor::from(x.shape(), p)).item(); }, testref::flatten(x), 1e-5);
  EXPECT_LT(testref::max_relative_error(testref::flatten(g), fd, 1e-6), tol);
}

}  // namespace

TEST(Autodiff, SquareHasDerivativeSix) {
  ad::Tape tape;
  const Tensor x = tape.variable(Tensor::scalar(3.0));
  EXPECT_DOUBLE_EQ(ad::gradient(ad::mul(x, x), x, false).item(), 6.0);
}

TEST(Autodiff, CubeSecondDerivativeAtTwoIsTwelve) {
  ad::Tape tape;
  const Tensor x = tape.variable(Tensor::scalar(2.0));
  const Tensor y = ad::mul(ad::mul(x, x), x);
  const Tensor dy = ad::gradient(y, x, true);
  EXPECT_DOUBLE_EQ(dy.item(), 12.0);
  EXPECT_DOUBLE_EQ(ad::gradient(dy, x, false).item(), 12.0);
}

TEST(Autodiff, ElementwiseOpsMatchFiniteDifferences) {
  const Tensor x = random_tensor({3, 4}, 1, 0.2, 2.0);
  const Tensor c = random_tensor({3, 4}, 2, 0.5, 1.5);
  using F = std::function<Tensor(const Tensor&)>;
  const std::vector<F> fs = {
      [&](const Tensor& a) { return ad::sum(ad::add(a, c)); },
      [&](const Tensor& a) { return ad::sum(ad::mul(ad::sub(a, c), a)); },
      [&](const Tensor& a) { return ad::sum(ad::div(c, a)); },
      [&](const Tensor& a) { return ad::sum(ad::div(a, c)); },
      [&](const Tensor& a) { return ad::sum(ad::exp(ad::neg(a))); },
      [&](const Tensor& a) { return ad::sum(ad::log(a)); },
      [&](const Tensor& a) { return ad::sum(ad::sqrt(a)); },
      [&](const Tensor& a) { return ad::sum(ad::tanh(a)); },
      [&](const Tensor& a) { return ad::sum(ad::mul(ad::scale(a, 3.0), ad::shift(a, -1.0))); },
      [&](const Tensor& a) { return ad::sum(ad::mul(ad::relu(ad::shift(a, -1.0)), a)); },
      [&](const Tensor& a) { return ad::sum(ad::mul(ad::abs(ad::shift(a, -1.1)), a)); },
      [&](const Tensor& a) { return ad::sum(ad::mul(ad::clamp_min(a, 1.0), a)); },
      [&](const Tensor& a) { return ad::sum(ad::safe_reciprocal(a)); },
  };
  for (std::size_t i = 0; i < fs.size(); ++i) {
    SCOPED_TRACE(i);
    expect_matches_fd(fs[i], x);
  }
}

TEST(Autodiff, StructuralOpsMatchFiniteDifferences) {
  const Tensor x = random_tensor({3, 4}, 3);
  const Tensor w = random_tensor({4, 2}, 4);
  const Tensor v = random_tensor({4}, 5);
  const Tensor t = random_simplex(3, 4, 6);
  using F = std::function<Tensor(const Tensor&)>;
  const std::vector<F> fs = {
      [&](const Tensor& a) { return ad::sum(ad::exp(ad::matmul(a, w))); },
      [&](const Tensor& a) { return ad::sum(ad::exp(ad::transpose(a))); },
      [&](const Tensor& a) { return ad::sum(ad::exp(ad::add_row_vector(a, v))); },
      [&](const Tensor& a) { return ad::dot(ad::sum_rows(a), v); },
      [&](const Tensor& a) { return ad::sum(ad::exp(ad::sum_cols(a))); },
      [&](const Tensor& a) { return ad::sum(ad::mul(ad::broadcast_rows(ad::sum_rows(a), 2), ad::broadcast_rows(v, 2))); },
      [&](const Tensor& a) { return ad::sum(ad::exp(ad::broadcast_cols(ad::sum_cols(a), 3))); },
      [&](const Tensor& a) { return ad::sum(ad::mul(ad::expand(ad::sum(a), {2, 2}), ad::expand(ad::mean(a), {2, 2}))); },
      [&](const Tensor& a) { return ad::sum(ad::mul(ad::log_softmax(a), t)); },
      [&](const Tensor& a) { return ad::sum(ad::mul(ad::softmax(a), t)); },
      [&](const Tensor& a) { return ad::sum(ad::exp(ad::slice(ad::reshape(a, {12}), 3, 5))); },
      [&](const Tensor& a) { return ad::sum(ad::exp(ad::pad(ad::reshape(a, {12}), 2, 20))); },
      [&](const Tensor& a) { return ad::softmax_cross_entropy(a, t); },
      [&](const Tensor& a) { return ad::kl_divergence(ad::softmax(a), t); },
      [&](const Tensor& a) { return ad::kl_divergence(t, ad::softmax(a)); },
      [&](const Tensor& a) { return ad::l2_norm(ad::reshape(a, {12})); },
      [&](const Tensor& a) { return ad::l1_norm(ad::reshape(a, {12})); },
      [&](const Tensor& a) { return ad::cosine_similarity(ad::reshape(a, {12}), ad::reshape(ad::exp(a), {12})); },
  };
  for (std::size_t i = 0; i < fs.size(); ++i) {
    SCOPED_TRACE(i);
    expect_matches_fd(fs[i], x);
  }
}

TEST(Autodiff, SecondOrderOfQuadraticGradientNorm) {
  // g(w) = 1/2 wᵀAw with symmetric A, so |∇g|² = wᵀA²w and its gradient is 2A²w.
  const std::size_t n = 5;
  Rng rng(7);
  std::vector<double> m(n * n);
  for (auto& e : m) e = rng.uniform(-1.0, 1.0);
  std::vector<double> a(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i * n + j] = m[i * n + j] + m[j * n + i];
  const Tensor A = Tensor::from({n, n}, a);
  const Tensor w0 = random_tensor({n, 1}, 8);

  ad::Tape tape;
  const Tensor w = tape.variable(w0);
  const Tensor g = ad::scale(ad::sum(ad::mul(w, ad::matmul(A, w))), 0.5);
  const Tensor dg = ad::gradient(g, w, true);
  const Tensor f = ad::sum(ad::mul(dg, dg));
  const Tensor df = ad::gradient(f, w, false);

  std::vector<long double> aw(n, 0), a2w(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) aw[i] += static_cast<long double>(a[i * n + j]) * w0[j];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a2w[i] += static_cast<long double>(a[i * n + j]) * aw[j];
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(df[i], static_cast<double>(2 * a2w[i]), 1e-6);
}

TEST(Autodiff, TwoLayerCrossEntropyMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const nets::Classifier net({{5, 8, 3}, nets::Activation::kTanh}, seed);
    const Tensor x = random_tensor({6, 5}, 100 + seed);
    const Tensor t = random_simplex(6, 3, 200 + seed);
    ad::Tape tape;
    const nets::Classifier tracked = net.tracked(tape);
    const auto g = ad::grad(ad::softmax_cross_entropy(tracked.logits(x), t), tracked.params(), false);
    const auto fd = testref::fd_gradient(
        [&](const testref::Vec& p) {
          return ad::softmax_cross_entropy(net.with_params(net.params().with_values(p)).logits(x), t).item();
        },
        testref::flatten(net.params().flat()), 1e-4);
    EXPECT_LT(testref::max_relative_error(testref::flatten(g.flat()), fd, 1e-8), 1e-4);
  }
}

TEST(Autodiff, ErrorsOnNonScalarAndDetachedOutputs) {
  ad::Tape tape;
  const Tensor x = tape.variable(random_tensor({3}, 1));
  EXPECT_THROW(ad::gradient(ad::exp(x), x, false), ShapeError);
  EXPECT_THROW(ad::gradient(Tensor::scalar(1.0), x, false), DetachedError);
  ad::Tape other;
  const Tensor y = other.variable(random_tensor({3}, 2));
  EXPECT_THROW(ad::gradient(ad::sum(x), y, false), DetachedError);
}

TEST(Autodiff, UnreachedLeafGetsZeros) {
  ad::Tape tape;
  const Tensor x = tape.variable(random_tensor({3}, 1));
  const Tensor y = tape.variable(random_tensor({4}, 2));
  const auto gs = ad::gradients(ad::sum(ad::exp(x)), std::vector<Tensor>{x, y}, false);
  for (double v : gs[1].values()) EXPECT_EQ(v, 0.0);
}

TEST(Autodiff, HigherOrderPassAppendsNewGeneration) {
  ad::Tape tape;
  const Tensor x = tape.variable(random_tensor({4}, 3));
  const Tensor y = ad::sum(ad::mul(ad::exp(x), x));
  const std::size_t before = tape.size();
  (void)ad::gradient(y, x, true);
  ASSERT_GT(tape.size(), before);
  for (std::size_t i = 0; i < tape.size(); ++i) {
    const auto& node = tape.node(i);
    for (std::uint8_t k = 0; k < node.arity; ++k) EXPECT_LT(node.inputs[k], i);
    EXPECT_EQ(node.generation, i < before ? 0 : 1);
  }
}

TEST(Autodiff, ReplayIsBitIdentical) {
  const nets::Classifier net({{4, 6, 3}, nets::Activation::kRelu}, 9);
  ad::Tape tape;
  const nets::Classifier tracked = net.tracked(tape);
  const Tensor loss = ad::softmax_cross_entropy(tracked.logits(random_tensor({5, 4}, 10)), random_simplex(5, 3, 11));
  (void)ad::grad(ad::l2_norm(ad::grad(loss, tracked.params(), true).flat()), tracked.params(), false);
  EXPECT_TRUE(tape.replay_matches());
}

TEST(Autodiff, SoftmaxCrossEntropyExamples) {
  const Tensor logits = Tensor::full({1, 4}, 0.3);
  EXPECT_NEAR(ad::softmax_cross_entropy(logits, Tensor::from({1, 4}, {0, 1, 0, 0})).item(), std::log(4.0), 1e-15);

  const Tensor z = random_tensor({4, 5}, 12, -4.0, 4.0);
  const Tensor t = random_simplex(4, 5, 13);
  ad::Tape tape;
  const Tensor leaf = tape.variable(z);
  const Tensor g = ad::gradient(ad::softmax_cross_entropy(leaf, t), leaf, false);
  const auto p = testref::softmax_rows(testref::flatten(z), 4, 5);
  long double ce = 0;
  for (std::size_t b = 0; b < 4; ++b) {
    long double mx = z(b, 0), s = 0;
    for (std::size_t i = 1; i < 5; ++i) mx = std::max<long double>(mx, z(b, i));
    for (std::size_t i = 0; i < 5; ++i) s += std::exp(static_cast<long double>(z(b, i)) - mx);
    for (std::size_t i = 0; i < 5; ++i) ce -= t(b, i) * (z(b, i) - mx - std::log(s));
  }
  EXPECT_NEAR(ad::softmax_cross_entropy(z, t).item(), static_cast<double>(ce / 4), 1e-10);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_NEAR(g[i], (p[i] - t[i]) / 4.0, 1e-15);
}

TEST(Autodiff, SoftmaxCrossEntropyRejectsBadTargets) {
  const Tensor z = random_tensor({2, 3}, 1);
  EXPECT_THROW(ad::softmax_cross_entropy(z, Tensor::from({2, 3}, {0.5, 0.5, 0.1, 1, 0, 0})), DomainError);
  EXPECT_THROW(ad::softmax_cross_entropy(z, Tensor::from({2, 2}, {1, 0, 0, 1})), ShapeError);
}

TEST(Autodiff, KlDivergenceExamples) {
  EXPECT_NEAR(ad::kl_divergence(Tensor::from({1, 2}, {1, 0}), Tensor::from({1, 2}, {0.5, 0.5})).item(), std::log(2.0),
              1e-15);
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Tensor p = random_simplex(3, 6, s);
    const Tensor q = random_simplex(3, 6, 1000 + s);
    EXPECT_EQ(ad::kl_divergence(p, p).item(), 0.0);
    long double direct = 0;
    for (std::size_t i = 0; i < 18; ++i) direct += p[i] * (std::log(static_cast<long double>(p[i])) - std::log(static_cast<long double>(q[i])));
    const double kl = ad::kl_divergence(p, q).item();
    EXPECT_NEAR(kl, static_cast<double>(direct / 3), 1e-10);
    EXPECT_GE(kl, 0.0);
  }
  EXPECT_THROW(ad::kl_divergence(random_simplex(2, 3, 1), random_simplex(3, 3, 2)), ShapeError);
}

TEST(Autodiff, CosineSimilarityExamples) {
  auto cs = [](std::vector<double> u, std::vector<double> v) {
    const std::size_t n = u.size();
    return ad::cosine_similarity(Tensor::from({n}, std::move(u)), Tensor::from({n}, std::move(v))).item();
  };
  EXPECT_DOUBLE_EQ(cs({1, 0}, {1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(cs({1, 0}, {0, 1}), 0.0);
  EXPECT_NEAR(cs({1, 2}, {2, 4}), 1.0, 1e-15);
  try {
    cs({1, 2}, {0, 0});
    FAIL();
  } catch (const DegenerateNormError& e) {
    EXPECT_EQ(e.which(), "v");
  }
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Tensor u = random_tensor({20}, s), v = random_tensor({20}, 500 + s);
    const double c = ad::cosine_similarity(u, v).item();
    EXPECT_LE(std::fabs(c), 1.0 + 1e-9);
    EXPECT_NEAR(ad::cosine_similarity(u, ad::scale(v, 3.7)).item(), c, 1e-15);
  }
}

TEST(ParamVector, FlattenUnflattenRoundTripAndContiguousSegments) {
  auto layout = std::make_shared<const ad::ParamLayout>(
      std::vector<std::pair<std::string, ad::Shape>>{{"W0", {3, 4}}, {"b0", {4}}, {"W1", {4, 2}}});
  std::size_t expected = 0;
  for (const auto& s : layout->segments()) {
    EXPECT_EQ(s.offset, expected);
    expected += ad::shape_size(s.shape);
  }
  EXPECT_EQ(layout->size(), expected);
  const auto v = ad::ParamVector::from_values(layout, testref::flatten(random_tensor({expected}, 3)));
  const auto back = ad::ParamVector::flatten(layout, v.unflatten());
  ASSERT_EQ(back.size(), v.size());
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(back.values()[i], v.values()[i]);
  EXPECT_EQ(layout->index_of("b0"), 1u);
}

TEST(Rng, SameSeedSameStreamAndDerivedSeedsDiffer) {
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  EXPECT_NE(derive_seed(1, 2), derive_seed(1, 3));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 2));
  Rng c(9);
  auto perm = c.permutation(50);
  std::sort(perm.begin(), perm.end());
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(perm[i], i);
}
