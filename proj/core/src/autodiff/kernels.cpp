#include "kernels.hpp"

#include <algorithm>
#include <cmath>

#include "ini/autodiff/ops.hpp"
#include "ini/error.hpp"

namespace ini::ad::detail {

namespace {

template <typename F>
Array unary(const Array& a, F f) {
  Array out{a.shape, std::vector<double>(a.data.size())};
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = f(a.data[i]);
  return out;
}

template <typename F>
Array binary(const Array& a, const Array& b, F f) {
  Array out{a.shape, std::vector<double>(a.data.size())};
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = f(a.data[i], b.data[i]);
  return out;
}

std::size_t rows_of(const Array& a) { return a.shape.size() == 2 ? a.shape[0] : 1; }
std::size_t cols_of(const Array& a) { return a.shape.back(); }

Array matmul_kernel(const Array& a, const Array& b) {
  const std::size_t m = a.shape[0], k = a.shape[1], n = b.shape[1];
  Array out{{m, n}, std::vector<double>(m * n, 0.0)};
  const double* pa = a.data.data();
  const double* pb = b.data.data();
  double* po = out.data.data();
  // i-k-j order: each output element accumulates over k in index order.
  for (std::size_t i = 0; i < m; ++i) {
    double* row = po + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = pa[i * k + p];
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += aip * brow[j];
    }
  }
  return out;
}

Array transpose_kernel(const Array& a) {
  const std::size_t m = rows_of(a), n = cols_of(a);
  Array out{{n, m}, std::vector<double>(m * n)};
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.data[j * m + i] = a.data[i * n + j];
  return out;
}

Array log_softmax_kernel(const Array& a) {
  const std::size_t m = rows_of(a), n = cols_of(a);
  Array out{a.shape, std::vector<double>(a.data.size())};
  for (std::size_t i = 0; i < m; ++i) {
    const double* x = a.data.data() + i * n;
    double peak = x[0];
    for (std::size_t j = 1; j < n; ++j) peak = std::max(peak, x[j]);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += std::exp(x[j] - peak);
    const double lse = peak + std::log(total);
    for (std::size_t j = 0; j < n; ++j) out.data[i * n + j] = x[j] - lse;
  }
  return out;
}

Tensor mask_of(const Tensor& a, bool (*keep)(double, double), double arg) {
  auto vals = a.values();
  std::vector<double> m(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) m[i] = keep(vals[i], arg) ? 1.0 : 0.0;
  return Tensor::from(a.shape(), std::move(m));
}

}  // namespace

Array evaluate(OpKind op, const OpAttrs& attrs, std::span<const Array* const> in) {
  switch (op) {
    case OpKind::kVariable:
    case OpKind::kConstant:
      throw Error("leaf nodes have no forward rule");
    case OpKind::kAdd:
      return binary(*in[0], *in[1], [](double x, double y) { return x + y; });
    case OpKind::kSub:
      return binary(*in[0], *in[1], [](double x, double y) { return x - y; });
    case OpKind::kMul:
      return binary(*in[0], *in[1], [](double x, double y) { return x * y; });
    case OpKind::kDiv:
      return binary(*in[0], *in[1], [](double x, double y) { return x / y; });
    case OpKind::kNeg:
      return unary(*in[0], [](double x) { return -x; });
    case OpKind::kScale: {
      const double c = attrs.scalar;
      return unary(*in[0], [c](double x) { return c * x; });
    }
    case OpKind::kShift: {
      const double c = attrs.scalar;
      return unary(*in[0], [c](double x) { return x + c; });
    }
    case OpKind::kMatMul:
      return matmul_kernel(*in[0], *in[1]);
    case OpKind::kTranspose:
      return transpose_kernel(*in[0]);
    case OpKind::kAddRowVector: {
      const Array& a = *in[0];
      const Array& v = *in[1];
      const std::size_t m = rows_of(a), n = cols_of(a);
      Array out{a.shape, a.data};
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.data[i * n + j] += v.data[j];
      return out;
    }
    case OpKind::kSumRows: {
      const Array& a = *in[0];
      const std::size_t m = rows_of(a), n = cols_of(a);
      Array out{{n}, std::vector<double>(n, 0.0)};
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.data[j] += a.data[i * n + j];
      return out;
    }
    case OpKind::kSumCols: {
      const Array& a = *in[0];
      const std::size_t m = rows_of(a), n = cols_of(a);
      Array out{{m}, std::vector<double>(m, 0.0)};
      for (std::size_t i = 0; i < m; ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) total += a.data[i * n + j];
        out.data[i] = total;
      }
      return out;
    }
    case OpKind::kBroadcastRows: {
      const Array& v = *in[0];
      const std::size_t m = attrs.extent, n = v.data.size();
      Array out{{m, n}, std::vector<double>(m * n)};
      for (std::size_t i = 0; i < m; ++i) std::copy(v.data.begin(), v.data.end(), out.data.begin() + i * n);
      return out;
    }
    case OpKind::kBroadcastCols: {
      const Array& v = *in[0];
      const std::size_t m = v.data.size(), n = attrs.extent;
      Array out{{m, n}, std::vector<double>(m * n)};
      for (std::size_t i = 0; i < m; ++i) std::fill_n(out.data.begin() + i * n, n, v.data[i]);
      return out;
    }
    case OpKind::kSum: {
      double total = 0.0;
      for (double x : in[0]->data) total += x;
      return Array{{1}, {total}};
    }
    case OpKind::kExpand:
      return Array{attrs.shape, std::vector<double>(shape_size(attrs.shape), in[0]->data[0])};
    case OpKind::kRelu:
      return unary(*in[0], [](double x) { return x > 0.0 ? x : 0.0; });
    case OpKind::kTanh:
      return unary(*in[0], [](double x) { return std::tanh(x); });
    case OpKind::kExp:
      return unary(*in[0], [](double x) { return std::exp(x); });
    case OpKind::kLog:
      return unary(*in[0], [](double x) { return std::log(x); });
    case OpKind::kClampMin: {
      const double floor = attrs.scalar;
      return unary(*in[0], [floor](double x) { return x < floor ? floor : x; });
    }
    case OpKind::kAbs:
      return unary(*in[0], [](double x) { return std::fabs(x); });
    case OpKind::kSqrt:
      return unary(*in[0], [](double x) { return std::sqrt(x); });
    case OpKind::kSafeReciprocal:
      return unary(*in[0], [](double x) { return x > 0.0 ? 1.0 / x : 0.0; });
    case OpKind::kLogSoftmax:
      return log_softmax_kernel(*in[0]);
    case OpKind::kSlice: {
      const Array& a = *in[0];
      return Array{{attrs.extent},
                   std::vector<double>(a.data.begin() + static_cast<std::ptrdiff_t>(attrs.offset),
                                       a.data.begin() + static_cast<std::ptrdiff_t>(attrs.offset + attrs.extent))};
    }
    case OpKind::kPad: {
      const Array& a = *in[0];
      Array out{{attrs.extent}, std::vector<double>(attrs.extent, 0.0)};
      std::copy(a.data.begin(), a.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(attrs.offset));
      return out;
    }
    case OpKind::kReshape:
      return Array{attrs.shape, in[0]->data};
  }
  throw Error("unknown op");
}

std::vector<Tensor> vjp(OpKind op, const OpAttrs& attrs, std::span<const Tensor> in,
                        const Tensor& out, const Tensor& g, std::array<bool, 2> needs) {
  // Gradients for inputs nobody asked for are left undefined.
  const auto when = [&](std::size_t k, auto make) { return needs[k] ? make() : Tensor(); };
  switch (op) {
    case OpKind::kVariable:
    case OpKind::kConstant:
      return {};
    case OpKind::kAdd:
      return {g, g};
    case OpKind::kSub:
      return {when(0, [&] { return g; }), when(1, [&] { return neg(g); })};
    case OpKind::kMul:
      return {when(0, [&] { return mul(g, in[1]); }), when(1, [&] { return mul(g, in[0]); })};
    case OpKind::kDiv:
      return {when(0, [&] { return div(g, in[1]); }),
              when(1, [&] { return neg(mul(g, div(out, in[1]))); })};
    case OpKind::kNeg:
      return {neg(g)};
    case OpKind::kScale:
      return {scale(g, attrs.scalar)};
    case OpKind::kShift:
      return {g};
    case OpKind::kMatMul:
      return {when(0, [&] { return matmul(g, transpose(in[1])); }),
              when(1, [&] { return matmul(transpose(in[0]), g); })};
    case OpKind::kTranspose:
      return {transpose(g)};
    case OpKind::kAddRowVector:
      return {when(0, [&] { return g; }), when(1, [&] { return sum_rows(g); })};
    case OpKind::kSumRows:
      return {broadcast_rows(g, in[0].rows())};
    case OpKind::kSumCols:
      return {broadcast_cols(g, in[0].cols())};
    case OpKind::kBroadcastRows:
      return {sum_rows(g)};
    case OpKind::kBroadcastCols:
      return {sum_cols(g)};
    case OpKind::kSum:
      return {expand(g, in[0].shape())};
    case OpKind::kExpand:
      return {sum(g)};
    case OpKind::kRelu:
      return {mul(g, mask_of(in[0], [](double x, double) { return x > 0.0; }, 0.0))};
    case OpKind::kTanh:
      return {mul(g, shift(neg(mul(out, out)), 1.0))};
    case OpKind::kExp:
      return {mul(g, out)};
    case OpKind::kLog:
      return {div(g, in[0])};
    case OpKind::kClampMin:
      return {mul(g, mask_of(in[0], [](double x, double floor) { return x > floor; }, attrs.scalar))};
    case OpKind::kAbs: {
      auto vals = in[0].values();
      std::vector<double> sign(vals.size());
      for (std::size_t i = 0; i < vals.size(); ++i) sign[i] = vals[i] > 0.0 ? 1.0 : (vals[i] < 0.0 ? -1.0 : 0.0);
      return {mul(g, Tensor::from(in[0].shape(), std::move(sign)))};
    }
    case OpKind::kSqrt:
      return {scale(mul(g, safe_reciprocal(out)), 0.5)};
    case OpKind::kSafeReciprocal:
      return {neg(mul(g, mul(out, out)))};
    case OpKind::kLogSoftmax: {
      const Tensor probs = exp(out);
      return {sub(g, mul(probs, broadcast_cols(sum_cols(g), in[0].cols())))};
    }
    case OpKind::kSlice:
      return {pad(g, attrs.offset, in[0].size())};
    case OpKind::kPad:
      return {slice(g, attrs.offset, in[0].size())};
    case OpKind::kReshape:
      return {reshape(g, in[0].shape())};
  }
  throw Error("unknown op");
}

}  // namespace ini::ad::detail
