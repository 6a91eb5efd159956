#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ini/autodiff/param_vector.hpp"
#include "ini/autodiff/tape.hpp"
#include "ini/autodiff/tensor.hpp"

namespace ini::nets {

enum class Activation { kRelu, kTanh };

std::string to_string(Activation activation);
Activation parse_activation(const std::string& name);

/// Layer widths from input to class count, e.g. {16, 64, 64, 4}.
struct Architecture {
  std::vector<std::size_t> layer_dims;
  Activation activation = Activation::kRelu;

  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t num_classes() const { return layer_dims.back(); }
  std::size_t num_layers() const { return layer_dims.size() - 1; }
  /// Canonical text form, e.g. "mlp:16-64-64-4:relu".
  std::string descriptor() const;
  void validate() const;

  bool operator==(const Architecture&) const = default;
};

/// Multilayer perceptron with a softmax head. Serves as both victim and
/// clone. Weight segments are "W<l>" with shape [in, out] and "b<l>" with
/// shape [out].
///
/// Inference is read-only and may run concurrently; anything that replaces
/// the parameters needs exclusive access.
class Classifier {
 public:
  /// Seeded uniform fan-in initialization, U(-1/sqrt(fan_in), 1/sqrt(fan_in))
  /// for weights and biases, rounded to float32.
  Classifier(Architecture architecture, std::uint64_t seed);
  Classifier(Architecture architecture, ad::ParamVector params, std::uint64_t seed);

  static std::shared_ptr<const ad::ParamLayout> layout_for(const Architecture& architecture);

  const Architecture& architecture() const noexcept { return arch_; }
  const ad::ParamVector& params() const noexcept { return params_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t num_params() const { return params_.size(); }

  void set_params(ad::ParamVector params);
  Classifier with_params(ad::ParamVector params) const;
  /// Copy whose parameters are a fresh differentiable leaf on `tape`.
  Classifier tracked(ad::Tape& tape) const;
  bool is_tracked() const noexcept { return params_.tracked(); }

  /// Rounds every parameter to the nearest float32 value.
  void round_to_float();

  /// Final-layer logits [B,K]. Differentiable with respect to the parameters
  /// and/or `x` when either is attached to a tape.
  ad::Tensor logits(const ad::Tensor& x) const;
  ad::Tensor log_proba(const ad::Tensor& x) const;
  /// Softmax probabilities [B,K].
  ad::Tensor predict_proba(const ad::Tensor& x) const;
  /// One-hot of the row argmax; ties go to the lowest class index.
  ad::Tensor hard_label(const ad::Tensor& x) const;
  std::vector<int> predict(const ad::Tensor& x) const;

 private:
  void check_input(const ad::Tensor& x) const;

  Architecture arch_;
  ad::ParamVector params_;
  std::uint64_t seed_ = 0;
};

/// Row argmax with lowest-index tie-break.
std::vector<int> argmax_rows(const ad::Tensor& scores);
ad::Tensor one_hot_argmax(const ad::Tensor& scores);

/// Fraction of rows whose predicted class equals `labels`.
double accuracy(const Classifier& model, const ad::Tensor& x, std::span<const int> labels);

}  // namespace ini::nets
