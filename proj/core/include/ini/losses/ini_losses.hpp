#pragma once

#include <string>

#include "ini/autodiff/param_vector.hpp"
#include "ini/autodiff/tensor.hpp"
#include "ini/nets/classifier.hpp"

namespace ini::losses {

/// Which argument order the information gain uses.
enum class KlDirection {
  kCloneToVictim,  ///< KL(C(x) || V(x)), the default
  kVictimToClone,  ///< KL(V(x) || C(x))
};

enum class GradNorm { kL2, kL1 };

/// How ỹᵀG and yᵀG are formed.
enum class JacobianRoute {
  kHigherOrder,   ///< one recorded backward pass through the weighted log-probabilities
  kMaterialized,  ///< B*K backward passes, one per (sample, class), then a left product
};

std::string to_string(KlDirection direction);
KlDirection parse_kl_direction(const std::string& name);
std::string to_string(GradNorm norm);
GradNorm parse_grad_norm(const std::string& name);
std::string to_string(JacobianRoute route);
JacobianRoute parse_jacobian_route(const std::string& name);

struct LossCoefficients {
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double beta = 0.0;

  /// Throws DomainError unless all three are finite and non-negative.
  void validate() const;
};

struct LossOptions {
  KlDirection kl_direction = KlDirection::kCloneToVictim;
  GradNorm grad_norm = GradNorm::kL2;
  JacobianRoute route = JacobianRoute::kHigherOrder;
};

/// ∇_θC Σ_b Σ_i w_bi log C(x_b)_i, i.e. wᵀG summed over the batch.
///
/// When `weights` is attached to a tape, the result is attached to the same
/// tape and stays differentiable with respect to whatever produced the
/// weights. The clone's parameters are always treated as a fresh leaf.
ad::ParamVector weighted_logprob_grad(const nets::Classifier& clone, const ad::Tensor& x,
                                      const ad::Tensor& weights,
                                      JacobianRoute route = JacobianRoute::kHigherOrder);

/// Per-sample log-probability Jacobian of the clone as a [B*K, P] matrix;
/// row b*K+i holds ∇_θC log C(x_b)_i.
ad::Tensor logprob_jacobian(const nets::Classifier& clone, const ad::Tensor& x);

/// cos(ỹᵀG, yᵀG) with ỹ = predict_proba(victim, x). Differentiable with
/// respect to the victim parameters when the victim is tracked.
///
/// Throws DegenerateNormError with which() == "victim_output" or "label" when
/// the corresponding side has a vanishing norm.
ad::Tensor isolation_loss(const nets::Classifier& victim, const nets::Classifier& clone,
                          const ad::Tensor& x, const ad::Tensor& y_true,
                          JacobianRoute route = JacobianRoute::kHigherOrder);

/// Batch-mean KL between clone and victim outputs on `x_ood`.
ad::Tensor information_gain(const nets::Classifier& clone, const nets::Classifier& victim,
                            const ad::Tensor& x_ood,
                            KlDirection direction = KlDirection::kCloneToVictim);

/// L_ig + beta * |∇_θC L_ig|. The clone is tracked internally on the
/// victim's tape (or on a private tape when the victim is detached, in which
/// case the result is detached too).
ad::Tensor induction_loss(const nets::Classifier& clone, const nets::Classifier& victim,
                          const ad::Tensor& x_ood, double beta, const LossOptions& options = {});

struct LossInputs {
  const nets::Classifier* victim = nullptr;
  const nets::Classifier* clone = nullptr;
  ad::Tensor x_id;
  /// One-hot (or soft) targets for x_id.
  ad::Tensor y_id;
  ad::Tensor x_ood;
};

/// Loss values and their gradients with respect to the victim parameters.
/// `grad_ind` equals grad_ig + beta * grad_gradnorm; `grad_total` is the
/// coefficient-weighted sum without surgery.
struct LossBundle {
  double l_ben = 0.0;
  double l_iso = 0.0;
  double l_ig = 0.0;
  double gradnorm = 0.0;
  double l_ind = 0.0;
  double total = 0.0;
  ad::ParamVector grad_ben;
  ad::ParamVector grad_iso;
  ad::ParamVector grad_ig;
  ad::ParamVector grad_gradnorm;
  ad::ParamVector grad_ind;
  ad::ParamVector grad_total;
};

/// Computes every term of the defended objective. With `benign_only` the
/// isolation and induction terms are skipped and their fields stay zero.
LossBundle total_loss(const LossInputs& inputs, const LossCoefficients& coefficients,
                      const LossOptions& options = {}, bool benign_only = false);

/// a + factor * b, elementwise on values.
ad::ParamVector axpy(const ad::ParamVector& a, double factor, const ad::ParamVector& b);

}  // namespace ini::losses
