#include "ini/losses/ini_losses.hpp"

#include <cmath>
#include <optional>

#include "ini/autodiff/functional.hpp"
#include "ini/autodiff/grad.hpp"
#include "ini/autodiff/ops.hpp"
#include "ini/autodiff/tape.hpp"
#include "ini/error.hpp"

namespace ini::losses {

std::string to_string(KlDirection direction) {
  return direction == KlDirection::kCloneToVictim ? "clone_to_victim" : "victim_to_clone";
}

KlDirection parse_kl_direction(const std::string& name) {
  if (name == "clone_to_victim") return KlDirection::kCloneToVictim;
  if (name == "victim_to_clone") return KlDirection::kVictimToClone;
  throw Error("unknown KL direction '" + name + "'");
}

std::string to_string(GradNorm norm) { return norm == GradNorm::kL2 ? "l2" : "l1"; }

GradNorm parse_grad_norm(const std::string& name) {
  if (name == "l2") return GradNorm::kL2;
  if (name == "l1") return GradNorm::kL1;
  throw Error("unknown gradient norm '" + name + "'");
}

std::string to_string(JacobianRoute route) {
  return route == JacobianRoute::kHigherOrder ? "higher_order" : "materialized";
}

JacobianRoute parse_jacobian_route(const std::string& name) {
  if (name == "higher_order") return JacobianRoute::kHigherOrder;
  if (name == "materialized") return JacobianRoute::kMaterialized;
  throw Error("unknown Jacobian route '" + name + "'");
}

void LossCoefficients::validate() const {
  for (double c : {gamma1, gamma2, beta}) {
    if (!std::isfinite(c) || c < 0.0) throw DomainError("loss coefficients must be finite and non-negative");
  }
}

namespace {

void check_weights(const nets::Classifier& clone, const ad::Tensor& x, const ad::Tensor& weights) {
  if (weights.rank() != 2 || weights.rows() != x.rows() || weights.cols() != clone.architecture().num_classes()) {
    throw ShapeError("weighted_logprob_grad: weights " + ad::shape_string(weights.shape()) + " for batch " +
                     ad::shape_string(x.shape()) + " and " + std::to_string(clone.architecture().num_classes()) +
                     " classes");
  }
  for (double w : weights.values()) {
    if (!(w >= 0.0)) throw DomainError("weighted_logprob_grad: weights must be non-negative");
  }
}

ad::Tensor grad_norm(const ad::Tensor& g, GradNorm norm) {
  return norm == GradNorm::kL2 ? ad::l2_norm(g) : ad::l1_norm(g);
}

struct InductionParts {
  ad::Tensor l_ig;
  ad::Tensor gradnorm;
};

// Both models must already live on `tape` (the clone as a fresh leaf).
InductionParts induction_parts(const nets::Classifier& clone_t, const nets::Classifier& victim,
                               const ad::Tensor& x_ood, const LossOptions& options) {
  InductionParts parts;
  parts.l_ig = information_gain(clone_t, victim, x_ood, options.kl_direction);
  const ad::Tensor g = ad::gradient(parts.l_ig, clone_t.params().flat(), true);
  parts.gradnorm = grad_norm(g, options.grad_norm);
  return parts;
}

ad::ParamVector victim_grad(const ad::Tensor& loss, const nets::Classifier& victim_t) {
  return ad::grad(loss, victim_t.params(), false);
}

}  // namespace

ad::Tensor logprob_jacobian(const nets::Classifier& clone, const ad::Tensor& x) {
  ad::Tape tape;
  const nets::Classifier clone_t = clone.tracked(tape);
  const ad::Tensor logp = clone_t.log_proba(x.detach());
  const std::size_t rows = logp.size();
  const ad::Tensor flat = ad::reshape(logp, {rows});
  const std::size_t p = clone.num_params();
  std::vector<double> jac(rows * p);
  for (std::size_t r = 0; r < rows; ++r) {
    const ad::Tensor g = ad::gradient(ad::slice(flat, r, 1), clone_t.params().flat(), false);
    auto vals = g.values();
    std::copy(vals.begin(), vals.end(), jac.begin() + static_cast<std::ptrdiff_t>(r * p));
  }
  return ad::Tensor::from({rows, p}, std::move(jac));
}

ad::ParamVector weighted_logprob_grad(const nets::Classifier& clone, const ad::Tensor& x,
                                      const ad::Tensor& weights, JacobianRoute route) {
  check_weights(clone, x, weights);
  const auto& layout = clone.params().layout_ptr();

  if (route == JacobianRoute::kMaterialized) {
    const ad::Tensor jac = logprob_jacobian(clone, x);
    const ad::Tensor w_row = ad::reshape(weights, {1, weights.size()});
    return ad::ParamVector(layout, ad::reshape(ad::matmul(w_row, jac), {clone.num_params()}));
  }

  if (weights.tracked()) {
    ad::Tape& tape = *weights.tape();
    const nets::Classifier clone_t = clone.tracked(tape);
    const ad::Tensor objective = ad::sum(ad::mul(weights, clone_t.log_proba(x)));
    return ad::ParamVector(layout, ad::gradient(objective, clone_t.params().flat(), true));
  }
  ad::Tape tape;
  const nets::Classifier clone_t = clone.tracked(tape);
  const ad::Tensor objective = ad::sum(ad::mul(weights, clone_t.log_proba(x.detach())));
  return ad::ParamVector(layout, ad::gradient(objective, clone_t.params().flat(), false));
}

ad::Tensor isolation_loss(const nets::Classifier& victim, const nets::Classifier& clone, const ad::Tensor& x,
                          const ad::Tensor& y_true, JacobianRoute route) {
  if (x.rank() != 2 || x.rows() == 0) throw ShapeError("isolation_loss: empty or malformed batch");
  if (y_true.shape() != ad::Shape{x.rows(), clone.architecture().num_classes()}) {
    throw ShapeError("isolation_loss: labels " + ad::shape_string(y_true.shape()) + " for batch " +
                     ad::shape_string(x.shape()));
  }
  const ad::Tensor y_victim = victim.predict_proba(x);
  const ad::ParamVector victim_side = weighted_logprob_grad(clone, x, y_victim, route);
  const ad::ParamVector label_side = weighted_logprob_grad(clone, x, y_true.detach(), route);
  try {
    return ad::cosine_similarity(victim_side, label_side);
  } catch (const DegenerateNormError& e) {
    throw DegenerateNormError(e.which() == "u" ? "victim_output" : "label", e.norm());
  }
}

ad::Tensor information_gain(const nets::Classifier& clone, const nets::Classifier& victim, const ad::Tensor& x_ood,
                            KlDirection direction) {
  const ad::Tensor pc = clone.predict_proba(x_ood);
  const ad::Tensor pv = victim.predict_proba(x_ood);
  return direction == KlDirection::kCloneToVictim ? ad::kl_divergence(pc, pv) : ad::kl_divergence(pv, pc);
}

ad::Tensor induction_loss(const nets::Classifier& clone, const nets::Classifier& victim, const ad::Tensor& x_ood,
                          double beta, const LossOptions& options) {
  if (!std::isfinite(beta) || beta < 0.0) throw DomainError("induction_loss: beta must be finite and non-negative");
  std::optional<ad::Tape> local;
  ad::Tape* tape = victim.params().flat().tape();
  if (tape == nullptr) tape = &local.emplace();
  const nets::Classifier clone_t = clone.tracked(*tape);
  const InductionParts parts = induction_parts(clone_t, victim, x_ood, options);
  ad::Tensor out = ad::add(parts.l_ig, ad::scale(parts.gradnorm, beta));
  return local ? out.detach() : out;
}

ad::ParamVector axpy(const ad::ParamVector& a, double factor, const ad::ParamVector& b) {
  if (a.size() != b.size()) throw ShapeError("axpy: vector lengths differ");
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + factor * bv[i];
  return ad::ParamVector::from_values(a.layout_ptr(), std::move(out));
}

LossBundle total_loss(const LossInputs& inputs, const LossCoefficients& coefficients, const LossOptions& options,
                      bool benign_only) {
  if (inputs.victim == nullptr) throw Error("total_loss: victim is required");
  coefficients.validate();
  ad::Tape tape;
  const nets::Classifier victim_t = inputs.victim->tracked(tape);
  const auto& layout = victim_t.params().layout_ptr();
  LossBundle out;

  const ad::Tensor l_ben = ad::softmax_cross_entropy(victim_t.logits(inputs.x_id), inputs.y_id);
  out.l_ben = l_ben.item();
  out.grad_ben = victim_grad(l_ben, victim_t);
  out.grad_iso = ad::ParamVector::zeros(layout);
  out.grad_ig = ad::ParamVector::zeros(layout);
  out.grad_gradnorm = ad::ParamVector::zeros(layout);

  if (!benign_only) {
    if (inputs.clone == nullptr) throw Error("total_loss: clone is required");
    const ad::Tensor l_iso = isolation_loss(victim_t, *inputs.clone, inputs.x_id, inputs.y_id, options.route);
    out.l_iso = l_iso.item();
    out.grad_iso = victim_grad(l_iso, victim_t);

    if (inputs.x_ood.defined()) {
      const nets::Classifier clone_t = inputs.clone->tracked(tape);
      const InductionParts parts = induction_parts(clone_t, victim_t, inputs.x_ood, options);
      out.l_ig = parts.l_ig.item();
      out.gradnorm = parts.gradnorm.item();
      out.grad_ig = victim_grad(parts.l_ig, victim_t);
      out.grad_gradnorm = victim_grad(parts.gradnorm, victim_t);
    }
  }

  out.l_ind = out.l_ig + coefficients.beta * out.gradnorm;
  out.grad_ind = axpy(out.grad_ig, coefficients.beta, out.grad_gradnorm);
  out.total = out.l_ben + coefficients.gamma1 * out.l_iso + coefficients.gamma2 * out.l_ind;
  out.grad_total = axpy(axpy(out.grad_ben, coefficients.gamma1, out.grad_iso), coefficients.gamma2, out.grad_ind);
  return out;
}

}  // namespace ini::losses
