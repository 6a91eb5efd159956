#include "ini/train/train_loop.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "ini/autodiff/functional.hpp"
#include "ini/autodiff/grad.hpp"
#include "ini/autodiff/tape.hpp"
#include "ini/error.hpp"
#include "ini/rng.hpp"
#include "ini/surgery/pcgrad.hpp"

namespace ini::train {

namespace {

enum SeedStream : std::uint64_t {
  kVictimInit = 1,
  kCloneInit = 2,
  kShuffle = 3,
  kOodSampling = 4,
  kSurgery = 5,
};

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

std::optional<double> cosine(const ad::ParamVector& a, const ad::ParamVector& b) {
  const double na = std::sqrt(dot(a.values(), a.values()));
  const double nb = std::sqrt(dot(b.values(), b.values()));
  if (!(na > ad::kNormEpsilon) || !(nb > ad::kNormEpsilon)) return std::nullopt;
  return dot(a.values(), b.values()) / (na * nb);
}

std::vector<NamedCosine> pairwise(const std::vector<std::pair<std::string, const ad::ParamVector*>>& grads) {
  std::vector<NamedCosine> out;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    for (std::size_t j = i + 1; j < grads.size(); ++j) {
      out.push_back({grads[i].first, grads[j].first, cosine(*grads[i].second, *grads[j].second)});
    }
  }
  return out;
}

ad::ParamVector scaled(const ad::ParamVector& g, double factor) {
  std::vector<double> out(g.values().begin(), g.values().end());
  for (double& v : out) v *= factor;
  return ad::ParamVector::from_values(g.layout_ptr(), std::move(out));
}

void check_finite(double value, std::size_t iteration, const char* name) {
  if (!std::isfinite(value)) throw NonFiniteLossError(iteration, name);
}

// Cycles through a dataset in seeded shuffled passes.
class BatchStream {
 public:
  BatchStream(std::size_t n, std::uint64_t seed) : n_(n), rng_(seed) {}

  std::vector<std::size_t> next(std::size_t size) {
    std::vector<std::size_t> out;
    out.reserve(size);
    while (out.size() < size) {
      if (pos_ == order_.size()) {
        order_ = rng_.permutation(n_);
        pos_ = 0;
      }
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  std::size_t n_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

double clone_soft_ce(const nets::Classifier& clone, const ad::Tensor& x, const ad::Tensor& targets) {
  return ad::softmax_cross_entropy(clone.logits(x), targets).item();
}

}  // namespace

double anneal_lr(const LrSchedule& schedule, std::size_t epoch) {
  if (schedule.period == 0) return schedule.initial;
  return schedule.initial * std::pow(schedule.factor, static_cast<double>(epoch / schedule.period));
}

ad::ParamVector Sgd::step(const ad::ParamVector& params, const ad::ParamVector& grad, double lr) {
  if (params.size() != grad.size()) throw ShapeError("Sgd::step: gradient length differs from parameters");
  auto p = params.values();
  auto g = grad.values();
  if (velocity_.empty()) velocity_.assign(p.size(), 0.0);
  std::vector<double> out(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double d = g[k] + weight_decay_ * p[k];
    velocity_[k] = momentum_ * velocity_[k] + d;
    out[k] = p[k] - lr * velocity_[k];
  }
  return params.with_values(std::move(out));
}

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::kVanilla: return "vanilla";
    case TrainMode::kIni: return "ini";
    case TrainMode::kIniCotrain: return "ini_cotrain";
  }
  return "?";
}

TrainMode parse_train_mode(const std::string& name) {
  if (name == "vanilla") return TrainMode::kVanilla;
  if (name == "ini") return TrainMode::kIni;
  if (name == "ini_cotrain" || name == "ini+adversarial-cotrain") return TrainMode::kIniCotrain;
  throw Error("unknown training mode '" + name + "'");
}

void TrainConfig::validate() const {
  victim_arch.validate();
  effective_clone_arch().validate();
  if (effective_clone_arch().input_dim() != victim_arch.input_dim() ||
      effective_clone_arch().num_classes() != victim_arch.num_classes()) {
    throw ArchitectureMismatchError("clone and victim must share input width and class count");
  }
  if (epochs == 0 || batch_size == 0) throw DomainError("epochs and batch_size must be positive");
  if (!(lr.initial > 0.0) || !(lr.factor > 0.0)) throw DomainError("learning rate must be positive");
  if (!(momentum >= 0.0) || !(weight_decay >= 0.0)) throw DomainError("momentum and weight decay must be >= 0");
  if (!(threshold > 0.0 && threshold <= 1.0)) throw DomainError("threshold must lie in (0, 1]");
  coefficients.validate();
  if (mode == TrainMode::kIniCotrain && !(cotrain.lr > 0.0)) throw DomainError("cotrain lr must be positive");
}

TrainResult train_victim(const TrainConfig& config, const TrainData& data) {
  config.validate();
  if (data.train == nullptr) throw Error("train_victim: training set is required");
  data.train->validate();
  const bool defended = config.mode != TrainMode::kVanilla;
  if (defended && data.ood == nullptr) throw Error("train_victim: OOD set is required outside vanilla mode");
  const data::LabeledDataset& eval = data.eval ? *data.eval : *data.train;
  const std::size_t k = config.victim_arch.num_classes();
  if (data.train->num_classes != k) throw ShapeError("train_victim: dataset class count differs from architecture");

  nets::Classifier victim(config.victim_arch, derive_seed(config.seed, kVictimInit));
  const nets::Architecture& clone_arch = config.effective_clone_arch();
  const std::uint64_t clone_seed = derive_seed(config.seed, kCloneInit);
  nets::Classifier clone(clone_arch, clone_seed);

  Sgd victim_opt(config.momentum, config.weight_decay);
  Sgd clone_opt(config.momentum, 0.0);
  BatchStream ood_stream(defended ? data.ood->size() : 1, derive_seed(config.seed, kOodSampling));
  Rng shuffle_rng(derive_seed(config.seed, kShuffle));
  const std::uint64_t surgery_base = derive_seed(config.seed, kSurgery);
  const std::size_t ood_batch = config.ood_batch_size ? config.ood_batch_size : config.batch_size;
  const auto& c = config.coefficients;

  TrainTrace trace;
  std::size_t iteration = 0;
  double smoothed_accuracy = 0.0;
  const std::size_t n = data.train->size();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = anneal_lr(config.lr, epoch);
    if (defended && config.reinit_clone_each_epoch && epoch > 0) {
      clone = nets::Classifier(clone_arch, derive_seed(clone_seed, epoch));
      clone_opt.reset();
    }
    const std::vector<std::size_t> order = shuffle_rng.permutation(n);
    for (std::size_t start = 0; start < n; start += config.batch_size, ++iteration) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, stop - start);
      losses::LossInputs in;
      in.victim = &victim;
      in.clone = &clone;
      in.x_id = data.train->rows(idx);
      in.y_id = ad::one_hot(data.train->labels_at(idx), k);
      if (defended) in.x_ood = data.ood->rows(ood_stream.next(ood_batch));

      const losses::LossBundle b = losses::total_loss(in, c, config.loss_options, !defended);
      StepRecord rec;
      rec.iteration = iteration;
      rec.epoch = epoch;
      rec.lr = lr;
      rec.l_ben = b.l_ben;
      rec.l_iso = b.l_iso;
      rec.l_ig = b.l_ig;
      rec.gradnorm = b.gradnorm;
      rec.l_ind = b.l_ind;
      rec.total = b.total;
      check_finite(b.l_ben, iteration, "benign");
      check_finite(b.l_iso, iteration, "isolation");
      check_finite(b.l_ig, iteration, "information_gain");
      check_finite(b.gradnorm, iteration, "gradient_norm");
      check_finite(b.l_ind, iteration, "induction");

      const std::vector<int> batch_labels = data.train->labels_at(idx);
      rec.batch_accuracy = nets::accuracy(victim, in.x_id, batch_labels);
      smoothed_accuracy = iteration == 0 ? rec.batch_accuracy
                                         : config.gate_smoothing * smoothed_accuracy +
                                               (1.0 - config.gate_smoothing) * rec.batch_accuracy;
      rec.smoothed_accuracy = smoothed_accuracy;
      rec.gated = defended && config.threshold_gate && smoothed_accuracy < config.threshold;

      ad::ParamVector update = b.grad_ben;
      if (defended) {
        const double coeff[4] = {1.0, c.gamma1, c.gamma2, c.gamma2 * c.beta};
        const ad::ParamVector* raw[4] = {&b.grad_ben, &b.grad_iso, &b.grad_ig, &b.grad_gradnorm};
        const char* names[4] = {"benign", "isolation", "information_gain", "gradient_norm"};
        surgery::GradientSet set;
        for (int t = 0; t < 4; ++t) {
          set.add(names[t], config.coefficients_before_surgery ? scaled(*raw[t], coeff[t]) : *raw[t]);
        }
        std::vector<std::pair<std::string, const ad::ParamVector*>> entering;
        for (const auto& [name, g] : set.entries) entering.emplace_back(name, &g);
        rec.surgery_cosines = pairwise(entering);
        rec.figure_cosines = pairwise({{"benign", &b.grad_ben},
                                       {"induction", &b.grad_ind},
                                       {"gradient_norm", &b.grad_gradnorm},
                                       {"isolation", &b.grad_iso}});
        if (config.surgery) {
          surgery::SurgeryResult s = surgery::pcgrad(set, derive_seed(surgery_base, iteration));
          for (const auto& p : s.projections) {
            rec.projections.push_back({names[p.i], names[p.j], p.cos_before, p.cos_after});
          }
          rec.warnings = std::move(s.warnings);
          if (config.coefficients_before_surgery && !rec.gated) {
            update = std::move(s.combined);
          } else {
            const bool before = config.coefficients_before_surgery;
            update = rec.gated ? b.grad_ben : scaled(s.projected[0], coeff[0]);
            for (int t = 1; t < 4; ++t) update = losses::axpy(update, before ? 1.0 : coeff[t], s.projected[t]);
          }
        } else {
          update = b.grad_total;
        }
      }

      victim.set_params(victim_opt.step(victim.params(), update, lr));
      victim.round_to_float();

      if (config.mode == TrainMode::kIniCotrain) {
        for (std::size_t r = 0; r < config.cotrain.ratio; ++r) {
          const ad::Tensor xq = data.ood->rows(ood_stream.next(ood_batch));
          const ad::Tensor targets = victim.predict_proba(xq);
          const double before = clone_soft_ce(clone, xq, targets);
          ad::Tape tape;
          const nets::Classifier clone_t = clone.tracked(tape);
          const ad::Tensor loss = ad::softmax_cross_entropy(clone_t.logits(xq), targets);
          const ad::ParamVector g = ad::grad(loss, clone_t.params(), false);
          clone.set_params(clone_opt.step(clone.params(), g, config.cotrain.lr));
          clone.round_to_float();
          rec.clone_steps.emplace_back(before, clone_soft_ce(clone, xq, targets));
        }
      }
      trace.steps.push_back(std::move(rec));
    }
    const double acc = nets::accuracy(victim, eval.x, eval.labels);
    trace.epochs.push_back({epoch, lr, acc});
  }

  nets::CheckpointMetadata meta;
  meta.mode = to_string(config.mode);
  meta.benign_accuracy = trace.epochs.back().benign_accuracy;
  meta.epoch = config.epochs;
  meta.gamma1 = c.gamma1;
  meta.gamma2 = c.gamma2;
  meta.beta = c.beta;
  meta.threshold = config.threshold;
  meta.threshold_met = meta.benign_accuracy >= config.threshold;
  if (!meta.threshold_met && config.threshold_action == ThresholdAction::kAbort) {
    throw ThresholdViolationError(meta.benign_accuracy, config.threshold);
  }
  return TrainResult{nets::Checkpoint{victim, config.config_digest, meta}, std::move(trace),
                     defended ? std::optional<nets::Classifier>(clone) : std::nullopt};
}

TrainResult adversarial_cotrain(TrainConfig config, const TrainData& data, const CotrainSchedule& schedule) {
  config.mode = TrainMode::kIniCotrain;
  config.cotrain = schedule;
  return train_victim(config, data);
}

std::string TrainTrace::to_jsonl() const {
  std::string out;
  const auto cosines = [](const std::vector<NamedCosine>& list) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : list) {
      arr.push_back({{"a", c.a}, {"b", c.b}, {"cos", c.value ? nlohmann::json(*c.value) : nlohmann::json()}});
    }
    return arr;
  };
  std::size_t e = 0;
  for (std::size_t s = 0; s <= steps.size(); ++s) {
    // Epoch records follow the last step of their epoch.
    while (e < epochs.size() && (s == steps.size() || steps[s].epoch > epochs[e].epoch)) {
      out += nlohmann::json{{"type", "epoch"},
                            {"epoch", epochs[e].epoch},
                            {"lr", epochs[e].lr},
                            {"benign_accuracy", epochs[e].benign_accuracy}}
                 .dump();
      out += '\n';
      ++e;
    }
    if (s == steps.size()) break;
    const StepRecord& r = steps[s];
    nlohmann::json proj = nlohmann::json::array();
    for (const auto& p : r.projections) {
      proj.push_back({{"target", p.target}, {"against", p.against}, {"cos_before", p.cos_before},
                      {"cos_after", p.cos_after}});
    }
    nlohmann::json clone_steps = nlohmann::json::array();
    for (const auto& [before, after] : r.clone_steps) clone_steps.push_back({before, after});
    out += nlohmann::json{{"type", "step"},
                          {"iteration", r.iteration},
                          {"epoch", r.epoch},
                          {"lr", r.lr},
                          {"l_ben", r.l_ben},
                          {"l_iso", r.l_iso},
                          {"l_ig", r.l_ig},
                          {"gradnorm", r.gradnorm},
                          {"l_ind", r.l_ind},
                          {"total", r.total},
                          {"batch_accuracy", r.batch_accuracy},
                          {"smoothed_accuracy", r.smoothed_accuracy},
                          {"gated", r.gated},
                          {"surgery_cosines", cosines(r.surgery_cosines)},
                          {"figure_cosines", cosines(r.figure_cosines)},
                          {"projections", proj},
                          {"warnings", r.warnings},
                          {"clone_steps", clone_steps}}
               .dump();
    out += '\n';
  }
  return out;
}

}  // namespace ini::train
