#include "ini/attacks/stealing.hpp"

#include <algorithm>

#include "ini/autodiff/functional.hpp"
#include "ini/autodiff/grad.hpp"
#include "ini/autodiff/ops.hpp"
#include "ini/autodiff/tape.hpp"
#include "ini/error.hpp"
#include "ini/rng.hpp"
#include "ini/train/train_loop.hpp"

namespace ini::attacks {

namespace {

enum SeedStream : std::uint64_t { kCloneInit = 1, kSampling = 2, kTraining = 3 };

nets::Architecture clone_architecture(const AttackConfig& config, const QueryOracle& oracle) {
  if (config.clone_arch) return *config.clone_arch;
  return nets::Architecture{{oracle.input_dim(), 64, 64, oracle.num_classes()}, nets::Activation::kRelu};
}

ad::Tensor concat_rows(const ad::Tensor& a, const ad::Tensor& b) {
  if (!a.defined()) return b;
  std::vector<double> v(a.values().begin(), a.values().end());
  v.insert(v.end(), b.values().begin(), b.values().end());
  return ad::Tensor::from({a.rows() + b.rows(), a.cols()}, std::move(v));
}

ad::Tensor take_rows(const ad::Tensor& t, std::size_t begin, std::size_t end) {
  const std::size_t c = t.cols();
  auto v = t.values();
  return ad::Tensor::from({end - begin, c}, std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(begin * c),
                                                                v.begin() + static_cast<std::ptrdiff_t>(end * c)));
}

// Labels rows [0, n) of x in chunks of `chunk`.
ad::Tensor label_all(QueryOracle& oracle, const ad::Tensor& x, std::size_t chunk) {
  ad::Tensor out;
  for (std::size_t start = 0; start < x.rows(); start += chunk) {
    out = concat_rows(out, oracle.query(take_rows(x, start, std::min(x.rows(), start + chunk))));
  }
  return out;
}

// x + rate * sign(d/dx CE(clone(x), targets)) for every row.
ad::Tensor jacobian_augment(const nets::Classifier& clone, const ad::Tensor& x, const ad::Tensor& targets,
                            double rate) {
  ad::Tape tape;
  const ad::Tensor xv = tape.variable(x.detach());
  const ad::Tensor loss = ad::softmax_cross_entropy(clone.logits(xv), targets);
  const ad::Tensor g = ad::gradient(loss, xv, false);
  auto xs = x.values();
  auto gs = g.values();
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double s = gs[i] > 0.0 ? 1.0 : (gs[i] < 0.0 ? -1.0 : 0.0);
    out[i] = xs[i] + rate * s;
  }
  return ad::Tensor::from(x.shape(), std::move(out));
}

}  // namespace

std::string to_string(AttackMethod method) { return method == AttackMethod::kKnockoff ? "knockoff" : "jbda"; }

AttackMethod parse_attack_method(const std::string& name) {
  if (name == "knockoff") return AttackMethod::kKnockoff;
  if (name == "jbda") return AttackMethod::kJbda;
  throw Error("unknown attack '" + name + "'");
}

void AttackConfig::validate() const {
  if (epochs == 0 || batch_size == 0 || query_batch == 0 || epochs_per_round == 0 || seeds_count == 0) {
    throw DomainError("attack counts must be positive");
  }
  if (!(noise_rate >= 0.0)) throw DomainError("noise_rate must be non-negative");
  if (!(lr > 0.0) || !(momentum >= 0.0)) throw DomainError("attack lr must be positive, momentum >= 0");
  if (clone_arch) clone_arch->validate();
}

std::vector<double> fit_soft(nets::Classifier& clone, const ad::Tensor& x, const ad::Tensor& targets,
                             std::size_t epochs, double lr, std::size_t batch_size, double momentum,
                             std::uint64_t seed) {
  if (x.rows() != targets.rows()) throw ShapeError("fit_soft: inputs and targets differ in rows");
  train::Sgd opt(momentum, 0.0);
  Rng rng(seed);
  const std::size_t n = x.rows();
  const std::size_t d = x.cols(), k = targets.cols();
  auto xs = x.values();
  auto ts = targets.values();
  std::vector<double> losses;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    const std::vector<std::size_t> order = rng.permutation(n);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += batch_size, ++batches) {
      const std::size_t stop = std::min(n, start + batch_size);
      std::vector<double> xb, tb;
      xb.reserve((stop - start) * d);
      tb.reserve((stop - start) * k);
      for (std::size_t r = start; r < stop; ++r) {
        const std::size_t i = order[r];
        xb.insert(xb.end(), xs.begin() + static_cast<std::ptrdiff_t>(i * d),
                  xs.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
        tb.insert(tb.end(), ts.begin() + static_cast<std::ptrdiff_t>(i * k),
                  ts.begin() + static_cast<std::ptrdiff_t>((i + 1) * k));
      }
      const ad::Tensor xt = ad::Tensor::from({stop - start, d}, std::move(xb));
      const ad::Tensor tt = ad::Tensor::from({stop - start, k}, std::move(tb));
      ad::Tape tape;
      const nets::Classifier tracked = clone.tracked(tape);
      const ad::Tensor loss = ad::softmax_cross_entropy(tracked.logits(xt), tt);
      total += loss.item();
      clone.set_params(opt.step(clone.params(), ad::grad(loss, tracked.params(), false), lr));
      clone.round_to_float();
    }
    losses.push_back(total / static_cast<double>(batches));
  }
  return losses;
}

AttackResult knockoff_attack(QueryOracle& oracle, const data::LabeledDataset& surrogate, const AttackConfig& config,
                             std::uint64_t seed) {
  config.validate();
  if (surrogate.size() == 0) throw DomainError("knockoff_attack: surrogate set is empty");
  if (surrogate.dim() != oracle.input_dim()) throw ShapeError("knockoff_attack: surrogate width differs from oracle");
  AttackResult result{nets::Classifier(clone_architecture(config, oracle), derive_seed(seed, kCloneInit))};
  const std::size_t budget = std::min(config.budget, oracle.remaining());
  if (budget < config.budget) result.warnings.push_back("oracle budget below configured budget");
  if (budget == 0) {
    result.warnings.push_back("budget 0: clone left untrained");
    return result;
  }
  if (!config.with_replacement && surrogate.size() < budget) {
    throw DomainError("knockoff_attack: surrogate set smaller than budget without replacement");
  }
  Rng rng(derive_seed(seed, kSampling));
  std::vector<std::size_t> picks;
  if (config.with_replacement) {
    for (std::size_t i = 0; i < budget; ++i) picks.push_back(rng.index(surrogate.size()));
  } else {
    picks = rng.permutation(surrogate.size());
    picks.resize(budget);
  }
  const ad::Tensor x = surrogate.rows(picks);
  const ad::Tensor y = label_all(oracle, x, config.query_batch);
  result.labeled_samples = y.rows();
  result.epoch_losses = fit_soft(result.clone, x, y, config.epochs, config.lr, config.batch_size, config.momentum,
                                 derive_seed(seed, kTraining));
  return result;
}

AttackResult jbda_attack(QueryOracle& oracle, const data::LabeledDataset& seed_samples, const AttackConfig& config,
                         std::uint64_t seed) {
  config.validate();
  if (seed_samples.size() == 0) throw DomainError("jbda_attack: seed set is empty");
  if (seed_samples.dim() != oracle.input_dim()) throw ShapeError("jbda_attack: seed width differs from oracle");
  AttackResult result{nets::Classifier(clone_architecture(config, oracle), derive_seed(seed, kCloneInit))};
  const std::size_t seeds = std::min(config.seeds_count, seed_samples.size());
  if (seeds < config.seeds_count) result.warnings.push_back("fewer seed samples than seeds_count");

  ad::Tensor pool = take_rows(seed_samples.x, 0, seeds);
  ad::Tensor answers;
  std::size_t budget_left = std::min(config.budget, oracle.remaining());
  const std::uint64_t train_base = derive_seed(seed, kTraining);
  for (std::size_t r = 0; r <= config.rounds; ++r) {
    const std::size_t labeled = answers.defined() ? answers.rows() : 0;
    std::size_t fresh = pool.rows() - labeled;
    if (fresh > budget_left) {
      result.truncated = true;
      fresh = budget_left;
      if (fresh == 0) {
        if (labeled == 0) result.warnings.push_back("budget 0: clone left untrained");
        break;
      }
      pool = take_rows(pool, 0, labeled + fresh);
    }
    result.pool_sizes.push_back(pool.rows());
    if (fresh > 0) {
      answers = concat_rows(answers, label_all(oracle, take_rows(pool, labeled, labeled + fresh), config.query_batch));
      budget_left -= fresh;
    }
    result.labeled_samples = answers.rows();
    const auto losses = fit_soft(result.clone, pool, answers, config.epochs_per_round, config.lr, config.batch_size,
                                 config.momentum, derive_seed(train_base, r));
    result.epoch_losses.insert(result.epoch_losses.end(), losses.begin(), losses.end());
    if (result.truncated) break;
    if (r < config.rounds) {
      pool = concat_rows(pool, jacobian_augment(result.clone, pool, answers, config.noise_rate));
    }
  }
  return result;
}

AttackResult run_attack(QueryOracle& oracle, const data::LabeledDataset& inputs, const AttackConfig& config,
                        std::uint64_t seed) {
  return config.method == AttackMethod::kKnockoff ? knockoff_attack(oracle, inputs, config, seed)
                                                  : jbda_attack(oracle, inputs, config, seed);
}

}  // namespace ini::attacks
