#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ini/attacks/oracle.hpp"
#include "ini/data/dataset.hpp"
#include "ini/nets/classifier.hpp"

namespace ini::attacks {

enum class AttackMethod { kKnockoff, kJbda };

std::string to_string(AttackMethod method);
AttackMethod parse_attack_method(const std::string& name);

struct AttackConfig {
  AttackMethod method = AttackMethod::kKnockoff;
  std::size_t budget = 2000;
  LabelMode label_mode = LabelMode::kSoft;
  // Knockoff
  std::size_t epochs = 30;
  bool with_replacement = false;
  // JBDA
  std::size_t seeds_count = 150;
  std::size_t rounds = 6;
  double noise_rate = 0.1;
  std::size_t epochs_per_round = 10;
  // Both
  double lr = 0.05;
  std::size_t batch_size = 64;
  double momentum = 0.5;
  /// Rows per oracle call.
  std::size_t query_batch = 256;
  /// Clone architecture; when empty the attack uses mlp(D-64-64-K, relu).
  /// The harness fills in the victim's architecture.
  std::optional<nets::Architecture> clone_arch;

  void validate() const;
};

struct AttackResult {
  explicit AttackResult(nets::Classifier initial) : clone(std::move(initial)) {}

  nets::Classifier clone;
  /// The budget ran out before the planned schedule completed.
  bool truncated = false;
  /// Samples labeled by the oracle and used for training.
  std::size_t labeled_samples = 0;
  /// JBDA: pool size at the start of each round.
  std::vector<std::size_t> pool_sizes;
  /// Mean training loss per epoch.
  std::vector<double> epoch_losses;
  std::vector<std::string> warnings;
};

/// Uniformly samples `budget` surrogate rows, labels them through the oracle
/// and trains a fresh clone with soft cross-entropy.
AttackResult knockoff_attack(QueryOracle& oracle, const data::LabeledDataset& surrogate,
                             const AttackConfig& config, std::uint64_t seed);

/// Jacobian-based augmentation. Rounds r = 0..R: label the new pool rows,
/// train the clone (continuing from the previous round), then for r < R
/// append x + noise_rate * sign(d/dx CE(clone(x), answer(x))) for every pool
/// row. The pool holds seeds * 2^r rows in round r. When the budget cannot
/// cover a round, the remaining budget labels a prefix of the new rows, the
/// clone trains once more and the result is flagged truncated.
AttackResult jbda_attack(QueryOracle& oracle, const data::LabeledDataset& seed_samples,
                         const AttackConfig& config, std::uint64_t seed);

/// Runs the configured method.
AttackResult run_attack(QueryOracle& oracle, const data::LabeledDataset& inputs, const AttackConfig& config,
                        std::uint64_t seed);

/// Trains `clone` on (x, targets) with soft cross-entropy and SGD momentum for
/// `epochs` seeded shuffled passes. Returns the mean loss of each epoch.
std::vector<double> fit_soft(nets::Classifier& clone, const ad::Tensor& x, const ad::Tensor& targets,
                             std::size_t epochs, double lr, std::size_t batch_size, double momentum,
                             std::uint64_t seed);

}  // namespace ini::attacks
