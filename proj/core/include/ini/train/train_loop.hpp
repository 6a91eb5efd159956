#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ini/autodiff/param_vector.hpp"
#include "ini/data/dataset.hpp"
#include "ini/losses/ini_losses.hpp"
#include "ini/nets/checkpoint.hpp"
#include "ini/nets/classifier.hpp"

namespace ini::train {

/// Step decay: initial * factor^floor(epoch / period).
struct LrSchedule {
  double initial = 0.1;
  std::size_t period = 20;
  double factor = 0.1;
};

double anneal_lr(const LrSchedule& schedule, std::size_t epoch);

/// SGD with momentum and coupled weight decay:
///   d = g + wd * p;  v = mu * v + d;  p = p - lr * v.
class Sgd {
 public:
  Sgd(double momentum, double weight_decay) : momentum_(momentum), weight_decay_(weight_decay) {}

  ad::ParamVector step(const ad::ParamVector& params, const ad::ParamVector& grad, double lr);
  void reset() { velocity_.clear(); }

 private:
  double momentum_;
  double weight_decay_;
  std::vector<double> velocity_;
};

enum class TrainMode { kVanilla, kIni, kIniCotrain };

std::string to_string(TrainMode mode);
TrainMode parse_train_mode(const std::string& name);

/// Alternating clone updates (cotrain mode): `ratio` clone steps follow every
/// victim step. Each clone step minimizes soft cross-entropy against the
/// current, detached victim outputs on an OOD batch.
struct CotrainSchedule {
  std::size_t ratio = 1;
  double lr = 0.05;
};

enum class ThresholdAction { kFlag, kAbort };

struct TrainConfig {
  TrainMode mode = TrainMode::kVanilla;
  nets::Architecture victim_arch{{16, 64, 64, 4}, nets::Activation::kRelu};
  /// Defaults to the victim architecture.
  std::optional<nets::Architecture> clone_arch;
  std::size_t epochs = 30;
  std::size_t batch_size = 128;
  /// OOD batch size; 0 means batch_size.
  std::size_t ood_batch_size = 0;
  LrSchedule lr;
  double momentum = 0.5;
  double weight_decay = 1e-3;
  losses::LossCoefficients coefficients;
  losses::LossOptions loss_options;
  /// Minimum acceptable benign accuracy, in (0, 1].
  double threshold = 0.5;
  ThresholdAction threshold_action = ThresholdAction::kFlag;
  /// When set, a step whose smoothed ID batch accuracy (measured before the
  /// update) is below `threshold` keeps the benign gradient out of surgery:
  /// the other gradients are still projected, the benign one is added as is.
  bool threshold_gate = false;
  /// Weight of the previous value in the exponential moving average of batch
  /// accuracy used by the gate.
  double gate_smoothing = 0.9;
  std::uint64_t seed = 0;
  bool surgery = true;
  /// Scale gradients by their coefficients before surgery (otherwise after).
  bool coefficients_before_surgery = true;
  bool reinit_clone_each_epoch = false;
  CotrainSchedule cotrain;
  /// Digest of the configuration that produced this run, copied into the
  /// checkpoint header.
  std::string config_digest;

  void validate() const;
  const nets::Architecture& effective_clone_arch() const { return clone_arch ? *clone_arch : victim_arch; }
};

struct TrainData {
  const data::LabeledDataset* train = nullptr;
  /// Required outside vanilla mode.
  const data::LabeledDataset* ood = nullptr;
  /// Used for per-epoch and final benign accuracy; falls back to `train`.
  const data::LabeledDataset* eval = nullptr;
};

struct NamedCosine {
  std::string a;
  std::string b;
  /// Empty when either gradient is zero.
  std::optional<double> value;
};

struct ProjectionRecord {
  std::string target;
  std::string against;
  double cos_before = 0.0;
  double cos_after = 0.0;
};

struct StepRecord {
  std::size_t iteration = 0;
  std::size_t epoch = 0;
  double lr = 0.0;
  double l_ben = 0.0;
  double l_iso = 0.0;
  double l_ig = 0.0;
  double gradnorm = 0.0;
  double l_ind = 0.0;
  double total = 0.0;
  double batch_accuracy = 0.0;
  double smoothed_accuracy = 0.0;
  /// The threshold gate reduced this step to the benign gradient.
  bool gated = false;
  /// Cosines among the gradients that enter surgery.
  std::vector<NamedCosine> surgery_cosines;
  /// Cosines among the benign, isolation, induction and gradient-norm terms.
  std::vector<NamedCosine> figure_cosines;
  std::vector<ProjectionRecord> projections;
  std::vector<std::string> warnings;
  /// Cotrain mode: clone loss on its batch before and after each clone step.
  std::vector<std::pair<double, double>> clone_steps;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double benign_accuracy = 0.0;
};

/// Append-only record of a training run.
struct TrainTrace {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;

  /// One JSON object per line: {"type":"step",...} then {"type":"epoch",...}
  /// interleaved in the order they were produced.
  std::string to_jsonl() const;
};

struct TrainResult {
  nets::Checkpoint checkpoint;
  TrainTrace trace;
  /// Final state of the surrogate clone used during training.
  std::optional<nets::Classifier> clone;
};

/// Trains a victim.
///
/// Each iteration draws an ID batch (seeded shuffle per epoch), computes the
/// benign loss and, outside vanilla mode, the isolation loss on that batch
/// and the induction terms on an OOD batch. The four victim gradients are
/// combined by projection surgery and applied by SGD. Parameters are rounded
/// to float32 after every step.
///
/// Throws NonFiniteLossError on a non-finite loss. A final benign accuracy
/// below `threshold` is recorded in the checkpoint metadata, or raises
/// ThresholdViolationError with ThresholdAction::kAbort.
TrainResult train_victim(const TrainConfig& config, const TrainData& data);

/// Defended training with alternating clone updates: train_victim in
/// kIniCotrain mode with the given schedule. A ratio of 0 leaves the clone
/// untouched and reproduces kIni training.
TrainResult adversarial_cotrain(TrainConfig config, const TrainData& data, const CotrainSchedule& schedule);

}  // namespace ini::train
