#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ini/attacks/stealing.hpp"
#include "ini/data/dataset.hpp"
#include "ini/nets/classifier.hpp"
#include "ini/train/train_loop.hpp"

namespace ini::harness {

/// A dataset read from disk instead of generated.
struct FileSource {
  std::string path;
  data::FlatFormat format = data::FlatFormat::kCsv;
};

/// Synthetic reference task: ID blobs, a training-time OOD family and the
/// attacker's surrogate mixture.
struct TaskSpec {
  std::size_t num_classes = 4;
  std::size_t dim = 16;
  double sigma = 0.15;
  double spacing = 1.0;
  std::size_t train_per_class = 1000;
  std::size_t test_per_class = 250;
  double ood_shift_norm = 2.0;
  std::string ood_pattern = "ones";
  std::size_t ood_per_class = 500;
  double surrogate_rho = 0.25;
  std::size_t surrogate_size = 4000;
  double surrogate_ood_shift_norm = 2.0;
  std::string surrogate_ood_pattern = "alternating";
  std::optional<FileSource> train_file;
  std::optional<FileSource> test_file;
  std::optional<FileSource> ood_file;
  std::optional<FileSource> surrogate_file;
};

/// Everything a run needs. Seeds in `seeds` are paired: every mode uses the
/// same data, initialization and attack randomness for a given seed.
struct ExperimentConfig {
  std::string name = "experiment";
  std::vector<std::uint64_t> seeds{0};
  std::vector<train::TrainMode> modes{train::TrainMode::kVanilla, train::TrainMode::kIni};
  TaskSpec task;
  /// Victim architecture, epochs, optimizer and loss settings. The seed and
  /// mode fields are filled per run.
  train::TrainConfig train;
  attacks::AttackConfig attack;
  /// Also export each generated dataset to the output directory.
  bool export_datasets = false;

  void validate() const;
};

/// Parses the JSON configuration. Unknown keys and ill-typed values raise
/// SchemaError naming the offending key.
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::string& path);

/// Canonical JSON text (sorted keys, every field explicit). Parsing it yields
/// an equal configuration.
std::string canonical_json(const ExperimentConfig& config);

/// SHA-256 of canonical_json.
std::string config_digest(const ExperimentConfig& config);
/// Digest of the parts that determine a victim for one (mode, seed).
std::string victim_config_digest(const ExperimentConfig& config, train::TrainMode mode, std::uint64_t seed);
/// Digest of the parts that determine an attack for one seed; independent of
/// the victim's training mode.
std::string attack_config_digest(const ExperimentConfig& config, std::uint64_t seed);

}  // namespace ini::harness
