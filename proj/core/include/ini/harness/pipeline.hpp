#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ini/attacks/stealing.hpp"
#include "ini/data/dataset.hpp"
#include "ini/harness/config.hpp"
#include "ini/harness/report.hpp"
#include "ini/nets/checkpoint.hpp"
#include "ini/train/train_loop.hpp"

namespace ini::harness {

/// Datasets for one seed. Every mode of a seed sees the same data.
struct SeedData {
  data::LabeledDataset train;
  data::LabeledDataset test;
  data::LabeledDataset ood;
  data::LabeledDataset surrogate;
};

/// Generates (or loads, when the task names files) the datasets for `seed`.
/// Failures are raised as StageError("data").
SeedData prepare_data(const ExperimentConfig& config, std::uint64_t seed);

/// Trains the victim for (mode, seed). Failures are StageError("train").
train::TrainResult train_stage(const ExperimentConfig& config, train::TrainMode mode, std::uint64_t seed,
                               const SeedData& data);

struct AttackOutcome {
  attacks::AttackResult result;
  std::size_t budget = 0;
  std::size_t spent = 0;
  std::string transcript_jsonl;
};

/// Attacks `victim` with the configured method: knockoff queries the
/// surrogate set, JBDA starts from a seeded subset of the training set.
/// Failures are StageError("attack").
AttackOutcome attack_stage(const ExperimentConfig& config, const nets::Classifier& victim, const SeedData& data,
                           std::uint64_t seed);

/// Evaluates and fills every deterministic report field.
ExperimentReport report_stage(const ExperimentConfig& config, train::TrainMode mode, std::uint64_t seed,
                              const nets::Checkpoint& victim, const AttackOutcome& attack, const SeedData& data);

using ProgressFn = std::function<void(const std::string&)>;

/// Runs data -> train -> attack -> evaluate for every (seed, mode) and writes
///
///   <out>/config.json                       canonical configuration
///   <out>/summary.csv                       one row per report
///   <out>/seed_<s>/data/*.csv               when export_datasets is set
///   <out>/seed_<s>/<mode>/victim.ckpt
///   <out>/seed_<s>/<mode>/trace.jsonl
///   <out>/seed_<s>/<mode>/surrogate_clone.ckpt   defended modes only
///   <out>/seed_<s>/<mode>/clone.ckpt
///   <out>/seed_<s>/<mode>/transcript.jsonl
///   <out>/seed_<s>/<mode>/report.json        no wall-clock fields
///   <out>/seed_<s>/<mode>/timings.json
///
/// Artifacts are written as soon as they exist, so a failing stage leaves
/// the earlier ones in place. Errors propagate as StageError.
std::vector<ExperimentReport> run_experiment(const ExperimentConfig& config, const std::string& out_dir,
                                             const ProgressFn& progress = {});

}  // namespace ini::harness
