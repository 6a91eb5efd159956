#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ini/data/dataset.hpp"
#include "ini/nets/classifier.hpp"

namespace ini::harness {

/// Wall-clock seconds per stage. Not part of the deterministic report text.
struct Timings {
  double data_seconds = 0.0;
  double train_seconds = 0.0;
  double attack_seconds = 0.0;
  double eval_seconds = 0.0;
};

struct ExperimentReport {
  std::string experiment;
  std::string mode;
  std::uint64_t seed = 0;
  std::string attack;
  std::string label_mode;
  std::size_t budget = 0;
  std::size_t queries_spent = 0;
  bool truncated = false;
  std::size_t test_size = 0;
  double benign_accuracy = 0.0;
  double clone_accuracy = 0.0;
  /// clone_accuracy / benign_accuracy.
  double relative_performance = 0.0;
  double threshold = 0.0;
  bool threshold_met = true;
  std::string config_digest;
  std::string victim_config_digest;
  std::string attack_config_digest;
  Timings timings;

  /// JSON object with sorted keys. Timings are included only on request so
  /// that re-runs produce identical bytes.
  std::string to_json(bool include_timings = false) const;
};

ExperimentReport parse_report(const std::string& json_text);

/// clone / benign; throws DomainError unless benign > 0.
double relative_performance(double clone_accuracy, double benign_accuracy);
/// Two decimals, half-up.
double round_ratio(double ratio);
/// "0.84×".
std::string format_ratio(double ratio);

/// Accuracies of victim and clone on an ID-tagged, non-empty test set and
/// their ratio. Other fields are left for the caller.
ExperimentReport evaluate(const nets::Classifier& clone, const nets::Classifier& victim,
                          const data::LabeledDataset& test);

/// Flat table: one header line, one line per report.
std::string reports_csv(const std::vector<ExperimentReport>& reports);
std::string timings_json(const Timings& timings);

}  // namespace ini::harness
