#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ini/nets/classifier.hpp"

namespace ini::harness {

enum class Defense { kVanilla, kIni, kMad, kAm, kEdm };

std::string to_string(Defense defense);
/// Throws DomainError for an unknown tag.
Defense parse_defense(const std::string& name);

/// Unit times for the analytic batch-query cost of each defense.
struct CostModel {
  double forward = 1.0;       // M_f: one forward pass
  double backward = 1.0;      // M_b: one backward pass
  double search = 1.0;        // S: heuristic search per sample
  double hash = 1.0;          // M_h: hashing
  std::size_t classes = 10;   // C
  std::size_t batch = 1;      // B
  std::size_t ensemble = 1;   // n

  /// Throws DomainError unless all times are positive and counts non-zero.
  void validate() const;
};

/// vanilla, ini: M_f.  mad: M_f + B (C M_b + S).  am: 2 M_f.  edm: n M_f + M_h.
double predict_cost(Defense defense, const CostModel& model);

struct BenchTarget {
  std::string name;
  const nets::Classifier* model = nullptr;
};

struct BenchRow {
  std::string name;
  std::size_t batch_size = 0;
  std::size_t repetitions = 0;
  /// Forward calls timed together in each repetition.
  std::size_t calls_per_repetition = 0;
  /// Median seconds per forward call.
  double median_seconds = 0.0;
  double min_seconds = 0.0;
  double max_seconds = 0.0;
};

/// Times predict_proba on a fixed random batch for every (target, batch
/// size). Repetitions of all targets are interleaved so that drift in machine
/// load affects them alike. Each repetition times enough calls to last at
/// least `min_sample_seconds`. Requires repetitions >= 100.
std::vector<BenchRow> bench_inference(const std::vector<BenchTarget>& targets,
                                      const std::vector<std::size_t>& batch_sizes, std::size_t repetitions,
                                      std::uint64_t seed = 0, double min_sample_seconds = 2e-4);

std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace ini::harness
