#include "ini/harness/cost.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>

#include "ini/error.hpp"
#include "ini/rng.hpp"

namespace ini::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double time_calls(const nets::Classifier& model, const ad::Tensor& x, std::size_t calls) {
  volatile double sink = 0.0;
  const auto t0 = Clock::now();
  for (std::size_t c = 0; c < calls; ++c) sink = model.predict_proba(x).values()[0];
  (void)sink;
  return seconds_since(t0);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string to_string(Defense defense) {
  switch (defense) {
    case Defense::kVanilla: return "vanilla";
    case Defense::kIni: return "ini";
    case Defense::kMad: return "mad";
    case Defense::kAm: return "am";
    case Defense::kEdm: return "edm";
  }
  throw DomainError("unknown defense");
}

Defense parse_defense(const std::string& name) {
  for (Defense d : {Defense::kVanilla, Defense::kIni, Defense::kMad, Defense::kAm, Defense::kEdm}) {
    if (to_string(d) == name) return d;
  }
  throw DomainError("unknown defense tag '" + name + "'");
}

void CostModel::validate() const {
  if (!(forward > 0.0 && backward > 0.0 && search > 0.0 && hash > 0.0)) {
    throw DomainError("cost model unit times must be positive");
  }
  if (classes == 0 || batch == 0 || ensemble == 0) throw DomainError("cost model counts must be positive");
}

double predict_cost(Defense defense, const CostModel& m) {
  m.validate();
  const double b = static_cast<double>(m.batch), c = static_cast<double>(m.classes);
  switch (defense) {
    case Defense::kVanilla:
    case Defense::kIni: return m.forward;
    case Defense::kMad: return m.forward + b * (c * m.backward + m.search);
    case Defense::kAm: return 2.0 * m.forward;
    case Defense::kEdm: return static_cast<double>(m.ensemble) * m.forward + m.hash;
  }
  throw DomainError("unknown defense");
}

std::vector<BenchRow> bench_inference(const std::vector<BenchTarget>& targets,
                                      const std::vector<std::size_t>& batch_sizes, std::size_t repetitions,
                                      std::uint64_t seed, double min_sample_seconds) {
  if (repetitions < 100) throw DomainError("bench_inference: at least 100 repetitions are required");
  if (targets.empty()) return {};
  for (const auto& t : targets) {
    if (!t.model) throw DomainError("bench_inference: target '" + t.name + "' has no model");
  }
  std::vector<BenchRow> rows;
  for (std::size_t batch : batch_sizes) {
    if (batch == 0) throw DomainError("bench_inference: batch size 0");
    // One input per distinct input width.
    std::vector<ad::Tensor> inputs;
    for (const auto& t : targets) {
      const std::size_t d = t.model->architecture().input_dim();
      Rng rng(derive_seed(seed, batch * 1000003 + d));
      std::vector<double> v(batch * d);
      for (auto& e : v) e = rng.normal();
      inputs.push_back(ad::Tensor::from({batch, d}, std::move(v)));
    }
    // Calibrate on the slowest target so every sample is long enough.
    std::size_t calls = 1;
    for (;;) {
      double slowest = 0.0;
      for (std::size_t i = 0; i < targets.size(); ++i) {
        slowest = std::max(slowest, time_calls(*targets[i].model, inputs[i], calls));
      }
      if (slowest >= min_sample_seconds || calls >= (1u << 20)) break;
      calls *= 2;
    }
    std::vector<std::vector<double>> samples(targets.size());
    for (std::size_t r = 0; r < repetitions; ++r) {
      for (std::size_t i = 0; i < targets.size(); ++i) {
        // Alternate the order so no target always runs right after another.
        const std::size_t k = r % 2 ? targets.size() - 1 - i : i;
        samples[k].push_back(time_calls(*targets[k].model, inputs[k], calls) / static_cast<double>(calls));
      }
    }
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const auto [lo, hi] = std::minmax_element(samples[i].begin(), samples[i].end());
      rows.push_back(BenchRow{targets[i].name, batch, repetitions, calls, median(samples[i]), *lo, *hi});
    }
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << "name,batch_size,repetitions,calls_per_repetition,median_seconds,min_seconds,max_seconds\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%.9g,%.9g,%.9g\n", r.batch_size, r.repetitions,
                  r.calls_per_repetition, r.median_seconds, r.min_seconds, r.max_seconds);
    out << r.name << ',' << buf;
  }
  return out.str();
}

}  // namespace ini::harness
