#include "ini/harness/pipeline.hpp"

#include <chrono>
#include <filesystem>

#include "ini/attacks/oracle.hpp"
#include "ini/digest.hpp"
#include "ini/error.hpp"
#include "ini/rng.hpp"

namespace ini::harness {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

enum SeedStream : std::uint64_t {
  kTrainData = 11,
  kTestData = 12,
  kOodData = 13,
  kSurrogateId = 14,
  kSurrogateOod = 15,
  kSurrogateMask = 16,
  kTraining = 17,
  kAttack = 18,
  kJbdaSeeds = 19,
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Runs `body`, converting any library or standard error into StageError.
template <typename F>
auto in_stage(const char* stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

data::LabeledDataset load_or(const std::optional<FileSource>& file, const TaskSpec& task, data::DatasetTag tag,
                             const std::function<data::LabeledDataset()>& generate) {
  if (!file) return generate();
  data::FlatSchema schema{file->format, task.dim, task.num_classes, tag};
  return data::load_flatfile(file->path, schema);
}

data::BlobSpec blob_spec(const TaskSpec& task, std::uint64_t seed, std::size_t per_class) {
  return data::BlobSpec{seed, task.num_classes, per_class, task.dim, task.sigma, task.spacing};
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  write_file_bytes(path.string(), text);
}

// Generated ID and OOD families must stay apart: the mean ID-to-OOD center
// distance has to exceed kMinShiftInSigmas * sigma of the ID family.
void check_separation(const data::LabeledDataset& id, const data::LabeledDataset& ood, const char* name) {
  if (!id.geometry || !ood.geometry) return;
  const double distance = data::mean_center_distance(*id.geometry, *ood.geometry);
  const double required = data::kMinShiftInSigmas * id.geometry->sigma;
  if (!(distance > required)) {
    throw SeparationError(std::string(name) + ": mean ID/OOD center distance " + std::to_string(distance) +
                          " does not exceed " + std::to_string(required));
  }
}

}  // namespace

SeedData prepare_data(const ExperimentConfig& config, std::uint64_t seed) {
  return in_stage("data", [&] {
    const TaskSpec& t = config.task;
    SeedData d;
    d.train = load_or(t.train_file, t, data::DatasetTag::kId, [&] {
      return data::make_id_blobs(blob_spec(t, derive_seed(seed, kTrainData), t.train_per_class));
    });
    d.test = load_or(t.test_file, t, data::DatasetTag::kId, [&] {
      return data::make_id_blobs(blob_spec(t, derive_seed(seed, kTestData), t.test_per_class));
    });
    d.ood = load_or(t.ood_file, t, data::DatasetTag::kOod, [&] {
      // Drawn from clusters sized like the OOD family, translated away from the ID ones.
      const auto base = data::make_id_blobs(blob_spec(t, derive_seed(seed, kOodData), t.ood_per_class));
      return data::make_ood_shifted(derive_seed(seed, kOodData) + 1, base,
                                    data::shift_vector(t.dim, t.ood_shift_norm, t.ood_pattern), false);
    });
    d.surrogate = load_or(t.surrogate_file, t, data::DatasetTag::kSurrogate, [&] {
      data::SurrogateSources src;
      src.id_family = blob_spec(t, derive_seed(seed, kSurrogateId), 1);
      src.ood_shift = data::shift_vector(t.dim, t.surrogate_ood_shift_norm, t.surrogate_ood_pattern);
      src.ood_seed = derive_seed(seed, kSurrogateOod);
      return data::make_surrogate(derive_seed(seed, kSurrogateMask), t.surrogate_rho, t.surrogate_size, src);
    });
    for (const auto* set : {&d.train, &d.test, &d.ood, &d.surrogate}) set->validate();
    check_separation(d.train, d.ood, "ood");
    if (d.train.dim() != t.dim || d.test.dim() != t.dim || d.ood.dim() != t.dim || d.surrogate.dim() != t.dim) {
      throw ShapeError("dataset width differs from task.dim");
    }
    return d;
  });
}

train::TrainResult train_stage(const ExperimentConfig& config, train::TrainMode mode, std::uint64_t seed,
                               const SeedData& data) {
  return in_stage("train", [&] {
    train::TrainConfig tc = config.train;
    tc.mode = mode;
    tc.seed = derive_seed(seed, kTraining);
    tc.config_digest = victim_config_digest(config, mode, seed);
    return train::train_victim(tc, train::TrainData{&data.train, &data.ood, &data.test});
  });
}

AttackOutcome attack_stage(const ExperimentConfig& config, const nets::Classifier& victim, const SeedData& data,
                           std::uint64_t seed) {
  return in_stage("attack", [&] {
    attacks::AttackConfig ac = config.attack;
    if (!ac.clone_arch) ac.clone_arch = victim.architecture();
    attacks::VictimOracle oracle(victim, ac.label_mode, ac.budget);
    const std::uint64_t attack_seed = derive_seed(seed, kAttack);
    std::optional<attacks::AttackResult> result;
    if (ac.method == attacks::AttackMethod::kKnockoff) {
      result.emplace(attacks::knockoff_attack(oracle, data.surrogate, ac, attack_seed));
    } else {
      Rng rng(derive_seed(seed, kJbdaSeeds));
      auto picks = rng.permutation(data.train.size());
      picks.resize(std::min(picks.size(), ac.seeds_count));
      result.emplace(attacks::jbda_attack(oracle, data.train.subset(picks), ac, attack_seed));
    }
    return AttackOutcome{std::move(*result), oracle.budget(), oracle.spent(), oracle.transcript_jsonl()};
  });
}

ExperimentReport report_stage(const ExperimentConfig& config, train::TrainMode mode, std::uint64_t seed,
                              const nets::Checkpoint& victim, const AttackOutcome& attack, const SeedData& data) {
  return in_stage("evaluate", [&] {
    ExperimentReport r = evaluate(attack.result.clone, victim.model, data.test);
    r.experiment = config.name;
    r.mode = train::to_string(mode);
    r.seed = seed;
    r.attack = attacks::to_string(config.attack.method);
    r.label_mode = attacks::to_string(config.attack.label_mode);
    r.budget = attack.budget;
    r.queries_spent = attack.spent;
    r.truncated = attack.result.truncated;
    r.threshold = config.train.threshold;
    r.threshold_met = r.benign_accuracy >= config.train.threshold;
    r.config_digest = config_digest(config);
    r.victim_config_digest = victim.config_digest;
    r.attack_config_digest = attack_config_digest(config, seed);
    return r;
  });
}

std::vector<ExperimentReport> run_experiment(const ExperimentConfig& config, const std::string& out_dir,
                                             const ProgressFn& progress) {
  const fs::path out(out_dir);
  in_stage("config", [&] {
    config.validate();
    write_text(out / "config.json", canonical_json(config) + "\n");
  });
  auto note = [&](const std::string& msg) {
    if (progress) progress(msg);
  };
  std::vector<ExperimentReport> reports;
  for (std::uint64_t seed : config.seeds) {
    const fs::path seed_dir = out / ("seed_" + std::to_string(seed));
    auto t0 = Clock::now();
    const SeedData data = prepare_data(config, seed);
    const double data_seconds = seconds_since(t0);
    if (config.export_datasets) {
      in_stage("data", [&] {
        fs::create_directories(seed_dir / "data");
        data::export_flatfile(data.train, (seed_dir / "data" / "train.csv").string(), data::FlatFormat::kCsv);
        data::export_flatfile(data.test, (seed_dir / "data" / "test.csv").string(), data::FlatFormat::kCsv);
        data::export_flatfile(data.ood, (seed_dir / "data" / "ood.csv").string(), data::FlatFormat::kCsv);
        data::export_flatfile(data.surrogate, (seed_dir / "data" / "surrogate.csv").string(),
                              data::FlatFormat::kCsv);
      });
    }
    for (train::TrainMode mode : config.modes) {
      const std::string tag = "seed " + std::to_string(seed) + " " + train::to_string(mode);
      const fs::path dir = seed_dir / train::to_string(mode);
      Timings timings;
      timings.data_seconds = data_seconds;

      note(tag + ": train");
      t0 = Clock::now();
      const train::TrainResult trained = train_stage(config, mode, seed, data);
      timings.train_seconds = seconds_since(t0);
      in_stage("train", [&] {
        fs::create_directories(dir);
        nets::save_checkpoint(trained.checkpoint, (dir / "victim.ckpt").string());
        write_text(dir / "trace.jsonl", trained.trace.to_jsonl());
        if (trained.clone) {
          nets::Checkpoint surrogate{*trained.clone, trained.checkpoint.config_digest, {}};
          surrogate.metadata.mode = "surrogate_clone";
          nets::save_checkpoint(surrogate, (dir / "surrogate_clone.ckpt").string());
        }
      });

      note(tag + ": attack");
      t0 = Clock::now();
      const AttackOutcome attack = attack_stage(config, trained.checkpoint.model, data, seed);
      timings.attack_seconds = seconds_since(t0);
      in_stage("attack", [&] {
        write_text(dir / "transcript.jsonl", attack.transcript_jsonl);
        nets::Checkpoint clone{attack.result.clone, attack_config_digest(config, seed), {}};
        clone.metadata.mode = "clone";
        nets::save_checkpoint(clone, (dir / "clone.ckpt").string());
      });

      note(tag + ": evaluate");
      t0 = Clock::now();
      ExperimentReport report = report_stage(config, mode, seed, trained.checkpoint, attack, data);
      timings.eval_seconds = seconds_since(t0);
      report.timings = timings;
      in_stage("report", [&] {
        write_text(dir / "report.json", report.to_json(false));
        write_text(dir / "timings.json", timings_json(timings));
      });
      note(tag + ": benign " + std::to_string(report.benign_accuracy) + " clone " +
           std::to_string(report.clone_accuracy) + " (" + format_ratio(report.relative_performance) + ")");
      reports.push_back(std::move(report));
      in_stage("report", [&] { write_text(out / "summary.csv", reports_csv(reports)); });
    }
  }
  return reports;
}

}  // namespace ini::harness
