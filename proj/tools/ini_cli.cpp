// Command-line front end: train, attack, eval, bench and run.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ini/digest.hpp"
#include "ini/error.hpp"
#include "ini/harness/config.hpp"
#include "ini/harness/cost.hpp"
#include "ini/harness/pipeline.hpp"
#include "ini/harness/report.hpp"
#include "ini/nets/checkpoint.hpp"

namespace fs = std::filesystem;
using namespace ini;
using namespace ini::harness;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string mode;
  std::string attack;
  std::string label_mode;
  std::optional<std::size_t> budget;
};

void add_common(CLI::App* cmd, Overrides& o, bool needs_out = true) {
  cmd->add_option("--config", o.config_path, "Experiment configuration (JSON)");
  cmd->add_option("--seed", o.seed, "Run a single seed instead of the configured list");
  if (needs_out) cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--attack", o.attack, "Attack method")->check(CLI::IsMember({"knockoff", "jbda"}));
  cmd->add_option("--label-mode", o.label_mode, "Oracle answers")->check(CLI::IsMember({"soft", "hard"}));
  cmd->add_option("--budget", o.budget, "Query budget");
}

ExperimentConfig load_config(const Overrides& o) {
  try {
    ExperimentConfig c = o.config_path.empty() ? ExperimentConfig{} : load_experiment_config(o.config_path);
    if (o.seed) c.seeds = {*o.seed};
    if (!o.mode.empty()) c.modes = {train::parse_train_mode(o.mode)};
    if (!o.attack.empty()) c.attack.method = attacks::parse_attack_method(o.attack);
    if (!o.label_mode.empty()) c.attack.label_mode = attacks::parse_label_mode(o.label_mode);
    if (o.budget) c.attack.budget = *o.budget;
    c.validate();
    return c;
  } catch (const std::exception& e) {
    throw StageError("config", e.what());
  }
}

std::uint64_t single_seed(const ExperimentConfig& c) { return c.seeds.front(); }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file_bytes(path.string(), text);
}

nets::Checkpoint load_model(const std::string& path, const char* stage) {
  try {
    return nets::load_checkpoint(path);
  } catch (const std::exception& e) {
    throw StageError(stage, path + ": " + e.what());
  }
}

int cmd_run(const Overrides& o) {
  const ExperimentConfig c = load_config(o);
  const auto reports = run_experiment(c, o.out, [](const std::string& msg) { std::cerr << msg << "\n"; });
  std::cout << reports_csv(reports);
  return 0;
}

int cmd_train(const Overrides& o) {
  const ExperimentConfig c = load_config(o);
  const std::uint64_t seed = single_seed(c);
  const train::TrainMode mode = c.modes.front();
  const SeedData data = prepare_data(c, seed);
  const train::TrainResult r = train_stage(c, mode, seed, data);
  const fs::path out(o.out);
  fs::create_directories(out);
  nets::save_checkpoint(r.checkpoint, (out / "victim.ckpt").string());
  write_text(out / "trace.jsonl", r.trace.to_jsonl());
  std::printf("victim %s seed %llu: benign accuracy %.4f (threshold %.2f %s)\n", train::to_string(mode).c_str(),
              static_cast<unsigned long long>(seed), r.checkpoint.metadata.benign_accuracy,
              r.checkpoint.metadata.threshold, r.checkpoint.metadata.threshold_met ? "met" : "NOT met");
  return 0;
}

int cmd_attack(const Overrides& o, const std::string& victim_path) {
  const ExperimentConfig c = load_config(o);
  const std::uint64_t seed = single_seed(c);
  const nets::Checkpoint victim = load_model(victim_path, "attack");
  const SeedData data = prepare_data(c, seed);
  const AttackOutcome a = attack_stage(c, victim.model, data, seed);
  const fs::path out(o.out);
  fs::create_directories(out);
  nets::Checkpoint clone{a.result.clone, attack_config_digest(c, seed), {}};
  clone.metadata.mode = "clone";
  nets::save_checkpoint(clone, (out / "clone.ckpt").string());
  write_text(out / "transcript.jsonl", a.transcript_jsonl);
  const nlohmann::json summary{{"attack", attacks::to_string(c.attack.method)},
                               {"label_mode", attacks::to_string(c.attack.label_mode)},
                               {"budget", a.budget},
                               {"queries_spent", a.spent},
                               {"truncated", a.result.truncated},
                               {"labeled_samples", a.result.labeled_samples}};
  write_text(out / "attack.json", summary.dump(2) + "\n");
  std::printf("%s attack spent %zu of %zu queries\n", attacks::to_string(c.attack.method).c_str(), a.spent,
              a.budget);
  return 0;
}

int cmd_eval(const Overrides& o, const std::string& victim_path, const std::string& clone_path) {
  const ExperimentConfig c = load_config(o);
  const std::uint64_t seed = single_seed(c);
  const nets::Checkpoint victim = load_model(victim_path, "evaluate");
  const nets::Checkpoint clone = load_model(clone_path, "evaluate");
  const SeedData data = prepare_data(c, seed);
  ExperimentReport r;
  try {
    r = evaluate(clone.model, victim.model, data.test);
  } catch (const std::exception& e) {
    throw StageError("evaluate", e.what());
  }
  r.experiment = c.name;
  r.mode = victim.metadata.mode;
  r.seed = seed;
  r.attack = attacks::to_string(c.attack.method);
  r.label_mode = attacks::to_string(c.attack.label_mode);
  r.budget = c.attack.budget;
  r.threshold = c.train.threshold;
  r.threshold_met = r.benign_accuracy >= c.train.threshold;
  r.config_digest = config_digest(c);
  r.victim_config_digest = victim.config_digest;
  r.attack_config_digest = clone.config_digest;
  const fs::path summary = fs::path(clone_path).parent_path() / "attack.json";
  if (fs::exists(summary)) {
    try {
      const auto j = nlohmann::json::parse(read_file_bytes(summary.string()));
      r.attack = j.at("attack").get<std::string>();
      r.label_mode = j.at("label_mode").get<std::string>();
      r.budget = j.at("budget").get<std::size_t>();
      r.queries_spent = j.at("queries_spent").get<std::size_t>();
      r.truncated = j.at("truncated").get<bool>();
    } catch (const std::exception& e) {
      throw StageError("evaluate", summary.string() + ": " + e.what());
    }
  }
  write_text(fs::path(o.out) / "report.json", r.to_json(false));
  std::printf("benign %.4f clone %.4f relative %s\n", r.benign_accuracy, r.clone_accuracy,
              format_ratio(r.relative_performance).c_str());
  return 0;
}

struct BenchOptions {
  std::vector<std::string> checkpoints;
  std::vector<std::size_t> batch_sizes{1, 32, 256};
  std::size_t repetitions = 200;
  double backward_ratio = 2.0;
  double search_ratio = 1.0;
  double hash_ratio = 0.1;
  std::size_t ensemble = 5;
};

int cmd_bench(const BenchOptions& b, const std::string& out) {
  if (b.checkpoints.empty()) throw StageError("bench", "at least one --checkpoint is required");
  std::vector<nets::Checkpoint> models;
  for (const auto& p : b.checkpoints) models.push_back(load_model(p, "bench"));
  std::vector<BenchTarget> targets;
  for (std::size_t i = 0; i < models.size(); ++i) targets.push_back({b.checkpoints[i], &models[i].model});
  std::vector<BenchRow> rows;
  try {
    rows = bench_inference(targets, b.batch_sizes, b.repetitions);
  } catch (const std::exception& e) {
    throw StageError("bench", e.what());
  }
  std::string cost = "checkpoint,batch_size,defense,predicted_seconds\n";
  for (const auto& row : rows) {
    const std::size_t i = static_cast<std::size_t>(&row - rows.data()) % models.size();
    CostModel m;
    m.forward = row.median_seconds;
    m.backward = b.backward_ratio * row.median_seconds;
    m.search = b.search_ratio * row.median_seconds;
    m.hash = b.hash_ratio * row.median_seconds;
    m.classes = models[i].model.architecture().num_classes();
    m.batch = row.batch_size;
    m.ensemble = b.ensemble;
    for (Defense d : {Defense::kVanilla, Defense::kIni, Defense::kMad, Defense::kAm, Defense::kEdm}) {
      char buf[64];
      std::snprintf(buf, sizeof buf, ",%zu,%s,%.9g\n", row.batch_size, to_string(d).c_str(), predict_cost(d, m));
      cost += row.name + buf;
    }
  }
  const std::string table = bench_csv(rows);
  fs::create_directories(out);
  write_text(fs::path(out) / "bench.csv", table);
  write_text(fs::path(out) / "cost.csv", cost);
  std::cout << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-stealing defense lab"};
  app.require_subcommand(1);

  Overrides run_o, train_o, attack_o, eval_o;
  std::string attack_victim, eval_victim, eval_clone;

  auto* run = app.add_subcommand("run", "Full pipeline: train, attack and evaluate every seed and mode");
  add_common(run, run_o);
  run->add_option("--mode", run_o.mode, "Run a single training mode")
      ->check(CLI::IsMember({"vanilla", "ini", "ini_cotrain", "ini+adversarial-cotrain"}));

  auto* tr = app.add_subcommand("train", "Train one victim");
  add_common(tr, train_o);
  tr->add_option("--mode", train_o.mode, "Training mode")
      ->check(CLI::IsMember({"vanilla", "ini", "ini_cotrain", "ini+adversarial-cotrain"}))
      ->required();

  auto* at = app.add_subcommand("attack", "Attack a trained victim");
  add_common(at, attack_o);
  at->add_option("--victim", attack_victim, "Victim checkpoint")->required();

  auto* ev = app.add_subcommand("eval", "Evaluate a victim and its clone on the test set");
  add_common(ev, eval_o);
  ev->add_option("--victim", eval_victim, "Victim checkpoint")->required();
  ev->add_option("--clone", eval_clone, "Clone checkpoint")->required();

  BenchOptions bench_o;
  std::string bench_out = "bench";
  auto* be = app.add_subcommand("bench", "Inference latency and analytic defense cost");
  be->add_option("--checkpoint", bench_o.checkpoints, "Checkpoints to time (repeatable)")->required();
  be->add_option("--batch-sizes", bench_o.batch_sizes, "Batch sizes")->delimiter(',');
  be->add_option("--repetitions", bench_o.repetitions, "Timed repetitions per (checkpoint, batch)");
  be->add_option("--backward-ratio", bench_o.backward_ratio, "M_b as a multiple of the measured M_f");
  be->add_option("--search-ratio", bench_o.search_ratio, "S as a multiple of the measured M_f");
  be->add_option("--hash-ratio", bench_o.hash_ratio, "M_h as a multiple of the measured M_f");
  be->add_option("--ensemble", bench_o.ensemble, "Ensemble size n");
  be->add_option("--out", bench_out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_o);
    if (*tr) return cmd_train(train_o);
    if (*at) return cmd_attack(attack_o, attack_victim);
    if (*ev) return cmd_eval(eval_o, eval_victim, eval_clone);
    if (*be) return cmd_bench(bench_o, bench_out);
  } catch (const StageError& e) {
    std::fprintf(stderr, "error [%s]: %s\n", e.stage().c_str(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error [output]: %s\n", e.what());
    return 3;
  }
  return 1;
}
