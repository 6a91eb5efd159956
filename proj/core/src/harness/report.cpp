#include "ini/harness/report.hpp"

#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <sstream>

#include "ini/error.hpp"

namespace ini::harness {

namespace {

using nlohmann::json;

json timings_object(const Timings& t) {
  return {{"data_seconds", t.data_seconds},
          {"train_seconds", t.train_seconds},
          {"attack_seconds", t.attack_seconds},
          {"eval_seconds", t.eval_seconds}};
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string ExperimentReport::to_json(bool include_timings) const {
  json j = {{"experiment", experiment},
            {"mode", mode},
            {"seed", seed},
            {"attack", attack},
            {"label_mode", label_mode},
            {"budget", budget},
            {"queries_spent", queries_spent},
            {"truncated", truncated},
            {"test_size", test_size},
            {"benign_accuracy", benign_accuracy},
            {"clone_accuracy", clone_accuracy},
            {"relative_performance", relative_performance},
            {"relative_performance_display", format_ratio(relative_performance)},
            {"threshold", threshold},
            {"threshold_met", threshold_met},
            {"config_digest", config_digest},
            {"victim_config_digest", victim_config_digest},
            {"attack_config_digest", attack_config_digest}};
  if (include_timings) j["timings"] = timings_object(timings);
  return j.dump(2) + "\n";
}

ExperimentReport parse_report(const std::string& json_text) {
  try {
    const json j = json::parse(json_text);
    ExperimentReport r;
    r.experiment = j.at("experiment").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.attack = j.at("attack").get<std::string>();
    r.label_mode = j.at("label_mode").get<std::string>();
    r.budget = j.at("budget").get<std::size_t>();
    r.queries_spent = j.at("queries_spent").get<std::size_t>();
    r.truncated = j.at("truncated").get<bool>();
    r.test_size = j.at("test_size").get<std::size_t>();
    r.benign_accuracy = j.at("benign_accuracy").get<double>();
    r.clone_accuracy = j.at("clone_accuracy").get<double>();
    r.relative_performance = j.at("relative_performance").get<double>();
    r.threshold = j.at("threshold").get<double>();
    r.threshold_met = j.at("threshold_met").get<bool>();
    r.config_digest = j.at("config_digest").get<std::string>();
    r.victim_config_digest = j.at("victim_config_digest").get<std::string>();
    r.attack_config_digest = j.at("attack_config_digest").get<std::string>();
    if (auto t = j.find("timings"); t != j.end()) {
      r.timings.data_seconds = t->at("data_seconds").get<double>();
      r.timings.train_seconds = t->at("train_seconds").get<double>();
      r.timings.attack_seconds = t->at("attack_seconds").get<double>();
      r.timings.eval_seconds = t->at("eval_seconds").get<double>();
    }
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("report: ") + e.what());
  }
}

double relative_performance(double clone_accuracy, double benign_accuracy) {
  if (!(benign_accuracy > 0.0)) throw DomainError("relative performance needs a positive benign accuracy");
  return clone_accuracy / benign_accuracy;
}

double round_ratio(double ratio) { return std::floor(ratio * 100.0 + 0.5) / 100.0; }

std::string format_ratio(double ratio) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f×", round_ratio(ratio));
  return buf;
}

ExperimentReport evaluate(const nets::Classifier& clone, const nets::Classifier& victim,
                          const data::LabeledDataset& test) {
  if (test.size() == 0) throw DomainError("evaluate: test set is empty");
  if (test.tag != data::DatasetTag::kId) throw DomainError("evaluate: test set must be tagged id");
  ExperimentReport r;
  r.test_size = test.size();
  r.benign_accuracy = nets::accuracy(victim, test.x, test.labels);
  r.clone_accuracy = nets::accuracy(clone, test.x, test.labels);
  r.relative_performance = relative_performance(r.clone_accuracy, r.benign_accuracy);
  return r;
}

std::string reports_csv(const std::vector<ExperimentReport>& reports) {
  std::ostringstream out;
  out << "experiment,mode,seed,attack,label_mode,budget,queries_spent,truncated,test_size,benign_accuracy,"
         "clone_accuracy,relative_performance,threshold,threshold_met,config_digest,victim_config_digest,"
         "attack_config_digest\n";
  for (const auto& r : reports) {
    out << r.experiment << ',' << r.mode << ',' << r.seed << ',' << r.attack << ',' << r.label_mode << ','
        << r.budget << ',' << r.queries_spent << ',' << (r.truncated ? 1 : 0) << ',' << r.test_size << ','
        << number(r.benign_accuracy) << ',' << number(r.clone_accuracy) << ',' << number(r.relative_performance)
        << ',' << number(r.threshold) << ',' << (r.threshold_met ? 1 : 0) << ',' << r.config_digest << ','
        << r.victim_config_digest << ',' << r.attack_config_digest << '\n';
  }
  return out.str();
}

std::string timings_json(const Timings& timings) { return timings_object(timings).dump(2) + "\n"; }

}  // namespace ini::harness
