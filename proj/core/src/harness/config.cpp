#include "ini/harness/config.hpp"

#include <nlohmann/json.hpp>
#include <set>

#include "ini/digest.hpp"
#include "ini/error.hpp"

namespace ini::harness {

namespace {

using nlohmann::json;

// Reads typed fields from one JSON object and rejects keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) throw SchemaError(path_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = object_.find(key);
    if (it == object_.end() || it->is_null()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw SchemaError(path_ + "." + key + ": wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = object_.find(key);
    if (it == object_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  std::string path(const char* key) const { return path_ + "." + key; }

  void finish() const {
    for (auto it = object_.begin(); it != object_.end(); ++it) {
      if (!seen_.count(it.key())) throw SchemaError(path_ + "." + it.key() + ": unknown key");
    }
  }

 private:
  const json& object_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename T, typename Parse>
void get_enum(ObjectReader& r, const char* key, T& out, Parse parse) {
  std::string name;
  r.get(key, name);
  if (name.empty()) return;
  try {
    out = parse(name);
  } catch (const Error& e) {
    throw SchemaError(r.path(key) + ": " + e.what());
  }
}

nets::Architecture parse_arch(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  nets::Architecture a;
  r.get("layer_dims", a.layer_dims);
  get_enum(r, "activation", a.activation, nets::parse_activation);
  r.finish();
  try {
    a.validate();
  } catch (const Error& e) {
    throw SchemaError(path + ": " + e.what());
  }
  return a;
}

json arch_json(const nets::Architecture& a) {
  return {{"layer_dims", a.layer_dims}, {"activation", nets::to_string(a.activation)}};
}

std::string format_name(data::FlatFormat f) { return f == data::FlatFormat::kCsv ? "csv" : "binary"; }

data::FlatFormat parse_format(const std::string& name) {
  if (name == "csv") return data::FlatFormat::kCsv;
  if (name == "binary") return data::FlatFormat::kBinary;
  throw Error("unknown flat-file format '" + name + "'");
}

std::optional<FileSource> parse_file(ObjectReader& files, const char* key) {
  const json* j = files.child(key);
  if (!j) return std::nullopt;
  ObjectReader r(*j, files.path(key));
  FileSource f;
  r.get("path", f.path);
  get_enum(r, "format", f.format, parse_format);
  r.finish();
  if (f.path.empty()) throw SchemaError(files.path(key) + ".path: required");
  return f;
}

json file_json(const std::optional<FileSource>& f) {
  if (!f) return nullptr;
  return {{"path", f->path}, {"format", format_name(f->format)}};
}

TaskSpec parse_task(const json& j) {
  ObjectReader r(j, "task");
  TaskSpec t;
  r.get("num_classes", t.num_classes);
  r.get("dim", t.dim);
  r.get("sigma", t.sigma);
  r.get("spacing", t.spacing);
  r.get("train_per_class", t.train_per_class);
  r.get("test_per_class", t.test_per_class);
  r.get("ood_shift_norm", t.ood_shift_norm);
  r.get("ood_pattern", t.ood_pattern);
  r.get("ood_per_class", t.ood_per_class);
  r.get("surrogate_rho", t.surrogate_rho);
  r.get("surrogate_size", t.surrogate_size);
  r.get("surrogate_ood_shift_norm", t.surrogate_ood_shift_norm);
  r.get("surrogate_ood_pattern", t.surrogate_ood_pattern);
  if (const json* files = r.child("files")) {
    ObjectReader fr(*files, "task.files");
    t.train_file = parse_file(fr, "train");
    t.test_file = parse_file(fr, "test");
    t.ood_file = parse_file(fr, "ood");
    t.surrogate_file = parse_file(fr, "surrogate");
    fr.finish();
  }
  r.finish();
  return t;
}

json task_json(const TaskSpec& t) {
  return {{"num_classes", t.num_classes},
          {"dim", t.dim},
          {"sigma", t.sigma},
          {"spacing", t.spacing},
          {"train_per_class", t.train_per_class},
          {"test_per_class", t.test_per_class},
          {"ood_shift_norm", t.ood_shift_norm},
          {"ood_pattern", t.ood_pattern},
          {"ood_per_class", t.ood_per_class},
          {"surrogate_rho", t.surrogate_rho},
          {"surrogate_size", t.surrogate_size},
          {"surrogate_ood_shift_norm", t.surrogate_ood_shift_norm},
          {"surrogate_ood_pattern", t.surrogate_ood_pattern},
          {"files",
           {{"train", file_json(t.train_file)},
            {"test", file_json(t.test_file)},
            {"ood", file_json(t.ood_file)},
            {"surrogate", file_json(t.surrogate_file)}}}};
}

void parse_train(const json& j, train::TrainConfig& c) {
  ObjectReader r(j, "train");
  r.get("epochs", c.epochs);
  r.get("batch_size", c.batch_size);
  r.get("ood_batch_size", c.ood_batch_size);
  r.get("lr", c.lr.initial);
  r.get("lr_period", c.lr.period);
  r.get("lr_factor", c.lr.factor);
  r.get("momentum", c.momentum);
  r.get("weight_decay", c.weight_decay);
  r.get("gamma1", c.coefficients.gamma1);
  r.get("gamma2", c.coefficients.gamma2);
  r.get("beta", c.coefficients.beta);
  r.get("threshold", c.threshold);
  get_enum(r, "threshold_action", c.threshold_action, [](const std::string& s) {
    if (s == "flag") return train::ThresholdAction::kFlag;
    if (s == "abort") return train::ThresholdAction::kAbort;
    throw Error("unknown threshold action '" + s + "'");
  });
  r.get("threshold_gate", c.threshold_gate);
  r.get("gate_smoothing", c.gate_smoothing);
  r.get("surgery", c.surgery);
  r.get("coefficients_before_surgery", c.coefficients_before_surgery);
  r.get("reinit_clone_each_epoch", c.reinit_clone_each_epoch);
  get_enum(r, "kl_direction", c.loss_options.kl_direction, losses::parse_kl_direction);
  get_enum(r, "grad_norm", c.loss_options.grad_norm, losses::parse_grad_norm);
  get_enum(r, "jacobian_route", c.loss_options.route, losses::parse_jacobian_route);
  r.get("cotrain_ratio", c.cotrain.ratio);
  r.get("cotrain_lr", c.cotrain.lr);
  r.finish();
}

json train_json(const train::TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"ood_batch_size", c.ood_batch_size},
          {"lr", c.lr.initial},
          {"lr_period", c.lr.period},
          {"lr_factor", c.lr.factor},
          {"momentum", c.momentum},
          {"weight_decay", c.weight_decay},
          {"gamma1", c.coefficients.gamma1},
          {"gamma2", c.coefficients.gamma2},
          {"beta", c.coefficients.beta},
          {"threshold", c.threshold},
          {"threshold_action", c.threshold_action == train::ThresholdAction::kFlag ? "flag" : "abort"},
          {"threshold_gate", c.threshold_gate},
          {"gate_smoothing", c.gate_smoothing},
          {"surgery", c.surgery},
          {"coefficients_before_surgery", c.coefficients_before_surgery},
          {"reinit_clone_each_epoch", c.reinit_clone_each_epoch},
          {"kl_direction", losses::to_string(c.loss_options.kl_direction)},
          {"grad_norm", losses::to_string(c.loss_options.grad_norm)},
          {"jacobian_route", losses::to_string(c.loss_options.route)},
          {"cotrain_ratio", c.cotrain.ratio},
          {"cotrain_lr", c.cotrain.lr}};
}

void parse_attack(const json& j, attacks::AttackConfig& a) {
  ObjectReader r(j, "attack");
  get_enum(r, "method", a.method, attacks::parse_attack_method);
  r.get("budget", a.budget);
  get_enum(r, "label_mode", a.label_mode, attacks::parse_label_mode);
  r.get("epochs", a.epochs);
  r.get("with_replacement", a.with_replacement);
  r.get("seeds_count", a.seeds_count);
  r.get("rounds", a.rounds);
  r.get("noise_rate", a.noise_rate);
  r.get("epochs_per_round", a.epochs_per_round);
  r.get("lr", a.lr);
  r.get("batch_size", a.batch_size);
  r.get("momentum", a.momentum);
  r.get("query_batch", a.query_batch);
  if (const json* clone = r.child("clone")) a.clone_arch = parse_arch(*clone, "attack.clone");
  r.finish();
}

json attack_json(const attacks::AttackConfig& a) {
  return {{"method", attacks::to_string(a.method)},
          {"budget", a.budget},
          {"label_mode", attacks::to_string(a.label_mode)},
          {"epochs", a.epochs},
          {"with_replacement", a.with_replacement},
          {"seeds_count", a.seeds_count},
          {"rounds", a.rounds},
          {"noise_rate", a.noise_rate},
          {"epochs_per_round", a.epochs_per_round},
          {"lr", a.lr},
          {"batch_size", a.batch_size},
          {"momentum", a.momentum},
          {"query_batch", a.query_batch},
          {"clone", a.clone_arch ? arch_json(*a.clone_arch) : json(nullptr)}};
}

json config_json(const ExperimentConfig& c) {
  json modes = json::array();
  for (auto m : c.modes) modes.push_back(train::to_string(m));
  return {{"name", c.name},
          {"seeds", c.seeds},
          {"modes", modes},
          {"export_datasets", c.export_datasets},
          {"task", task_json(c.task)},
          {"victim", arch_json(c.train.victim_arch)},
          {"clone", c.train.clone_arch ? arch_json(*c.train.clone_arch) : json(nullptr)},
          {"train", train_json(c.train)},
          {"attack", attack_json(c.attack)}};
}

}  // namespace

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw SchemaError("seeds: at least one seed is required");
  if (modes.empty()) throw SchemaError("modes: at least one mode is required");
  if (task.num_classes != train.victim_arch.num_classes() || task.dim != train.victim_arch.input_dim()) {
    throw SchemaError("victim: layer_dims must start with task.dim and end with task.num_classes");
  }
  if (!(task.surrogate_rho >= 0.0 && task.surrogate_rho <= 1.0)) throw SchemaError("task.surrogate_rho: not in [0, 1]");
  try {
    train.validate();
    attack.validate();
  } catch (const Error& e) {
    throw SchemaError(e.what());
  }
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("config is not valid JSON: ") + e.what());
  }
  ObjectReader r(root, "config");
  ExperimentConfig c;
  r.get("name", c.name);
  r.get("seeds", c.seeds);
  std::vector<std::string> modes;
  r.get("modes", modes);
  if (!modes.empty()) {
    c.modes.clear();
    for (const auto& m : modes) {
      try {
        c.modes.push_back(train::parse_train_mode(m));
      } catch (const Error& e) {
        throw SchemaError(std::string("config.modes: ") + e.what());
      }
    }
  }
  r.get("export_datasets", c.export_datasets);
  if (const json* t = r.child("task")) c.task = parse_task(*t);
  if (const json* v = r.child("victim")) c.train.victim_arch = parse_arch(*v, "victim");
  if (const json* cl = r.child("clone")) c.train.clone_arch = parse_arch(*cl, "clone");
  if (const json* t = r.child("train")) parse_train(*t, c.train);
  if (const json* a = r.child("attack")) parse_attack(*a, c.attack);
  r.finish();
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return parse_experiment_config(read_file_bytes(path));
}

std::string canonical_json(const ExperimentConfig& config) { return config_json(config).dump(2); }

std::string config_digest(const ExperimentConfig& config) { return sha256_hex(config_json(config).dump()); }

std::string victim_config_digest(const ExperimentConfig& config, train::TrainMode mode, std::uint64_t seed) {
  const json j = config_json(config);
  const json part = {{"task", j["task"]}, {"victim", j["victim"]}, {"clone", j["clone"]},
                     {"train", j["train"]}, {"mode", train::to_string(mode)}, {"seed", seed}};
  return sha256_hex(part.dump());
}

std::string attack_config_digest(const ExperimentConfig& config, std::uint64_t seed) {
  const json j = config_json(config);
  const json part = {{"task", j["task"]}, {"attack", j["attack"]}, {"seed", seed}};
  return sha256_hex(part.dump());
}

}  // namespace ini::harness
