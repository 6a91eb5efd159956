#include "ini/nets/classifier.hpp"

#include <cmath>
#include <sstream>

#include "ini/autodiff/ops.hpp"
#include "ini/error.hpp"
#include "ini/rng.hpp"

namespace ini::nets {

std::string to_string(Activation activation) {
  return activation == Activation::kRelu ? "relu" : "tanh";
}

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw Error("unknown activation '" + name + "'");
}

std::string Architecture::descriptor() const {
  std::ostringstream os;
  os << "mlp:";
  for (std::size_t i = 0; i < layer_dims.size(); ++i) {
    if (i) os << '-';
    os << layer_dims[i];
  }
  os << ':' << to_string(activation);
  return os.str();
}

void Architecture::validate() const {
  if (layer_dims.size() < 2) throw ShapeError("architecture needs at least input and output widths");
  for (std::size_t d : layer_dims) {
    if (d == 0) throw ShapeError("architecture widths must be positive: " + descriptor());
  }
  if (num_classes() < 2) throw ShapeError("classifier needs at least two classes");
}

std::shared_ptr<const ad::ParamLayout> Classifier::layout_for(const Architecture& arch) {
  arch.validate();
  std::vector<std::pair<std::string, ad::Shape>> entries;
  for (std::size_t l = 0; l < arch.num_layers(); ++l) {
    entries.emplace_back("W" + std::to_string(l), ad::Shape{arch.layer_dims[l], arch.layer_dims[l + 1]});
    entries.emplace_back("b" + std::to_string(l), ad::Shape{arch.layer_dims[l + 1]});
  }
  return std::make_shared<const ad::ParamLayout>(std::move(entries));
}

Classifier::Classifier(Architecture architecture, std::uint64_t seed)
    : arch_(std::move(architecture)), seed_(seed) {
  auto layout = layout_for(arch_);
  Rng rng(seed);
  std::vector<double> flat(layout->size());
  for (std::size_t l = 0; l < arch_.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(arch_.layer_dims[l]));
    for (std::size_t s : {2 * l, 2 * l + 1}) {
      const ad::Segment& seg = layout->segments()[s];
      const std::size_t n = ad::shape_size(seg.shape);
      for (std::size_t i = 0; i < n; ++i) {
        flat[seg.offset + i] = static_cast<double>(static_cast<float>(rng.uniform(-bound, bound)));
      }
    }
  }
  params_ = ad::ParamVector::from_values(std::move(layout), std::move(flat));
}

Classifier::Classifier(Architecture architecture, ad::ParamVector params, std::uint64_t seed)
    : arch_(std::move(architecture)), seed_(seed) {
  set_params(std::move(params));
}

void Classifier::set_params(ad::ParamVector params) {
  if (params_.layout_ptr() && params.layout_ptr() == params_.layout_ptr()) {
    params_ = std::move(params);
    return;
  }
  const auto expected = layout_for(arch_);
  if (!(params.layout() == *expected)) {
    throw ArchitectureMismatchError("parameter layout does not match " + arch_.descriptor());
  }
  params_ = std::move(params);
}

Classifier Classifier::with_params(ad::ParamVector params) const {
  Classifier copy = *this;
  copy.set_params(std::move(params));
  return copy;
}

Classifier Classifier::tracked(ad::Tape& tape) const {
  Classifier copy = *this;
  copy.params_ = params_.track(tape);
  return copy;
}

void Classifier::round_to_float() {
  auto vals = params_.values();
  std::vector<double> rounded(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) rounded[i] = static_cast<double>(static_cast<float>(vals[i]));
  params_ = params_.with_values(std::move(rounded));
}

void Classifier::check_input(const ad::Tensor& x) const {
  if (x.rank() != 2 || x.cols() != arch_.input_dim()) {
    throw ShapeError("input of shape " + ad::shape_string(x.shape()) + " for " + arch_.descriptor());
  }
}

ad::Tensor Classifier::logits(const ad::Tensor& x) const {
  check_input(x);
  ad::Tensor h = x;
  const std::size_t layers = arch_.num_layers();
  for (std::size_t l = 0; l < layers; ++l) {
    h = ad::add_row_vector(ad::matmul(h, params_.segment(2 * l)), params_.segment(2 * l + 1));
    if (l + 1 < layers) h = arch_.activation == Activation::kRelu ? ad::relu(h) : ad::tanh(h);
  }
  return h;
}

ad::Tensor Classifier::log_proba(const ad::Tensor& x) const { return ad::log_softmax(logits(x)); }

ad::Tensor Classifier::predict_proba(const ad::Tensor& x) const { return ad::softmax(logits(x)); }

ad::Tensor Classifier::hard_label(const ad::Tensor& x) const {
  const Classifier plain = with_params(params_.detach());
  return one_hot_argmax(plain.predict_proba(x.detach()));
}

std::vector<int> Classifier::predict(const ad::Tensor& x) const {
  const Classifier plain = with_params(params_.detach());
  return argmax_rows(plain.predict_proba(x.detach()));
}

std::vector<int> argmax_rows(const ad::Tensor& scores) {
  const std::size_t b = scores.rows(), k = scores.cols();
  auto vals = scores.values();
  std::vector<int> out(b);
  for (std::size_t i = 0; i < b; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j) {
      if (vals[i * k + j] > vals[i * k + best]) best = j;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

ad::Tensor one_hot_argmax(const ad::Tensor& scores) {
  const std::vector<int> idx = argmax_rows(scores);
  const std::size_t k = scores.cols();
  std::vector<double> values(idx.size() * k, 0.0);
  for (std::size_t i = 0; i < idx.size(); ++i) values[i * k + static_cast<std::size_t>(idx[i])] = 1.0;
  return ad::Tensor::from({idx.size(), k}, std::move(values));
}

double accuracy(const Classifier& model, const ad::Tensor& x, std::span<const int> labels) {
  if (labels.empty() || labels.size() != x.rows()) {
    throw ShapeError("accuracy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(x.rows()) + " rows");
  }
  const std::vector<int> pred = model.predict(x);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == labels[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

}  // namespace ini::nets
