#include "ini/attacks/oracle.hpp"

#include <nlohmann/json.hpp>

#include "ini/error.hpp"

namespace ini::attacks {

std::string to_string(LabelMode mode) { return mode == LabelMode::kSoft ? "soft" : "hard"; }

LabelMode parse_label_mode(const std::string& name) {
  if (name == "soft") return LabelMode::kSoft;
  if (name == "hard") return LabelMode::kHard;
  throw Error("unknown label mode '" + name + "'");
}

ad::Tensor QueryOracle::query(const ad::Tensor& x) {
  if (x.rank() != 2 || x.cols() != input_dim()) {
    throw ShapeError("query: expected [B," + std::to_string(input_dim()) + "], got " + ad::shape_string(x.shape()));
  }
  const std::size_t b = x.rows();
  if (b > remaining()) throw BudgetExceededError(budget_, spent_, b);
  const ad::Tensor plain = x.detach();
  ad::Tensor answers = answer_soft(plain).detach();
  if (mode_ == LabelMode::kHard) answers = nets::one_hot_argmax(answers);
  spent_ += b;
  transcript_.push_back({plain, answers, spent_});
  return answers;
}

std::string QueryOracle::transcript_jsonl() const {
  std::string out;
  for (std::size_t i = 0; i < transcript_.size(); ++i) {
    const TranscriptEntry& e = transcript_[i];
    const auto rows = [](const ad::Tensor& t) {
      nlohmann::json arr = nlohmann::json::array();
      const std::size_t c = t.cols();
      auto v = t.values();
      for (std::size_t r = 0; r < t.rows(); ++r) {
        arr.push_back(std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(r * c),
                                          v.begin() + static_cast<std::ptrdiff_t>((r + 1) * c)));
      }
      return arr;
    };
    out += nlohmann::json{{"batch", i},
                          {"label_mode", to_string(mode_)},
                          {"inputs", rows(e.inputs)},
                          {"answers", rows(e.answers)},
                          {"spent", e.spent_after},
                          {"budget", budget_}}
               .dump();
    out += '\n';
  }
  return out;
}

VictimOracle::VictimOracle(nets::Classifier victim, LabelMode mode, std::size_t budget)
    : QueryOracle(budget, mode), victim_(std::move(victim)) {
  victim_.set_params(victim_.params().detach());
}

ad::Tensor VictimOracle::answer_soft(const ad::Tensor& x) { return victim_.predict_proba(x); }

}  // namespace ini::attacks
