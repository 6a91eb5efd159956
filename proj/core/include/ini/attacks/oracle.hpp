#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ini/autodiff/tensor.hpp"
#include "ini/nets/classifier.hpp"

namespace ini::attacks {

enum class LabelMode { kSoft, kHard };

std::string to_string(LabelMode mode);
LabelMode parse_label_mode(const std::string& name);

/// One answered batch.
struct TranscriptEntry {
  ad::Tensor inputs;
  ad::Tensor answers;
  std::size_t spent_after = 0;
};

/// Black-box, budgeted access to a model. Attacks see only this interface.
///
/// Not thread-safe: an oracle and its budget counter belong to one attack.
class QueryOracle {
 public:
  QueryOracle(std::size_t budget, LabelMode mode) : budget_(budget), mode_(mode) {}
  virtual ~QueryOracle() = default;
  QueryOracle(const QueryOracle&) = delete;
  QueryOracle& operator=(const QueryOracle&) = delete;

  /// Answers a [B,D] batch with [B,K] rows: probabilities in soft mode,
  /// one-hot rows in hard mode. Throws BudgetExceededError, without
  /// answering or charging anything, when spent + B would exceed the budget.
  ad::Tensor query(const ad::Tensor& x);

  std::size_t budget() const noexcept { return budget_; }
  std::size_t spent() const noexcept { return spent_; }
  std::size_t remaining() const noexcept { return budget_ - spent_; }
  LabelMode label_mode() const noexcept { return mode_; }

  virtual std::size_t input_dim() const = 0;
  virtual std::size_t num_classes() const = 0;

  const std::vector<TranscriptEntry>& transcript() const noexcept { return transcript_; }
  /// One JSON object per answered batch: inputs, answers, spent.
  std::string transcript_jsonl() const;

 protected:
  /// Soft answers (rows on the simplex) for a validated batch.
  virtual ad::Tensor answer_soft(const ad::Tensor& x) = 0;

 private:
  std::size_t budget_;
  std::size_t spent_ = 0;
  LabelMode mode_;
  std::vector<TranscriptEntry> transcript_;
};

/// Oracle backed by a victim classifier.
class VictimOracle final : public QueryOracle {
 public:
  VictimOracle(nets::Classifier victim, LabelMode mode, std::size_t budget);

  std::size_t input_dim() const override { return victim_.architecture().input_dim(); }
  std::size_t num_classes() const override { return victim_.architecture().num_classes(); }

 protected:
  ad::Tensor answer_soft(const ad::Tensor& x) override;

 private:
  nets::Classifier victim_;
};

}  // namespace ini::attacks
