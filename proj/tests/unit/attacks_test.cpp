#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "ini/attacks/oracle.hpp"
#include "ini/attacks/stealing.hpp"
#include "ini/data/dataset.hpp"
#include "ini/error.hpp"
#include "ini/rng.hpp"
#include "ini/train/train_loop.hpp"
#include "reference.hpp"

namespace {

using ini::attacks::AttackConfig;
using ini::attacks::AttackMethod;
using ini::attacks::LabelMode;
using ini::attacks::VictimOracle;

ini::data::LabeledDataset blobs(std::uint64_t seed, std::size_t per_class) {
  return ini::data::make_id_blobs({seed, 3, per_class, 4, 0.15, 1.0});
}

const ini::nets::Classifier& trained_victim() {
  static const ini::nets::Classifier victim = [] {
    const auto train = blobs(1, 100);
    ini::train::TrainConfig c;
    c.victim_arch = {{4, 16, 3}, ini::nets::Activation::kRelu};
    c.epochs = 15;
    c.batch_size = 30;
    c.threshold = 0.9;
    c.seed = 1;
    return ini::train::train_victim(c, {&train, nullptr, nullptr}).checkpoint.model;
  }();
  return victim;
}

AttackConfig small_attack(AttackMethod method, std::size_t budget) {
  AttackConfig c;
  c.method = method;
  c.budget = budget;
  c.epochs = 20;
  c.epochs_per_round = 10;
  c.batch_size = 16;
  c.clone_arch = ini::nets::Architecture{{4, 16, 3}, ini::nets::Activation::kRelu};
  return c;
}

std::vector<double> values(const ini::nets::Classifier& m) {
  auto v = m.params().values();
  return {v.begin(), v.end()};
}

TEST(Oracle, BudgetIsEnforcedWithoutPartialCharge) {
  VictimOracle oracle(trained_victim(), LabelMode::kSoft, 10);
  const auto x = blobs(2, 5).x;
  const auto five = ini::ad::Tensor::from({5, 4}, std::vector<double>(x.values().begin(), x.values().begin() + 20));
  const auto one = ini::ad::Tensor::from({1, 4}, std::vector<double>(x.values().begin(), x.values().begin() + 4));
  oracle.query(five);
  oracle.query(five);
  EXPECT_EQ(oracle.spent(), 10u);
  EXPECT_THROW(oracle.query(one), ini::BudgetExceededError);
  EXPECT_EQ(oracle.spent(), 10u);
  EXPECT_EQ(oracle.transcript().size(), 2u);
}

TEST(Oracle, OverBudgetBatchIsRejectedWhole) {
  VictimOracle oracle(trained_victim(), LabelMode::kSoft, 10);
  EXPECT_THROW(oracle.query(blobs(2, 4).x), ini::BudgetExceededError);
  EXPECT_EQ(oracle.spent(), 0u);
  EXPECT_TRUE(oracle.transcript().empty());
}

TEST(Oracle, SoftAnswersEqualVictimProbabilities) {
  const auto x = blobs(3, 10).x;
  VictimOracle oracle(trained_victim(), LabelMode::kSoft, 100);
  const auto answers = oracle.query(x);
  const auto expected = trained_victim().predict_proba(x);
  ASSERT_EQ(answers.shape(), expected.shape());
  for (std::size_t i = 0; i < answers.size(); ++i) EXPECT_EQ(answers.values()[i], expected.values()[i]);
}

TEST(Oracle, HardAnswersAreOneHotArgmax) {
  const auto x = blobs(4, 10).x;
  VictimOracle oracle(trained_victim(), LabelMode::kHard, 100);
  const auto answers = oracle.query(x);
  const auto predicted = trained_victim().predict(x);
  for (std::size_t r = 0; r < answers.rows(); ++r) {
    double sum = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      const double v = answers.values()[r * 3 + k];
      EXPECT_TRUE(v == 0.0 || v == 1.0);
      sum += v;
    }
    EXPECT_EQ(sum, 1.0);
    EXPECT_EQ(answers.values()[r * 3 + static_cast<std::size_t>(predicted[r])], 1.0);
  }
}

TEST(Oracle, TranscriptHasOneLinePerBatch) {
  VictimOracle oracle(trained_victim(), LabelMode::kSoft, 100);
  oracle.query(blobs(5, 2).x);
  oracle.query(blobs(6, 3).x);
  const std::string jsonl = oracle.transcript_jsonl();
  EXPECT_EQ(std::count(jsonl.begin(), jsonl.end(), '\n'), 2);
}

TEST(Knockoff, ZeroBudgetLeavesCloneUntrained) {
  VictimOracle oracle(trained_victim(), LabelMode::kSoft, 0);
  auto c = small_attack(AttackMethod::kKnockoff, 0);
  const auto r = ini::attacks::knockoff_attack(oracle, blobs(7, 50), c, 3);
  const ini::nets::Classifier fresh(*c.clone_arch, ini::derive_seed(3, 1));
  EXPECT_EQ(values(r.clone), values(fresh));
  EXPECT_EQ(r.labeled_samples, 0u);
  EXPECT_EQ(oracle.spent(), 0u);
}

TEST(Knockoff, SameSeedSameClone) {
  const auto surrogate = blobs(8, 100);
  const auto c = small_attack(AttackMethod::kKnockoff, 120);
  VictimOracle o1(trained_victim(), LabelMode::kSoft, 120);
  VictimOracle o2(trained_victim(), LabelMode::kSoft, 120);
  const auto a = ini::attacks::knockoff_attack(o1, surrogate, c, 4);
  const auto b = ini::attacks::knockoff_attack(o2, surrogate, c, 4);
  EXPECT_EQ(values(a.clone), values(b.clone));
  EXPECT_EQ(o1.transcript_jsonl(), o2.transcript_jsonl());
  EXPECT_EQ(o1.spent(), 120u);
  EXPECT_EQ(a.labeled_samples, 120u);
}

TEST(Knockoff, StealsAnUndefendedVictim) {
  const auto surrogate = blobs(9, 100);
  const auto test = blobs(10, 100);
  for (LabelMode mode : {LabelMode::kSoft, LabelMode::kHard}) {
    auto c = small_attack(AttackMethod::kKnockoff, 200);
    c.label_mode = mode;
    VictimOracle oracle(trained_victim(), mode, 200);
    const auto r = ini::attacks::knockoff_attack(oracle, surrogate, c, 5);
    const double acc = ini::nets::accuracy(r.clone, test.x, test.labels);
    EXPECT_GE(acc, 1.0 / 3.0 + 0.20) << ini::attacks::to_string(mode);
  }
}

TEST(Knockoff, BudgetAboveSurrogateNeedsReplacement) {
  VictimOracle oracle(trained_victim(), LabelMode::kSoft, 100);
  auto c = small_attack(AttackMethod::kKnockoff, 100);
  EXPECT_THROW(ini::attacks::knockoff_attack(oracle, blobs(11, 10), c, 0), ini::DomainError);
  c.with_replacement = true;
  const auto r = ini::attacks::knockoff_attack(oracle, blobs(11, 10), c, 0);
  EXPECT_EQ(r.labeled_samples, 100u);
}

TEST(Jbda, PoolDoublesEachRound) {
  auto c = small_attack(AttackMethod::kJbda, 1000);
  c.seeds_count = 5;
  c.rounds = 3;
  VictimOracle oracle(trained_victim(), LabelMode::kSoft, 1000);
  const auto r = ini::attacks::jbda_attack(oracle, blobs(12, 20), c, 6);
  EXPECT_EQ(r.pool_sizes, (std::vector<std::size_t>{5, 10, 20, 40}));
  EXPECT_FALSE(r.truncated);
  EXPECT_EQ(r.labeled_samples, 40u);
  EXPECT_EQ(oracle.spent(), r.labeled_samples);
  EXPECT_EQ(r.epoch_losses.size(), 4u * c.epochs_per_round);
}

TEST(Jbda, ZeroRoundsTrainsOnSeedsOnly) {
  auto c = small_attack(AttackMethod::kJbda, 1000);
  c.seeds_count = 7;
  c.rounds = 0;
  VictimOracle oracle(trained_victim(), LabelMode::kSoft, 1000);
  const auto r = ini::attacks::jbda_attack(oracle, blobs(13, 20), c, 7);
  EXPECT_EQ(r.pool_sizes, (std::vector<std::size_t>{7}));
  EXPECT_EQ(oracle.spent(), 7u);
}

TEST(Jbda, ZeroNoiseDuplicatesRows) {
  auto c = small_attack(AttackMethod::kJbda, 1000);
  c.seeds_count = 4;
  c.rounds = 1;
  c.noise_rate = 0.0;
  VictimOracle oracle(trained_victim(), LabelMode::kSoft, 1000);
  ini::attacks::jbda_attack(oracle, blobs(14, 20), c, 8);
  ASSERT_EQ(oracle.transcript().size(), 2u);
  const auto& first = oracle.transcript()[0].inputs;
  const auto& second = oracle.transcript()[1].inputs;
  ASSERT_EQ(first.shape(), second.shape());
  for (std::size_t i = 0; i < first.size(); ++i) EXPECT_EQ(first.values()[i], second.values()[i]);
}

TEST(Jbda, AugmentedRowsMoveBySignSteps) {
  auto c = small_attack(AttackMethod::kJbda, 1000);
  c.seeds_count = 4;
  c.rounds = 1;
  c.noise_rate = 0.1;
  VictimOracle oracle(trained_victim(), LabelMode::kSoft, 1000);
  ini::attacks::jbda_attack(oracle, blobs(15, 20), c, 9);
  const auto& first = oracle.transcript()[0].inputs;
  const auto& second = oracle.transcript()[1].inputs;
  for (std::size_t i = 0; i < first.size(); ++i) {
    const double step = std::abs(second.values()[i] - first.values()[i]);
    EXPECT_TRUE(std::abs(step - 0.1) < 1e-12 || step == 0.0) << step;
  }
}

TEST(Jbda, BudgetTruncatesRound) {
  auto c = small_attack(AttackMethod::kJbda, 12);
  c.seeds_count = 5;
  c.rounds = 3;
  VictimOracle oracle(trained_victim(), LabelMode::kSoft, 12);
  const auto r = ini::attacks::jbda_attack(oracle, blobs(16, 20), c, 10);
  EXPECT_TRUE(r.truncated);
  EXPECT_EQ(r.pool_sizes, (std::vector<std::size_t>{5, 10, 12}));
  EXPECT_EQ(oracle.spent(), 12u);
  EXPECT_EQ(r.labeled_samples, 12u);
}

TEST(Attacks, RunAgainstLookupOracle) {
  const auto surrogate = blobs(17, 20);
  testref::LookupOracle oracle(4, 3, 30, LabelMode::kSoft);
  for (std::size_t i = 0; i < surrogate.size(); ++i) {
    testref::Vec row(surrogate.x.values().begin() + static_cast<std::ptrdiff_t>(i * 4),
                     surrogate.x.values().begin() + static_cast<std::ptrdiff_t>(i * 4 + 4));
    testref::Vec answer(3, 0.0);
    answer[static_cast<std::size_t>(surrogate.labels[i])] = 1.0;
    oracle.set(row, answer);
  }
  const auto r = ini::attacks::run_attack(oracle, surrogate, small_attack(AttackMethod::kKnockoff, 30), 11);
  EXPECT_EQ(oracle.rows_answered(), 30u);
  EXPECT_EQ(oracle.spent(), 30u);
  EXPECT_EQ(r.labeled_samples, 30u);

  testref::LookupOracle jb(4, 3, 25, LabelMode::kHard);
  auto c = small_attack(AttackMethod::kJbda, 25);
  c.seeds_count = 5;
  c.rounds = 2;
  const auto rj = ini::attacks::run_attack(jb, surrogate, c, 12);
  EXPECT_EQ(jb.rows_answered(), 20u);
  EXPECT_EQ(rj.pool_sizes, (std::vector<std::size_t>{5, 10, 20}));
}

TEST(Attacks, ConfigValidation) {
  auto c = small_attack(AttackMethod::kKnockoff, 10);
  c.lr = 0.0;
  EXPECT_THROW(c.validate(), ini::DomainError);
  EXPECT_EQ(ini::attacks::parse_attack_method("jbda"), AttackMethod::kJbda);
  EXPECT_THROW(ini::attacks::parse_attack_method("mad"), ini::Error);
}

}  // namespace
