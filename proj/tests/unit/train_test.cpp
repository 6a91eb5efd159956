#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "ini/data/dataset.hpp"
#include "ini/error.hpp"
#include "ini/harness/config.hpp"
#include "ini/harness/pipeline.hpp"
#include "ini/train/train_loop.hpp"

namespace {

using ini::train::TrainConfig;
using ini::train::TrainMode;

struct SmallTask {
  ini::data::LabeledDataset train;
  ini::data::LabeledDataset ood;
};

SmallTask small_task(std::uint64_t seed) {
  ini::data::BlobSpec spec{seed, 3, 40, 4, 0.15, 1.0};
  SmallTask t;
  t.train = ini::data::make_id_blobs(spec);
  const auto shift = ini::data::shift_vector(4, 2.0, "ones");
  t.ood = ini::data::make_ood_shifted(seed + 100, ini::data::make_id_blobs({seed + 200, 3, 20, 4, 0.15, 1.0}), shift,
                                      false);
  return t;
}

TrainConfig small_config(TrainMode mode, std::uint64_t seed) {
  TrainConfig c;
  c.mode = mode;
  c.victim_arch = {{4, 12, 3}, ini::nets::Activation::kRelu};
  c.epochs = 3;
  c.batch_size = 30;
  c.lr = {0.1, 20, 0.1};
  c.coefficients = {0.03, 0.03, 1.0};
  c.threshold = 0.1;
  c.seed = seed;
  return c;
}

std::vector<double> values(const ini::nets::Classifier& m) {
  auto v = m.params().values();
  return {v.begin(), v.end()};
}

TEST(LrSchedule, StepDecay) {
  ini::train::LrSchedule s{0.1, 20, 0.1};
  EXPECT_DOUBLE_EQ(ini::train::anneal_lr(s, 0), 0.1);
  EXPECT_DOUBLE_EQ(ini::train::anneal_lr(s, 19), 0.1);
  EXPECT_NEAR(ini::train::anneal_lr(s, 20), 0.01, 1e-15);
  EXPECT_NEAR(ini::train::anneal_lr(s, 45), 0.001, 1e-15);
}

TEST(Sgd, MomentumAndWeightDecayArithmetic) {
  auto layout = std::make_shared<const ini::ad::ParamLayout>(
      std::vector<std::pair<std::string, ini::ad::Shape>>{{"w", ini::ad::Shape{2}}});
  const auto p = ini::ad::ParamVector::from_values(layout, {1.0, 2.0});
  const auto g = ini::ad::ParamVector::from_values(layout, {0.5, -1.0});
  ini::train::Sgd opt(0.5, 0.1);
  // d = g + 0.1 p = (0.6, -0.8); v = d; p' = p - 0.1 v.
  auto p1 = opt.step(p, g, 0.1);
  EXPECT_NEAR(p1.values()[0], 0.94, 1e-15);
  EXPECT_NEAR(p1.values()[1], 2.08, 1e-15);
  // d = g + 0.1 p1 = (0.594, -0.792); v = 0.5 (0.6, -0.8) + d = (0.894, -1.192).
  auto p2 = opt.step(p1, g, 0.1);
  EXPECT_NEAR(p2.values()[0], 0.94 - 0.0894, 1e-14);
  EXPECT_NEAR(p2.values()[1], 2.08 + 0.1192, 1e-14);
}

TEST(TrainMode, ParsesNamesAndAliases) {
  EXPECT_EQ(ini::train::parse_train_mode("vanilla"), TrainMode::kVanilla);
  EXPECT_EQ(ini::train::parse_train_mode("ini"), TrainMode::kIni);
  EXPECT_EQ(ini::train::parse_train_mode("ini+adversarial-cotrain"), TrainMode::kIniCotrain);
  EXPECT_EQ(ini::train::parse_train_mode(ini::train::to_string(TrainMode::kIniCotrain)), TrainMode::kIniCotrain);
  EXPECT_THROW(ini::train::parse_train_mode("mad"), ini::Error);
}

TEST(TrainConfig, RejectsInvalidSettings) {
  auto c = small_config(TrainMode::kVanilla, 0);
  c.threshold = 0.0;
  EXPECT_THROW(c.validate(), ini::Error);
  c = small_config(TrainMode::kVanilla, 0);
  c.coefficients.gamma1 = -1.0;
  EXPECT_THROW(c.validate(), ini::Error);
  c = small_config(TrainMode::kIni, 0);
  const auto t = small_task(0);
  EXPECT_THROW(ini::train::train_victim(c, {&t.train, nullptr, nullptr}), ini::Error);
}

TEST(TrainVictim, VanillaLearnsSeparableBlobs) {
  const auto t = small_task(1);
  auto c = small_config(TrainMode::kVanilla, 1);
  c.epochs = 10;
  const auto r = ini::train::train_victim(c, {&t.train, nullptr, nullptr});
  EXPECT_GE(r.checkpoint.metadata.benign_accuracy, 0.95);
  EXPECT_EQ(r.checkpoint.metadata.mode, "vanilla");
  EXPECT_FALSE(r.clone.has_value());
  EXPECT_EQ(r.trace.epochs.size(), 10u);
}

TEST(TrainVictim, SameSeedSameParameters) {
  const auto t = small_task(2);
  const auto c = small_config(TrainMode::kIni, 2);
  const auto a = ini::train::train_victim(c, {&t.train, &t.ood, nullptr});
  const auto b = ini::train::train_victim(c, {&t.train, &t.ood, nullptr});
  EXPECT_EQ(values(a.checkpoint.model), values(b.checkpoint.model));
  EXPECT_EQ(a.trace.to_jsonl(), b.trace.to_jsonl());
  auto c2 = c;
  c2.seed = 3;
  const auto d = ini::train::train_victim(c2, {&t.train, &t.ood, nullptr});
  EXPECT_NE(values(a.checkpoint.model), values(d.checkpoint.model));
}

TEST(TrainVictim, ParametersAreFloat32Representable) {
  const auto t = small_task(4);
  const auto r = ini::train::train_victim(small_config(TrainMode::kIni, 4), {&t.train, &t.ood, nullptr});
  for (double v : r.checkpoint.model.params().values()) {
    EXPECT_EQ(static_cast<double>(static_cast<float>(v)), v);
  }
}

TEST(TrainVictim, TraceLinesAndSurgeryRecords) {
  const auto t = small_task(5);
  const auto r = ini::train::train_victim(small_config(TrainMode::kIni, 5), {&t.train, &t.ood, nullptr});
  ASSERT_EQ(r.trace.steps.size(), 3u * 4u);
  std::istringstream in(r.trace.to_jsonl());
  std::string line;
  std::size_t steps = 0, epochs = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    const std::string type = j.at("type");
    if (type == "step") {
      ++steps;
      for (const char* key : {"l_ben", "l_iso", "l_ig", "gradnorm", "l_ind", "total", "lr"}) {
        EXPECT_TRUE(j.contains(key)) << key;
      }
    } else {
      EXPECT_EQ(type, "epoch");
      ++epochs;
    }
  }
  EXPECT_EQ(steps, 12u);
  EXPECT_EQ(epochs, 3u);
  for (const auto& s : r.trace.steps) {
    EXPECT_TRUE(std::isfinite(s.total));
    EXPECT_GE(s.l_iso, -1.0 - 1e-9);
    EXPECT_LE(s.l_iso, 1.0 + 1e-9);
    EXPECT_FALSE(s.surgery_cosines.empty());
    for (const auto& p : s.projections) {
      EXPECT_LT(p.cos_before, 0.0);
      EXPECT_GE(p.cos_after, -1e-9);
    }
  }
}

TEST(TrainVictim, NoSurgeryRecordsWithoutSurgery) {
  const auto t = small_task(6);
  auto c = small_config(TrainMode::kIni, 6);
  c.surgery = false;
  const auto r = ini::train::train_victim(c, {&t.train, &t.ood, nullptr});
  for (const auto& s : r.trace.steps) EXPECT_TRUE(s.projections.empty());
}

TEST(TrainVictim, ThresholdFlagAndAbort) {
  const auto t = small_task(7);
  auto c = small_config(TrainMode::kVanilla, 7);
  c.epochs = 1;
  c.lr.initial = 1e-6;
  c.threshold = 1.0;
  const auto r = ini::train::train_victim(c, {&t.train, nullptr, nullptr});
  ASSERT_LT(r.checkpoint.metadata.benign_accuracy, 1.0);
  EXPECT_FALSE(r.checkpoint.metadata.threshold_met);
  c.threshold_action = ini::train::ThresholdAction::kAbort;
  try {
    ini::train::train_victim(c, {&t.train, nullptr, nullptr});
    FAIL() << "expected ThresholdViolationError";
  } catch (const ini::ThresholdViolationError& e) {
    EXPECT_DOUBLE_EQ(e.threshold(), 1.0);
    EXPECT_DOUBLE_EQ(e.benign_accuracy(), r.checkpoint.metadata.benign_accuracy);
  }
}

TEST(TrainVictim, DivergenceRaisesNonFiniteLoss) {
  const auto t = small_task(8);
  auto c = small_config(TrainMode::kVanilla, 8);
  c.lr.initial = 1e200;
  EXPECT_THROW(ini::train::train_victim(c, {&t.train, nullptr, nullptr}), ini::NonFiniteLossError);
}

TEST(TrainVictim, ZeroCoefficientsFollowVanillaTrajectory) {
  const auto t = small_task(10);
  auto c = small_config(TrainMode::kVanilla, 10);
  const auto vanilla = ini::train::train_victim(c, {&t.train, &t.ood, nullptr});
  c.mode = TrainMode::kIni;
  c.coefficients = {0.0, 0.0, 1.0};
  const auto ini_run = ini::train::train_victim(c, {&t.train, &t.ood, nullptr});
  EXPECT_EQ(values(vanilla.checkpoint.model), values(ini_run.checkpoint.model));
}

TEST(TrainVictim, SurgeryReducesConflictsOnReferenceTask) {
  const auto c = ini::harness::load_experiment_config(std::string(INI_SOURCE_DIR) + "/configs/reference.json");
  std::vector<double> pre_fractions, post_fractions;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto d = ini::harness::prepare_data(c, seed);
    ini::train::TrainConfig tc = c.train;
    tc.mode = TrainMode::kIni;
    tc.epochs = 3;
    tc.seed = seed;
    const auto r = ini::train::train_victim(tc, {&d.train, &d.ood, &d.test});
    std::size_t pre = 0, pre_negative = 0, post = 0, post_negative = 0;
    for (const auto& s : r.trace.steps) {
      for (const auto& cos : s.surgery_cosines) {
        if (!cos.value) continue;
        EXPECT_GE(*cos.value, -1.0 - 1e-12);
        EXPECT_LE(*cos.value, 1.0 + 1e-12);
        ++pre;
        pre_negative += *cos.value < 0.0;
      }
      for (const auto& p : s.projections) {
        EXPECT_GE(p.cos_after, -1e-6);
        ++post;
        post_negative += p.cos_after < 0.0;
      }
    }
    ASSERT_GT(pre, 0u);
    pre_fractions.push_back(static_cast<double>(pre_negative) / static_cast<double>(pre));
    post_fractions.push_back(post ? static_cast<double>(post_negative) / static_cast<double>(post) : 0.0);
  }
  std::sort(pre_fractions.begin(), pre_fractions.end());
  std::sort(post_fractions.begin(), post_fractions.end());
  EXPECT_GT(pre_fractions[2], post_fractions[2]);
}

TEST(Cotrain, RatioZeroMatchesIni) {
  const auto t = small_task(9);
  const auto c = small_config(TrainMode::kIni, 9);
  const auto ini_run = ini::train::train_victim(c, {&t.train, &t.ood, nullptr});
  const auto co = ini::train::adversarial_cotrain(c, {&t.train, &t.ood, nullptr}, {0, 0.05});
  EXPECT_EQ(values(ini_run.checkpoint.model), values(co.checkpoint.model));
  EXPECT_EQ(co.checkpoint.metadata.mode, "ini_cotrain");
}

TEST(Cotrain, CloneStepsReduceCloneLoss) {
  std::vector<double> medians;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto t = small_task(20 + seed);
    const auto r = ini::train::adversarial_cotrain(small_config(TrainMode::kIni, seed), {&t.train, &t.ood, nullptr},
                                                   {2, 0.05});
    ASSERT_TRUE(r.clone.has_value());
    std::vector<double> deltas;
    for (const auto& s : r.trace.steps) {
      ASSERT_EQ(s.clone_steps.size(), 2u);
      for (const auto& [before, after] : s.clone_steps) deltas.push_back(after - before);
    }
    std::nth_element(deltas.begin(), deltas.begin() + static_cast<std::ptrdiff_t>(deltas.size() / 2), deltas.end());
    medians.push_back(deltas[deltas.size() / 2]);
  }
  std::sort(medians.begin(), medians.end());
  EXPECT_LE(medians[2], 0.0);
}

}  // namespace
