#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "atrl/ppo/ppo.hpp"

namespace atrl::ppo {
namespace {

using grad::Tensor;

model::ModelDims small_dims(const ScenarioSpec& spec) {
  model::ModelDims d;
  d.d = 8;
  d.heads = 2;
  d.policy_hidden = 8;
  return model::dims_for(spec, d);
}

Environment small_env() { return {ScenarioSpec::make(2, 2, 3, 3), {}}; }

PpoConfig small_config() {
  PpoConfig c;
  c.actors = 4;
  c.rollout_per_actor = 4;
  c.episodes = 64;
  c.minibatch = 8;
  c.curve_window = 16;
  c.lr = 1e-3;
  return c;
}

bool same_params(const model::ModelParams& a, const model::ModelParams& b) {
  for (std::size_t k = 0; k < a.values.size(); ++k)
    if (!std::ranges::equal(a.values[k].data(), b.values[k].data())) return false;
  return true;
}

TEST(Advantages, ZeroValueAndNoNormalization) {
  RolloutBatch b;
  for (double r : {3.0, -1.0, 7.5}) b.items.push_back({.reward = r, .value = 0.0});
  compute_advantages(b, false);
  EXPECT_EQ(b.items[0].advantage, 3.0);
  EXPECT_EQ(b.items[1].advantage, -1.0);
  EXPECT_EQ(b.items[2].advantage, 7.5);
}

TEST(Advantages, Standardized) {
  RolloutBatch b;
  for (double r : {1.0, 2.0, 3.0}) b.items.push_back({.reward = r, .value = 0.0});
  compute_advantages(b);
  // population sd of {1,2,3} is sqrt(2/3)
  EXPECT_NEAR(b.items[0].advantage, -std::sqrt(1.5), 1e-12);
  EXPECT_NEAR(b.items[1].advantage, 0.0, 1e-12);
  EXPECT_NEAR(b.items[2].advantage, std::sqrt(1.5), 1e-12);
}

TEST(Advantages, ConstantResidualGivesZero) {
  RolloutBatch b;
  for (double r : {4.0, 6.0}) b.items.push_back({.reward = r, .value = r - 1.0});
  compute_advantages(b);
  for (const auto& t : b.items) EXPECT_EQ(t.advantage, 0.0);
  RolloutBatch empty;
  EXPECT_THROW(compute_advantages(empty), std::invalid_argument);
}

TEST(Rollouts, IndependentOfWorkerCount) {
  const Environment env = small_env();
  const auto params = model::init_params(small_dims(env.scenario), 1);
  PpoConfig one = small_config(), many = small_config();
  one.actors = 1;
  many.actors = 5;
  const auto a = collect_rollouts(env, params, one, 9, 10, 12);
  const auto b = collect_rollouts(env, params, many, 9, 10, 12);
  ASSERT_EQ(a.size(), 12u);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a.items[k].episode, 10 + k);
    EXPECT_EQ(a.items[k].reward, b.items[k].reward);
    EXPECT_EQ(a.items[k].log_prob, b.items[k].log_prob);
    EXPECT_EQ(a.items[k].action.poi_to_human, b.items[k].action.poi_to_human);
    EXPECT_LE(a.items[k].log_prob, 0.0);
    EXPECT_GE(a.items[k].reward, -30.0);
    EXPECT_LE(a.items[k].reward, 30.0);
  }
}

TEST(Loss, FirstEpochRatiosAreOne) {
  const Environment env = small_env();
  const auto params = model::init_params(small_dims(env.scenario), 3);
  PpoConfig cfg = small_config();
  for (auto mode : {sim::RewardMode::kExpected, sim::RewardMode::kSampled}) {
    cfg.reward_mode = mode;
    RolloutBatch b = collect_rollouts(env, params, cfg, 4, 0, 16);
    compute_advantages(b);
    const LossBreakdown lb = ppo_loss(b, params, cfg);
    ASSERT_EQ(lb.ratios.size(), 16u);
    for (double r : lb.ratios) EXPECT_NEAR(r, 1.0, 1e-9);
  }
}

TEST(Loss, HandComputedTerms) {
  const Environment env = small_env();
  const auto params = model::init_params(small_dims(env.scenario), 3);
  PpoConfig cfg = small_config();
  RolloutBatch b = collect_rollouts(env, params, cfg, 4, 0, 6);
  compute_advantages(b);
  const LossBreakdown lb = ppo_loss(b, params, cfg);
  // at ratio 1 the clipped surrogate is the mean advantage, which is zero
  double adv = 0.0, vl = 0.0;
  for (const auto& t : b.items) {
    adv += t.advantage / 6.0;
    vl += (t.value - t.reward) * (t.value - t.reward) / 6.0;
  }
  EXPECT_NEAR(lb.surrogate, adv, 1e-9);
  EXPECT_NEAR(lb.value_loss, vl, 1e-9);
  EXPECT_NEAR(lb.total, -(cfg.w_policy * adv - cfg.w_value * vl + cfg.w_entropy * lb.entropy),
              1e-9);
}

TEST(Loss, DecreasesOnFixedBatch) {
  const Environment env = small_env();
  PpoConfig cfg = small_config();
  TrainState st = initial_state(small_dims(env.scenario), cfg, 5);
  RolloutBatch b = collect_rollouts(env, st.params, cfg, 5, 0, 16);
  compute_advantages(b);
  std::vector<Tensor> grads;
  double prev = ppo_loss(b, st.params, cfg, &grads).total;
  int decreased = 0;
  for (int step = 0; step < 50; ++step) {
    grad::adam_step(st.params.values, grads, st.optim);
    const double now = ppo_loss(b, st.params, cfg, &grads).total;
    if (now < prev) ++decreased;
    prev = now;
  }
  EXPECT_GE(decreased, 45);
}

TEST(Train, IdenticalSeedsGiveIdenticalCurves) {
  const Environment env = small_env();
  const PpoConfig cfg = small_config();
  const auto a = train(env, small_dims(env.scenario), cfg, 11);
  const auto b = train(env, small_dims(env.scenario), cfg, 11);
  ASSERT_EQ(a.curve.size(), 4u);
  for (std::size_t k = 0; k < a.curve.size(); ++k) {
    EXPECT_EQ(a.curve[k].episode, b.curve[k].episode);
    EXPECT_EQ(a.curve[k].mean_return, b.curve[k].mean_return);
  }
  EXPECT_TRUE(same_params(a.params, b.params));
  const auto c = train(env, small_dims(env.scenario), cfg, 12);
  EXPECT_FALSE(same_params(a.params, c.params));
}

TEST(Train, ResumeMatchesUninterruptedRun) {
  const Environment env = small_env();
  PpoConfig cfg = small_config();
  const auto full = train(env, small_dims(env.scenario), cfg, 6);
  PpoConfig half = cfg;
  half.episodes = 32;
  auto partial = train(env, small_dims(env.scenario), half, 6);
  EXPECT_EQ(partial.episodes_done, 32u);
  const auto resumed = train(env, small_dims(env.scenario), cfg, 6, std::move(partial));
  EXPECT_EQ(resumed.episodes_done, 64u);
  EXPECT_TRUE(same_params(full.params, resumed.params));
  ASSERT_EQ(resumed.curve.size(), full.curve.size());
  for (std::size_t k = 0; k < full.curve.size(); ++k)
    EXPECT_EQ(resumed.curve[k].mean_return, full.curve[k].mean_return);
}

TEST(Train, CheckpointHookFiresOnSchedule) {
  const Environment env = small_env();
  PpoConfig cfg = small_config();
  cfg.checkpoint_every = 20;
  std::vector<std::size_t> at;
  TrainHooks hooks;
  hooks.on_checkpoint = [&](const TrainState& s) { at.push_back(s.episodes_done); };
  train(env, small_dims(env.scenario), cfg, 1, std::nullopt, hooks);
  EXPECT_EQ(at, (std::vector<std::size_t>{32, 48, 64}));
}

TEST(Train, NonFiniteLossIsReported) {
  const Environment env = small_env();
  const PpoConfig cfg = small_config();
  TrainState st = initial_state(small_dims(env.scenario), cfg, 1);
  st.params.values[st.params.layout.value_b](0, 0) = std::nan("");
  try {
    train(env, small_dims(env.scenario), cfg, 1, std::move(st));
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("non-finite PPO loss"), std::string::npos);
  }
}

TEST(Config, Validation) {
  PpoConfig c;
  EXPECT_NO_THROW(c.validate());
  c.clip = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.w_entropy = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.minibatch = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace atrl::ppo
