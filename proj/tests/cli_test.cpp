#include <sstream>

#include <gtest/gtest.h>

#include "atrl/bench/evaluate.hpp"
#include "atrl/cli/checkpoint.hpp"

namespace atrl::cli {
namespace {

std::string message_of(const std::string& text) {
  try {
    parse_config_string(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, DefaultsAndOverrides) {
  const RunConfig d = parse_config_string("");
  EXPECT_EQ(d.scenario.humans, 3u);
  EXPECT_EQ(d.scenario.robots, 4u);
  EXPECT_EQ(d.ppo.clip, 0.2);
  EXPECT_EQ(d.ppo.w_policy, 2.0);
  EXPECT_EQ(d.ppo.w_value, 1.0);
  EXPECT_EQ(d.ppo.w_entropy, 0.1);
  EXPECT_EQ(d.ppo.lr, 2e-4);
  EXPECT_EQ(d.ppo.episodes, 10000u);

  const RunConfig c = parse_config_string(
      "[scenario]\nhumans = 2\nrobots = 3\nuavs = random\n[ppo]\nlr = 0.001\n"
      "reward_mode = sampled\n[model]\nablate = true\n[run]\nseed = 42\n");
  EXPECT_EQ(c.scenario.humans, 2u);
  EXPECT_FALSE(c.scenario.uavs.has_value());
  EXPECT_EQ(c.ppo.lr, 1e-3);
  EXPECT_EQ(c.ppo.reward_mode, sim::RewardMode::kSampled);
  EXPECT_TRUE(c.model.ablate);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.dims().humans, 2u);
  EXPECT_EQ(c.dims().robots, 3u);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_EQ(message_of("[ppo]\nlearning_rate = 1\n"), "config: unknown key 'ppo.learning_rate'");
  EXPECT_NE(message_of("[ppo]\nclip = -1\n"), "");
  EXPECT_NE(message_of("[ppo]\nreward_mode = maybe\n"), "");
  EXPECT_NE(message_of("[model]\nd = 30\nheads = 4\n"), "");
  EXPECT_NE(message_of("[scenario]\nrobots = 2\nuavs = 3\n"), "");
  EXPECT_NE(message_of("[run]\nseed = banana\n"), "");
  EXPECT_NE(message_of("humans = 3\n"), "");
}

TEST(Config, WriteThenParseRoundTrips) {
  const RunConfig c = parse_config_string(
      "[scenario]\nhumans = 2\nthreats = 7\nshift_offset_h = 2.5\n[ppo]\nlr = 0.00031\n"
      "repr_grad = value_only\n[run]\noutput_dir = results\n");
  std::ostringstream a;
  write_config(a, c);
  std::ostringstream b;
  write_config(b, parse_config_string(a.str()));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str().find("shift_offset_h = 2.5"), std::string::npos);
  EXPECT_NE(config_help().find("reward_mode"), std::string::npos);
}

RunConfig tiny_config() {
  return parse_config_string(
      "[scenario]\nhumans = 2\nrobots = 2\nthreats = 2\nnon_threats = 2\n"
      "[model]\nd = 8\nheads = 2\npolicy_hidden = 8\n"
      "[ppo]\nactors = 2\nrollout_per_actor = 4\nepisodes = 16\nminibatch = 4\nlr = 0.001\n");
}

Checkpoint trained_checkpoint() {
  Checkpoint c;
  c.config = tiny_config();
  c.state = ppo::train({c.config.scenario, c.config.sim()}, c.config.dims(), c.config.ppo, 3);
  return c;
}

std::string saved(const Checkpoint& c) {
  std::ostringstream os;
  save_checkpoint(os, c);
  return os.str();
}

Checkpoint loaded(const std::string& text) {
  std::istringstream is(text);
  return load_checkpoint(is);
}

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  const Checkpoint c = trained_checkpoint();
  const std::string first = saved(c);
  const Checkpoint back = loaded(first);
  EXPECT_EQ(saved(back), first);
  EXPECT_EQ(back.state.episodes_done, 16u);
  EXPECT_EQ(back.state.optim.step, c.state.optim.step);

  const auto scenarios = sample_scenarios(c.config.scenario, 5, 20);
  const auto a = bench::evaluate(bench::policy_method("x", c.state.params), scenarios, 1);
  const auto b = bench::evaluate(bench::policy_method("x", back.state.params), scenarios, 1);
  for (std::size_t s = 0; s < a.size(); ++s) EXPECT_NEAR(a[s], b[s], 1e-12);
}

TEST(Checkpoint, WithoutOptimizer) {
  Checkpoint c = trained_checkpoint();
  c.has_optimizer = false;
  const std::string text = saved(c);
  EXPECT_NE(text.find("optimizer none"), std::string::npos);
  const Checkpoint back = loaded(text);
  EXPECT_FALSE(back.has_optimizer);
  EXPECT_EQ(saved(back), text);
}

TEST(Checkpoint, ResumeFromLoadedStateMatchesContinuousTraining) {
  Checkpoint c = trained_checkpoint();
  Checkpoint back = loaded(saved(c));
  RunConfig longer = c.config;
  longer.ppo.episodes = 32;
  const ppo::Environment env{longer.scenario, longer.sim()};
  const auto direct = ppo::train(env, longer.dims(), longer.ppo, 3, std::move(c.state));
  const auto resumed = ppo::train(env, longer.dims(), longer.ppo, 3, std::move(back.state));
  for (std::size_t k = 0; k < direct.params.values.size(); ++k) {
    EXPECT_TRUE(std::ranges::equal(direct.params.values[k].data(),
                                   resumed.params.values[k].data()));
  }
}

void expect_format_error(const std::string& text, const std::string& field) {
  try {
    loaded(text);
    FAIL() << "expected FormatError for " << field;
  } catch (const FormatError& e) {
    EXPECT_EQ(e.field(), field) << e.what();
  }
}

TEST(Checkpoint, TamperedFilesAreRejected) {
  const std::string good = saved(trained_checkpoint());
  std::string v = good;
  v.replace(0, std::string(kCheckpointVersion).size(), "atrl-checkpoint v9");
  expect_format_error(v, "version");

  EXPECT_THROW(loaded(good.substr(0, good.size() / 2)), FormatError);

  std::string dims = good;
  dims.replace(dims.find("dims 8 "), 7, "dims 16 ");
  expect_format_error(dims, "dims");

  const std::string head = "param head.assign.w 8 8";
  ASSERT_NE(good.find(head), std::string::npos);
  std::string shape = good;
  shape.replace(shape.find(head), head.size(), "param head.assign.w 8 9");
  expect_format_error(shape, "head.assign.w");

  expect_format_error(good.substr(0, good.rfind("end")) + "fin\n", "end");
}

TEST(Checkpoint, DimensionMismatchWithScenario) {
  const RunConfig c = tiny_config();
  EXPECT_NO_THROW(require_dims_match(c.dims(), c.scenario));
  try {
    require_dims_match(c.dims(), ScenarioSpec::setting_a());
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_EQ(std::string(e.what()),
              "checkpoint built for i=2, j=2, n=4 but the scenario has i=3, j=4, n=40");
  }
}

}  // namespace
}  // namespace atrl::cli
