#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "atrl/bench/baselines.hpp"
#include "atrl/scenario/scenario.hpp"
#include "atrl/sim/human_model.hpp"
#include "atrl/sim/simulator.hpp"

namespace atrl::sim {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(HumanModel, BaseDifficultyTimeTable) {
  EXPECT_EQ(base_difficulty_time(ImageQuality::kLow, Difficulty::kEasy), 20.0);
  EXPECT_EQ(base_difficulty_time(ImageQuality::kLow, Difficulty::kMedium), 60.0);
  EXPECT_EQ(base_difficulty_time(ImageQuality::kLow, Difficulty::kHard), 180.0);
  EXPECT_EQ(base_difficulty_time(ImageQuality::kHigh, Difficulty::kEasy), 10.0);
  EXPECT_EQ(base_difficulty_time(ImageQuality::kHigh, Difficulty::kMedium), 30.0);
  EXPECT_EQ(base_difficulty_time(ImageQuality::kHigh, Difficulty::kHard), 90.0);
  for (Difficulty d : {Difficulty::kEasy, Difficulty::kMedium, Difficulty::kHard}) {
    EXPECT_EQ(2 * base_difficulty_time(ImageQuality::kHigh, d),
              base_difficulty_time(ImageQuality::kLow, d));
  }
}

TEST(HumanModel, Fatigue) {
  EXPECT_EQ(fatigue_factor(0.0), 1.0);
  EXPECT_EQ(fatigue_factor(0.5), 1.0);
  EXPECT_NEAR(fatigue_factor(1.0), 1.0, 1e-12);
  EXPECT_NEAR(fatigue_factor(4.0), 0.64, 1e-12);
  EXPECT_NEAR(fatigue_factor(8.0), 0.16, 1e-12);
  EXPECT_NEAR(fatigue_factor(12.0), 0.16, 1e-12);
  EXPECT_THROW(fatigue_factor(-0.1), DomainError);
}

TEST(HumanModel, Workload) {
  EXPECT_NEAR(workload_factor(0.0), 0.5, 1e-12);
  EXPECT_EQ(workload_factor(0.5), 1.0);
  EXPECT_EQ(workload_factor(0.45), 1.0);
  EXPECT_NEAR(workload_factor(1.0), 0.506, 1e-12);
  EXPECT_NEAR(workload_factor(0.2), -2.47 * 0.04 + 2.22 * 0.2 + 0.5, 1e-12);
  EXPECT_THROW(workload_factor(-0.01), DomainError);
  EXPECT_THROW(workload_factor(1.01), DomainError);
}

TEST(HumanModel, Difficulty) {
  EXPECT_NEAR(difficulty_factor(150.0), 0.5, 1e-15);
  EXPECT_NEAR(difficulty_factor(180.0), 1.0 / (1.0 + std::exp(1.5)), 1e-15);
  EXPECT_NEAR(difficulty_factor(180.0), 0.1824, 1e-4);
  EXPECT_NEAR(difficulty_factor(90.0), 0.9526, 1e-4);
  EXPECT_THROW(difficulty_factor(0.0), DomainError);
}

TEST(HumanModel, ClassificationProbability) {
  // upper limit: sin(pi/4)^2 = 1/2
  EXPECT_NEAR(classification_prob(kPi / 4, kPi / 4, 1, 1, 1), 1.0, 1e-15);
  EXPECT_NEAR(classification_prob(1e-9, kPi / 4, 1, 1, 1), 0.5, 1e-9);
  EXPECT_GT(classification_prob(1e-9, kPi / 4, 1, 1, 1), 0.5);
  // chain: 0.5 + (1/2)(1/2) * 0.64 * 0.8452 * F_s(60)
  const double fs60 = difficulty_factor(60.0);
  EXPECT_NEAR(fs60, 0.98901, 1e-5);
  const double pr = classification_prob(kPi / 6, kPi / 6, fatigue_factor(4.0), 0.8452, fs60);
  EXPECT_NEAR(pr, 0.5 + 0.25 * 0.64 * 0.8452 * (1.0 / (1.0 + std::exp(-4.5))), 1e-12);
  EXPECT_NEAR(pr, 0.6337, 1e-4);
}

TEST(HumanModel, MonotonicityProperty) {
  Rng rng(3);
  for (int k = 0; k < 1000; ++k) {
    const double hc = kPi / 4 * uniform01(rng), hs = kPi / 4 * uniform01(rng);
    const double ff = fatigue_factor(8 * uniform01(rng)), fw = workload_factor(uniform01(rng));
    const double t1 = 1 + 200 * uniform01(rng), t2 = t1 + 50 * uniform01(rng);
    const double p1 = classification_prob(hc, hs, ff, fw, difficulty_factor(t1));
    EXPECT_GE(p1, classification_prob(hc, hs, ff, fw, difficulty_factor(t2)));
    EXPECT_LE(p1, classification_prob(std::min(hc * 1.1, kPi / 4), hs, ff, fw, difficulty_factor(t1)));
    EXPECT_LE(p1, classification_prob(hc, std::min(hs * 1.1, kPi / 4), ff, fw, difficulty_factor(t1)));
    EXPECT_GE(p1, 0.5);
    EXPECT_LE(p1, 1.0);
  }
}

Poi poi_at(double x, double y, Difficulty d = Difficulty::kEasy) { return {{x, y}, true, d}; }

TEST(PlanRoute, SinglePoiArrivalAndPublish) {
  const std::vector<Poi> pois{poi_at(400, 0)};
  const std::vector<std::size_t> cluster{0};
  const auto ugv = plan_route(RobotProfile(RobotKind::kUgv), 0, cluster, pois);
  EXPECT_DOUBLE_EQ(ugv.arrivals[0], 50.0);
  EXPECT_DOUBLE_EQ(ugv.publishes[0], 53.0);
  const auto uav = plan_route(RobotProfile(RobotKind::kUav), 0, cluster, pois);
  EXPECT_DOUBLE_EQ(uav.publishes[0], 23.0);
  EXPECT_DOUBLE_EQ(uav.return_time, 23.0 + 20.0);
}

TEST(PlanRoute, CollinearVisitOrder) {
  const std::vector<Poi> pois{poi_at(300, 0), poi_at(100, 0), poi_at(200, 0)};
  const std::vector<std::size_t> cluster{0, 1, 2};
  for (RobotKind k : {RobotKind::kUav, RobotKind::kUgv}) {
    const auto s = plan_route(RobotProfile(k), 1, cluster, pois);
    EXPECT_EQ(s.visits, (std::vector<std::size_t>{1, 2, 0}));
    const double v = RobotProfile(k).speed();
    EXPECT_DOUBLE_EQ(s.arrivals[1], s.publishes[0] + 100 / v);
  }
}

TEST(PlanRoute, EmptyClusterAndForeignCentroid) {
  const std::vector<Poi> pois{poi_at(1, 1)};
  EXPECT_TRUE(plan_route(RobotProfile(RobotKind::kUav), 0, {}, pois).visits.empty());
  const std::vector<std::size_t> cluster{0};
  EXPECT_THROW(plan_route(RobotProfile(RobotKind::kUav), 3, cluster, pois), std::invalid_argument);
}

TEST(Utilization, Windows) {
  EXPECT_EQ(utilization({}, 100.0), 0.0);
  EXPECT_EQ(utilization({}, 0.0), 0.0);
  const std::vector<BusyInterval> all{{0, 1000}};
  EXPECT_DOUBLE_EQ(utilization(all, 600.0), 1.0);
  const std::vector<BusyInterval> half{{300, 450}};
  EXPECT_DOUBLE_EQ(utilization(half, 600.0), 0.5);
  // window shorter than five minutes early in the mission
  const std::vector<BusyInterval> early{{10, 30}};
  EXPECT_DOUBLE_EQ(utilization(early, 40.0), 0.5);
}

ScenarioContext single_poi_context(double hc, double hs) {
  ScenarioContext ctx;
  ctx.humans.push_back({hc, hs, *level_of(hc), *level_of(hs)});
  ctx.robots.emplace_back(RobotKind::kUgv);
  ctx.pois.push_back(poi_at(400, 0));
  ctx.clusters = {{0}};
  ctx.centroid_pois = {0};
  return ctx;
}

TEST(Simulate, SinglePoiChain) {
  const double top = std::nextafter(kPi / 4, 0.0);
  const auto ctx = single_poi_context(top, top);
  const auto out = simulate(ctx, {{0}, {0}});
  const ServedEvent& e = out.events[0];
  EXPECT_DOUBLE_EQ(e.publish_s, 53.0);
  EXPECT_DOUBLE_EQ(e.start_s, 53.0);
  EXPECT_DOUBLE_EQ(e.end_s, 63.0);
  EXPECT_NEAR(e.t_hat_h, 53.0 / 3600.0, 1e-15);
  EXPECT_NEAR(e.t_hat_h, 0.0147, 1e-4);
  EXPECT_EQ(e.f_fatigue, 1.0);
  EXPECT_EQ(e.utilization, 0.0);
  EXPECT_NEAR(e.f_workload, 0.5, 1e-15);
  EXPECT_NEAR(e.f_difficulty, 1.0 / (1.0 + std::exp(-7.0)), 1e-15);
  EXPECT_NEAR(e.f_difficulty, 0.999088, 1e-6);
  const double s = std::sin(top);
  EXPECT_NEAR(e.pr_c, 0.5 + s * s * 0.5 * e.f_difficulty, 1e-15);
  EXPECT_NEAR(e.pr_c, 0.7498, 1e-4);
  EXPECT_NEAR(out.score, (2 * e.pr_c - 1) * 10.0, 1e-12);
}

TEST(Simulate, ShiftOffsetEntersFatigue) {
  const auto ctx = single_poi_context(0.5, 0.5);
  SimOptions o;
  o.shift_offset_h = 4.0;
  const auto out = simulate(ctx, {{0}, {0}}, o);
  EXPECT_NEAR(out.events[0].f_fatigue, -0.12 * (4.0 + 53.0 / 3600.0) + 1.12, 1e-12);
}

TEST(Simulate, PerfectClassifierScoresMeanPoints) {
  ScenarioContext ctx;
  ctx.humans.push_back({0.3, 0.3, Level::kLow, Level::kLow});
  ctx.robots.emplace_back(RobotKind::kUav);
  ctx.pois = {poi_at(10, 10, Difficulty::kEasy), poi_at(20, 10, Difficulty::kMedium),
              poi_at(30, 10, Difficulty::kHard)};
  ctx.clusters = {{0, 1, 2}};
  ctx.centroid_pois = {1};
  SimOptions o;
  o.forced_pr = 1.0;
  EXPECT_DOUBLE_EQ(simulate(ctx, {{0}, {0, 0, 0}}, o).score, 20.0);
}

TEST(Simulate, InvalidActionPropagates) {
  const auto ctx = sample_scenario(ScenarioSpec::make(2, 2, 2, 2), 1);
  EXPECT_THROW(simulate(ctx, {{0, 0}, {0, 0, 0, 0}}), std::invalid_argument);
}

// Conservation checks shared with the acceptance run.
void expect_conservation(const ScenarioContext& ctx, const AllocationAction& a,
                         const EpisodeOutcome& out) {
  std::vector<int> visits(ctx.num_tasks(), 0);
  for (std::size_t r = 0; r < out.routes.size(); ++r) {
    const auto& route = out.routes[r];
    const std::size_t c = a.robot_to_centroid[r];
    ASSERT_EQ(route.visits.size(), ctx.clusters[c].size());
    EXPECT_EQ(route.visits.front(), ctx.centroid_pois[c]);
    for (std::size_t p : route.visits) ++visits[p];
  }
  for (int v : visits) EXPECT_EQ(v, 1);
  std::vector<int> served(ctx.num_tasks(), 0);
  for (std::size_t h = 0; h < out.services.size(); ++h) {
    double last_end = 0.0;
    for (std::size_t p : out.services[h]) {
      ++served[p];
      const ServedEvent& e = out.events[p];
      EXPECT_EQ(e.human, h);
      EXPECT_EQ(a.poi_to_human[p], h);
      EXPECT_GE(e.start_s, e.publish_s);
      EXPECT_GE(e.start_s, last_end);
      last_end = e.end_s;
      EXPECT_GT(e.pr_c, 0.5);
      EXPECT_LE(e.pr_c, 1.0);
    }
  }
  for (int s : served) EXPECT_EQ(s, 1);
  EXPECT_GE(out.score, -30.0);
  EXPECT_LE(out.score, 30.0);
}

TEST(Simulate, ConservationProperty) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const ScenarioSpec spec = ScenarioSpec::make(1 + seed % 3, 1 + seed % 4, 2 + seed % 5, 3);
    const auto ctx = sample_scenario(spec, seed);
    Rng rng(seed);
    const AllocationAction a = bench::allocate_random(ctx, rng);
    const auto out = simulate(ctx, a);
    expect_conservation(ctx, a, out);
    const auto again = simulate(ctx, a);
    EXPECT_EQ(out.score, again.score);
  }
}

TEST(Simulate, SampledRewardsArePlusMinusPoints) {
  const auto ctx = sample_scenario(ScenarioSpec::make(2, 2, 4, 4), 3);
  SimOptions o;
  o.mode = RewardMode::kSampled;
  Rng rng(1);
  const auto out = simulate(ctx, bench::allocate_average(ctx), o, rng);
  for (const auto& e : out.events) EXPECT_EQ(std::abs(e.reward), e.points);
  EXPECT_THROW(simulate(ctx, bench::allocate_average(ctx), o), std::invalid_argument);
}

TEST(Simulate, MonteCarloMatchesExpectedSmall) {
  const auto ctx = sample_scenario(ScenarioSpec::make(2, 2, 3, 3), 11);
  const AllocationAction a = bench::allocate_average(ctx);
  const double expected = simulate(ctx, a).score;
  SimOptions o;
  o.mode = RewardMode::kSampled;
  Rng rng(5);
  const int n = 20000;
  double sum = 0.0, sq = 0.0;
  for (int k = 0; k < n; ++k) {
    const double s = simulate(ctx, a, o, rng).score;
    sum += s;
    sq += s * s;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / (n - 1));
  EXPECT_LT(std::abs(mean - expected), 3 * se);
}

TEST(Simulate, TraceCsvColumns) {
  const auto ctx = sample_scenario(ScenarioSpec::make(2, 2, 2, 2), 4);
  std::ostringstream os;
  write_trace_csv(os, simulate(ctx, bench::allocate_average(ctx)));
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header,
            "poi_id,robot_id,human_id,publish_s,service_start_s,service_end_s,t_hat_h,u,F_f,F_w,"
            "F_s,Pr_c,points,reward");
  int rows = 0;
  for (std::string line; std::getline(is, line);) ++rows;
  EXPECT_EQ(rows, 4);
}

}  // namespace
}  // namespace atrl::sim
