#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "atrl/bench/evaluate.hpp"

namespace atrl::bench {
namespace {

// Two-sided Student-t tail by Simpson integration of the density over [0, |t|].
double t_tail_by_quadrature(double t, double df) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) /
                   std::sqrt(df * std::numbers::pi);
  auto pdf = [&](double x) { return c * std::pow(1 + x * x / df, -(df + 1) / 2); };
  const int n = 20000;
  const double h = std::abs(t) / n;
  double s = pdf(0) + pdf(std::abs(t));
  for (int k = 1; k < n; ++k) s += (k % 2 ? 4 : 2) * pdf(k * h);
  return 1.0 - 2.0 * s * h / 3.0;
}

TEST(Stats, StudentTailMatchesQuadrature) {
  EXPECT_NEAR(student_t_two_sided_p(2.0, 60.0), t_tail_by_quadrature(2.0, 60.0), 1e-9);
  EXPECT_NEAR(student_t_two_sided_p(2.0, 60.0), 0.0501, 2e-4);
  EXPECT_NEAR(student_t_two_sided_p(-1.3, 4.5), t_tail_by_quadrature(1.3, 4.5), 1e-9);
  EXPECT_EQ(student_t_two_sided_p(0.0, 10.0), 1.0);
  // df = 1 is Cauchy: p = 1 - 2 atan(t) / pi
  EXPECT_NEAR(student_t_two_sided_p(1.0, 1.0), 0.5, 1e-12);
  EXPECT_THROW(student_t_two_sided_p(1.0, 0.0), std::domain_error);
}

TEST(Stats, WelchHandExample) {
  const std::vector<double> a{1, 2, 3, 4}, b{2, 4, 6, 8};
  const WelchResult r = welch_t_test(a, b);
  const double va = (5.0 / 3.0) / 4, vb = (20.0 / 3.0) / 4;
  EXPECT_NEAR(r.t, -2.5 / std::sqrt(va + vb), 1e-12);
  EXPECT_NEAR(r.df, (va + vb) * (va + vb) / (va * va / 3 + vb * vb / 3), 1e-12);
  EXPECT_NEAR(r.p, t_tail_by_quadrature(r.t, r.df), 1e-9);
  const WelchResult s = welch_t_test(b, a);
  EXPECT_NEAR(s.t, -r.t, 1e-15);
  EXPECT_NEAR(s.p, r.p, 1e-15);
}

TEST(Stats, WelchRejectsDegenerateSamples) {
  const std::vector<double> flat{2, 2, 2}, other{3, 3};
  EXPECT_THROW(welch_t_test(flat, other), std::domain_error);
  const std::vector<double> one{1};
  EXPECT_THROW(welch_t_test(one, flat), std::invalid_argument);
}

TEST(Stats, Summary) {
  const std::vector<double> xs{2, 4, 4, 4, 5, 5, 7, 9};
  const SampleSummary s = summarize(xs);
  EXPECT_DOUBLE_EQ(s.mean, 5.0);
  EXPECT_NEAR(s.stddev, std::sqrt(32.0 / 7.0), 1e-12);
  EXPECT_EQ(s.n, 8u);
}

TEST(Baselines, AverageIsRoundRobin) {
  const auto ctx = sample_scenario(ScenarioSpec::make(3, 3, 4, 3), 1);
  const auto a = allocate_average(ctx);
  EXPECT_EQ(a.robot_to_centroid, (std::vector<std::size_t>{0, 1, 2}));
  for (std::size_t p = 0; p < 7; ++p) EXPECT_EQ(a.poi_to_human[p], p % 3);
}

TEST(Baselines, RandomIsValidAndCoversEveryChoice) {
  const auto ctx = sample_scenario(ScenarioSpec::make(3, 3, 4, 3), 1);
  Rng rng(2);
  std::set<std::vector<std::size_t>> perms;
  std::set<std::size_t> humans;
  for (int k = 0; k < 300; ++k) {
    const auto a = allocate_random(ctx, rng);
    EXPECT_NO_THROW(validate_action(ctx, a));
    perms.insert(a.robot_to_centroid);
    humans.insert(a.poi_to_human[0]);
  }
  EXPECT_EQ(perms.size(), 6u);
  EXPECT_EQ(humans.size(), 3u);
}

TEST(Oracle, DominatesEveryAction) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto ctx = sample_scenario(ScenarioSpec::make(2, 2, 2, 2), seed);
    const OracleResult o = brute_force_best(ctx);
    EXPECT_EQ(o.evaluated, 2u * 16u);
    EXPECT_DOUBLE_EQ(sim::simulate(ctx, o.best_action).score, o.best_score);
    EXPECT_GE(o.best_score, sim::simulate(ctx, allocate_average(ctx)).score);
    Rng rng(seed);
    for (int k = 0; k < 50; ++k) {
      EXPECT_GE(o.best_score, sim::simulate(ctx, allocate_random(ctx, rng)).score);
    }
  }
}

TEST(Oracle, TiesKeepFirstAction) {
  const auto ctx = sample_scenario(ScenarioSpec::make(2, 2, 2, 2), 1);
  sim::SimOptions o;
  o.forced_pr = 1.0;
  const OracleResult r = brute_force_best(ctx, o);
  EXPECT_EQ(r.best_action.robot_to_centroid, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(r.best_action.poi_to_human, (std::vector<std::size_t>(4, 0)));
}

TEST(Oracle, RefusesLargeSpaces) {
  const auto ctx = sample_scenario(ScenarioSpec::setting_a(), 1);
  try {
    brute_force_best(ctx);
    FAIL() << "expected refusal";
  } catch (const SearchSpaceTooLarge& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("oracle refused"), std::string::npos);
    EXPECT_NE(msg.find("4! * 3^40"), std::string::npos) << msg;
  }
  EXPECT_NO_THROW(brute_force_best(sample_scenario(ScenarioSpec::make(2, 2, 3, 3), 1)));
}

TEST(Evaluate, ForcedProbabilityMakesMethodsIdentical) {
  const auto scenarios = sample_scenarios(ScenarioSpec::make(2, 2, 3, 2), 3, 20);
  EvalOptions opts;
  opts.sim.forced_pr = 1.0;
  const auto r = evaluate_all({average_method(), random_method(), oracle_method(opts.sim)},
                              scenarios, 4, opts);
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    EXPECT_EQ(r.scores[0][s], r.scores[1][s]);
    EXPECT_EQ(r.scores[0][s], r.scores[2][s]);
  }
  for (const auto& t : r.tests) {
    EXPECT_EQ(t.result.t, 0.0);
    EXPECT_NEAR(t.result.p, 1.0, 1e-12);
  }
}

TEST(Evaluate, ThreadsDoNotChangeScores) {
  const auto scenarios = sample_scenarios(ScenarioSpec::make(2, 3, 4, 4), 8, 30);
  EvalOptions one, many;
  many.threads = 4;
  for (auto mode : {sim::RewardMode::kExpected, sim::RewardMode::kSampled}) {
    one.sim.mode = many.sim.mode = mode;
    one.episodes_per_scenario = many.episodes_per_scenario = 3;
    EXPECT_EQ(evaluate(random_method(), scenarios, 2, one),
              evaluate(random_method(), scenarios, 2, many));
  }
}

TEST(Evaluate, CsvShapes) {
  const auto scenarios = sample_scenarios(ScenarioSpec::make(2, 2, 2, 2), 1, 5);
  const auto r = evaluate_all({average_method(), random_method()}, scenarios, 1);
  std::ostringstream scores, summary, tests;
  write_scores_csv(scores, r);
  write_summary_csv(summary, r);
  write_tests_csv(tests, r);
  auto lines = [](const std::string& s) {
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
  };
  EXPECT_EQ(scores.str().rfind("method,scenario_id,score\n", 0), 0u);
  EXPECT_EQ(lines(scores.str()), 1u + 2 * 5);
  EXPECT_EQ(summary.str().rfind("method,mean,std,n\n", 0), 0u);
  EXPECT_EQ(lines(summary.str()), 3u);
  EXPECT_EQ(tests.str().rfind("method_a,method_b,t,p\n", 0), 0u);
  EXPECT_EQ(lines(tests.str()), 2u);
  EXPECT_EQ(r.test("av", "ra").a, "av");
  EXPECT_THROW(r.summary("oracle"), std::out_of_range);
}

}  // namespace
}  // namespace atrl::bench
