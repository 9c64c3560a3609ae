#ifndef ATRL_BENCH_EVALUATE_HPP_
#define ATRL_BENCH_EVALUATE_HPP_

#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "atrl/bench/baselines.hpp"
#include "atrl/bench/oracle.hpp"
#include "atrl/bench/stats.hpp"
#include "atrl/model/network.hpp"
#include "atrl/model/policy.hpp"
#include "atrl/sim/simulator.hpp"
#include "atrl/util/format.hpp"

namespace atrl::bench {

// An allocation method. `rng` is the method's own per-scenario stream.
struct Method {
  std::string name;
  std::function<AllocationAction(const ScenarioContext&, Rng&)> allocate;
};

inline Method average_method() {
  return {"av", [](const ScenarioContext& ctx, Rng&) { return allocate_average(ctx); }};
}

inline Method random_method() {
  return {"ra", [](const ScenarioContext& ctx, Rng& rng) { return allocate_random(ctx, rng); }};
}

// Greedy (per-slot argmax) action of a trained network.
inline AllocationAction greedy_policy_action(const model::ModelParams& params,
                                             const ScenarioContext& ctx) {
  const model::Evaluation ev = model::evaluate(params, encode_context(ctx));
  return model::greedy_action(ev.centroid_logits, ev.assign_logits).action;
}

// The parameters are captured by reference and must outlive the method.
inline Method policy_method(std::string name, const model::ModelParams& params) {
  return {std::move(name), [&params](const ScenarioContext& ctx, Rng&) {
            return greedy_policy_action(params, ctx);
          }};
}

inline Method oracle_method(sim::SimOptions opts = {}) {
  return {"oracle", [opts](const ScenarioContext& ctx, Rng&) {
            return brute_force_best(ctx, opts).best_action;
          }};
}

struct EvalOptions {
  sim::SimOptions sim;                 // mode kExpected scores exactly
  std::size_t episodes_per_scenario = 1;  // sampled mode only
  std::size_t threads = 1;
};

// Score of `method` on every scenario. Method and reward streams depend only
// on (seed, scenario index), so all methods see identical randomness.
inline std::vector<double> evaluate(const Method& method, std::span<const ScenarioContext> scenarios,
                                    std::uint64_t seed, const EvalOptions& opts = {}) {
  if (scenarios.empty()) throw std::invalid_argument("evaluate: no scenarios");
  std::vector<double> scores(scenarios.size());
  auto run = [&](std::size_t s) {
    Rng method_rng = make_rng(seed, Stream::kBaseline, s);
    const AllocationAction a = method.allocate(scenarios[s], method_rng);
    if (opts.sim.mode == sim::RewardMode::kExpected) {
      scores[s] = sim::simulate(scenarios[s], a, opts.sim).score;
      return;
    }
    const std::size_t reps = std::max<std::size_t>(1, opts.episodes_per_scenario);
    double total = 0.0;
    for (std::size_t e = 0; e < reps; ++e) {
      Rng reward_rng = make_rng(seed, Stream::kSampledReward, s * reps + e);
      total += sim::simulate(scenarios[s], a, opts.sim, reward_rng).score;
    }
    scores[s] = total / static_cast<double>(reps);
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(opts.threads, scenarios.size()));
  if (workers == 1) {
    for (std::size_t s = 0; s < scenarios.size(); ++s) run(s);
    return scores;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t s = w; s < scenarios.size(); s += workers) run(s);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return scores;
}

struct PairwiseTest {
  std::string a, b;
  WelchResult result;  // t and p are NaN when both samples are constant
};

struct EvalReport {
  std::vector<std::string> methods;
  std::vector<std::vector<double>> scores;  // [method][scenario]
  std::vector<SampleSummary> summaries;
  std::vector<PairwiseTest> tests;

  const SampleSummary& summary(const std::string& name) const {
    for (std::size_t k = 0; k < methods.size(); ++k)
      if (methods[k] == name) return summaries[k];
    throw std::out_of_range("no method named " + name);
  }
  const PairwiseTest& test(const std::string& a, const std::string& b) const {
    for (const auto& t : tests)
      if (t.a == a && t.b == b) return t;
    throw std::out_of_range("no test " + a + " vs " + b);
  }
};

// Paired evaluation of every method on the same scenarios plus Welch tests
// for every ordered pair (a listed before b).
inline EvalReport evaluate_all(const std::vector<Method>& methods,
                               std::span<const ScenarioContext> scenarios, std::uint64_t seed,
                               const EvalOptions& opts = {}) {
  EvalReport r;
  for (const Method& m : methods) {
    r.methods.push_back(m.name);
    r.scores.push_back(evaluate(m, scenarios, seed, opts));
    r.summaries.push_back(summarize(r.scores.back()));
  }
  for (std::size_t a = 0; a < methods.size(); ++a) {
    for (std::size_t b = a + 1; b < methods.size(); ++b) {
      PairwiseTest t{r.methods[a], r.methods[b], {}};
      try {
        t.result = welch_t_test(r.scores[a], r.scores[b]);
      } catch (const std::exception&) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        t.result = {nan, nan, nan};
      }
      r.tests.push_back(t);
    }
  }
  return r;
}

inline void write_scores_csv(std::ostream& os, const EvalReport& r) {
  os << "method,scenario_id,score\n";
  for (std::size_t m = 0; m < r.methods.size(); ++m)
    for (std::size_t s = 0; s < r.scores[m].size(); ++s)
      os << r.methods[m] << ',' << s << ',' << format_double(r.scores[m][s]) << '\n';
}

inline void write_summary_csv(std::ostream& os, const EvalReport& r) {
  os << "method,mean,std,n\n";
  for (std::size_t m = 0; m < r.methods.size(); ++m)
    os << r.methods[m] << ',' << format_double(r.summaries[m].mean) << ','
       << format_double(r.summaries[m].stddev) << ',' << r.summaries[m].n << '\n';
}

inline void write_tests_csv(std::ostream& os, const EvalReport& r) {
  os << "method_a,method_b,t,p\n";
  for (const auto& t : r.tests)
    os << t.a << ',' << t.b << ',' << format_double(t.result.t) << ','
       << format_double(t.result.p) << '\n';
}

}  // namespace atrl::bench

#endif  // ATRL_BENCH_EVALUATE_HPP_
