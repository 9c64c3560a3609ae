#ifndef ATRL_BENCH_ORACLE_HPP_
#define ATRL_BENCH_ORACLE_HPP_

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <string>

#include "atrl/scenario/scenario.hpp"
#include "atrl/sim/simulator.hpp"

namespace atrl::bench {

inline constexpr long double kOracleLimit = 1e6L;

class SearchSpaceTooLarge : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct OracleResult {
  double best_score = 0.0;
  AllocationAction best_action;
  std::size_t evaluated = 0;
};

inline std::string describe_size(long double size) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6Lg", size);
  return buf;
}

// Exhaustive search over all j! * i^n allocations in lexicographic order,
// scored in expected mode. Ties keep the lexicographically first action.
inline OracleResult brute_force_best(const ScenarioContext& ctx,
                                     const sim::SimOptions& opts = {}) {
  const ActionSpace space = action_space(ctx);
  const long double size = space.size();
  if (size > kOracleLimit) {
    throw SearchSpaceTooLarge("oracle refused: action space has " + describe_size(size) +
                              " joint actions (" + std::to_string(space.centroid_slots) + "! * " +
                              std::to_string(space.assign_width) + "^" +
                              std::to_string(space.assign_slots) + "), limit is 1e6");
  }
  sim::SimOptions expected = opts;
  expected.mode = sim::RewardMode::kExpected;

  OracleResult res;
  AllocationAction a;
  a.robot_to_centroid.resize(ctx.num_robots());
  std::iota(a.robot_to_centroid.begin(), a.robot_to_centroid.end(), std::size_t{0});
  const std::size_t n = ctx.num_tasks(), i = ctx.num_humans();
  do {
    a.poi_to_human.assign(n, 0);
    for (;;) {
      const double s = sim::simulate(ctx, a, expected).score;
      if (res.evaluated == 0 || s > res.best_score) {
        res.best_score = s;
        res.best_action = a;
      }
      ++res.evaluated;
      // odometer increment, last POI fastest
      std::size_t p = n;
      while (p > 0 && ++a.poi_to_human[p - 1] == i) a.poi_to_human[--p] = 0;
      if (p == 0) break;
    }
  } while (std::next_permutation(a.robot_to_centroid.begin(), a.robot_to_centroid.end()));
  return res;
}

}  // namespace atrl::bench

#endif  // ATRL_BENCH_ORACLE_HPP_
