#ifndef ATRL_BENCH_BASELINES_HPP_
#define ATRL_BENCH_BASELINES_HPP_

#include <numeric>

#include "atrl/scenario/types.hpp"
#include "atrl/util/rng.hpp"

namespace atrl::bench {

// AV: robot r starts at centroid r; POIs are dealt round-robin to humans.
inline AllocationAction allocate_average(const ScenarioContext& ctx) {
  AllocationAction a;
  a.robot_to_centroid.resize(ctx.num_robots());
  std::iota(a.robot_to_centroid.begin(), a.robot_to_centroid.end(), std::size_t{0});
  a.poi_to_human.resize(ctx.num_tasks());
  for (std::size_t p = 0; p < ctx.num_tasks(); ++p) a.poi_to_human[p] = p % ctx.num_humans();
  return a;
}

// RA: uniform random centroid permutation and independent uniform human picks.
inline AllocationAction allocate_random(const ScenarioContext& ctx, Rng& rng) {
  AllocationAction a;
  a.robot_to_centroid.resize(ctx.num_robots());
  std::iota(a.robot_to_centroid.begin(), a.robot_to_centroid.end(), std::size_t{0});
  for (std::size_t k = a.robot_to_centroid.size(); k > 1; --k) {
    std::swap(a.robot_to_centroid[k - 1], a.robot_to_centroid[uniform_index(rng, k)]);
  }
  a.poi_to_human.resize(ctx.num_tasks());
  for (auto& h : a.poi_to_human) h = uniform_index(rng, ctx.num_humans());
  return a;
}

}  // namespace atrl::bench

#endif  // ATRL_BENCH_BASELINES_HPP_
