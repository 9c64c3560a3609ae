#ifndef ATRL_SCENARIO_SCENARIO_HPP_
#define ATRL_SCENARIO_SCENARIO_HPP_

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "atrl/grad/tensor.hpp"
#include "atrl/scenario/kmeans.hpp"
#include "atrl/scenario/types.hpp"
#include "atrl/util/rng.hpp"

namespace atrl {

namespace detail {

inline double sample_in_level(Level level, Rng& rng) {
  switch (level) {
    case Level::kLow: return uniform_open(rng, 0.0, kLevelLowUpper);
    case Level::kMedium: {
      // closed interval [pi/12, pi/6]
      return kLevelLowUpper + (kLevelHighLower - kLevelLowUpper) * uniform01(rng);
    }
    case Level::kHigh: return uniform_open(rng, kLevelHighLower, kAbilityMax);
  }
  return 0.0;
}

inline Level sample_level(Rng& rng) { return static_cast<Level>(uniform_index(rng, 3)); }

}  // namespace detail

// Draws one random scenario. A pure function of (spec, seed).
inline ScenarioContext sample_scenario(const ScenarioSpec& spec, std::uint64_t seed) {
  const std::size_t n = spec.tasks();
  if (spec.humans == 0 || spec.robots == 0) {
    throw InfeasibleScenario("scenario needs at least one human and one robot");
  }
  if (n < spec.robots) {
    throw InfeasibleScenario("scenario has " + std::to_string(n) + " POIs for " +
                             std::to_string(spec.robots) + " robots; need at least one each");
  }
  if (spec.uavs && *spec.uavs > spec.robots) {
    throw InfeasibleScenario("uav count exceeds robot count");
  }
  Rng rng(seed);
  ScenarioContext ctx;
  ctx.seed = seed;

  for (std::size_t h = 0; h < spec.humans; ++h) {
    HumanProfile p;
    p.cognitive_level = detail::sample_level(rng);
    p.cognitive = detail::sample_in_level(p.cognitive_level, rng);
    p.skill_level = detail::sample_level(rng);
    p.skill = detail::sample_in_level(p.skill_level, rng);
    ctx.humans.push_back(p);
  }

  if (spec.uavs) {
    std::vector<RobotKind> kinds(spec.robots, RobotKind::kUgv);
    std::fill_n(kinds.begin(), *spec.uavs, RobotKind::kUav);
    // Fisher-Yates with our own index draw so the order is portable.
    for (std::size_t k = kinds.size(); k > 1; --k) {
      std::swap(kinds[k - 1], kinds[uniform_index(rng, k)]);
    }
    for (RobotKind k : kinds) ctx.robots.emplace_back(k);
  } else {
    for (std::size_t r = 0; r < spec.robots; ++r) {
      ctx.robots.emplace_back(uniform_index(rng, 2) == 0 ? RobotKind::kUav : RobotKind::kUgv);
    }
  }

  for (std::size_t p = 0; p < n; ++p) {
    Poi poi;
    poi.position = {kArenaSize * uniform01(rng), kArenaSize * uniform01(rng)};
    poi.is_threat = p < spec.threats;
    poi.difficulty = static_cast<Difficulty>(uniform_index(rng, 3));
    ctx.pois.push_back(poi);
  }

  std::vector<Point> pts;
  for (const Poi& p : ctx.pois) pts.push_back(p.position);
  KMeansResult km = kmeans_cluster(pts, spec.robots, rng);
  ctx.clusters = std::move(km.clusters);
  ctx.centroid_pois = std::move(km.centroid_points);
  return ctx;
}

// `count` scenarios, the k-th drawn from its own seed derived from `master`.
inline std::vector<ScenarioContext> sample_scenarios(const ScenarioSpec& spec,
                                                     std::uint64_t master, std::size_t count) {
  std::vector<ScenarioContext> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back(sample_scenario(spec, derive_seed(master, Stream::kScenario, k)));
  }
  return out;
}

// Raw attribute sequences fed to the network.
//   humans: [h_c / (pi/4), h_s / (pi/4)]
//   robots: [speed / 20, image quality (low 0, high 1)]
//   tasks:  [x / 2000, y / 2000, difficulty (0, 0.5, 1)]
// Whether a POI holds a threat is not encoded.
struct RawContext {
  static constexpr std::size_t kHumanFeatures = 2;
  static constexpr std::size_t kRobotFeatures = 2;
  static constexpr std::size_t kTaskFeatures = 3;

  grad::Tensor humans;
  grad::Tensor robots;
  grad::Tensor tasks;
};

inline RawContext encode_context(const ScenarioContext& ctx) {
  RawContext raw{grad::Tensor(ctx.num_humans(), RawContext::kHumanFeatures),
                 grad::Tensor(ctx.num_robots(), RawContext::kRobotFeatures),
                 grad::Tensor(ctx.num_tasks(), RawContext::kTaskFeatures)};
  for (std::size_t h = 0; h < ctx.num_humans(); ++h) {
    raw.humans(h, 0) = ctx.humans[h].cognitive / kAbilityMax;
    raw.humans(h, 1) = ctx.humans[h].skill / kAbilityMax;
  }
  for (std::size_t r = 0; r < ctx.num_robots(); ++r) {
    raw.robots(r, 0) = ctx.robots[r].speed() / 20.0;
    raw.robots(r, 1) = ctx.robots[r].image_quality() == ImageQuality::kHigh ? 1.0 : 0.0;
  }
  for (std::size_t p = 0; p < ctx.num_tasks(); ++p) {
    const Poi& poi = ctx.pois[p];
    raw.tasks(p, 0) = poi.position.x / kArenaSize;
    raw.tasks(p, 1) = poi.position.y / kArenaSize;
    raw.tasks(p, 2) = 0.5 * static_cast<double>(static_cast<int>(poi.difficulty));
  }
  return raw;
}

// Factorized action space: j centroid slots choosing among j centroids, and
// n assignment slots choosing among i humans.
struct ActionSpace {
  std::size_t centroid_slots = 0;
  std::size_t centroid_width = 0;
  std::size_t assign_slots = 0;
  std::size_t assign_width = 0;

  // Number of valid joint actions, j! * i^n (as a floating value; it
  // overflows integers quickly).
  long double size() const {
    long double s = 1.0L;
    for (std::size_t k = 2; k <= centroid_slots; ++k) s *= static_cast<long double>(k);
    for (std::size_t k = 0; k < assign_slots; ++k) s *= static_cast<long double>(assign_width);
    return s;
  }
};

inline ActionSpace action_space(std::size_t humans, std::size_t robots, std::size_t tasks) {
  return {robots, robots, tasks, humans};
}

inline ActionSpace action_space(const ScenarioContext& ctx) {
  return action_space(ctx.num_humans(), ctx.num_robots(), ctx.num_tasks());
}

// Returns the first violated invariant, or nullopt when the action is valid.
inline std::optional<std::string> validate_action(const ScenarioContext& ctx,
                                                  const AllocationAction& a) {
  const std::size_t i = ctx.num_humans(), j = ctx.num_robots(), n = ctx.num_tasks();
  if (a.robot_to_centroid.size() != j) {
    return "robot_to_centroid has " + std::to_string(a.robot_to_centroid.size()) +
           " entries for " + std::to_string(j) + " robots";
  }
  std::vector<bool> used(j, false);
  for (std::size_t r = 0; r < j; ++r) {
    const std::size_t c = a.robot_to_centroid[r];
    if (c >= j) {
      return "robot " + std::to_string(r) + " centroid index " + std::to_string(c) +
             " out of range";
    }
    if (used[c]) return "robot_to_centroid is not a bijection (centroid " + std::to_string(c) +
                        " repeated)";
    used[c] = true;
  }
  if (a.poi_to_human.size() != n) {
    return "poi_to_human has " + std::to_string(a.poi_to_human.size()) + " entries for " +
           std::to_string(n) + " POIs";
  }
  for (std::size_t p = 0; p < n; ++p) {
    if (a.poi_to_human[p] >= i) {
      return "POI " + std::to_string(p) + " human index " + std::to_string(a.poi_to_human[p]) +
             " out of range";
    }
  }
  return std::nullopt;
}

}  // namespace atrl

#endif  // ATRL_SCENARIO_SCENARIO_HPP_
