#ifndef ATRL_SIM_SIMULATOR_HPP_
#define ATRL_SIM_SIMULATOR_HPP_

#include <algorithm>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "atrl/scenario/scenario.hpp"
#include "atrl/sim/human_model.hpp"
#include "atrl/util/format.hpp"
#include "atrl/util/rng.hpp"

namespace atrl::sim {

inline constexpr double kDwellSeconds = 3.0;
inline constexpr double kUtilizationWindow = 300.0;  // trailing 5 minutes
inline constexpr Point kOrigin{0.0, 0.0};

enum class RewardMode { kExpected, kSampled };

struct SimOptions {
  RewardMode mode = RewardMode::kExpected;
  double shift_offset_h = 0.0;      // hours already worked when the mission starts
  std::optional<double> forced_pr;  // test hook: overrides every Pr_c
};

struct RouteSchedule {
  std::vector<std::size_t> visits;  // POI indices in visiting order
  std::vector<double> arrivals;     // seconds
  std::vector<double> publishes;    // arrival + dwell
  double return_time = 0.0;         // back at the origin
};

// Greedy nearest-unvisited tour of a cluster starting at its assigned
// centroid, departing from the origin. Distance ties go to the lower POI index.
inline RouteSchedule plan_route(const RobotProfile& robot, std::size_t centroid,
                                std::span<const std::size_t> cluster,
                                std::span<const Poi> pois) {
  RouteSchedule s;
  if (cluster.empty()) return s;
  if (std::find(cluster.begin(), cluster.end(), centroid) == cluster.end()) {
    throw std::invalid_argument("plan_route: centroid POI " + std::to_string(centroid) +
                                " is not in the cluster");
  }
  std::vector<std::size_t> remaining(cluster.begin(), cluster.end());
  std::sort(remaining.begin(), remaining.end());
  Point here = kOrigin;
  double clock = 0.0;
  std::size_t next = centroid;
  for (;;) {
    const Point there = pois[next].position;
    clock += distance(here, there) / robot.speed();
    s.visits.push_back(next);
    s.arrivals.push_back(clock);
    clock += kDwellSeconds;
    s.publishes.push_back(clock);
    here = there;
    remaining.erase(std::find(remaining.begin(), remaining.end(), next));
    if (remaining.empty()) break;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t p : remaining) {
      const double d = distance(here, pois[p].position);
      if (d < best) {
        best = d;
        next = p;
      }
    }
  }
  s.return_time = clock + distance(here, kOrigin) / robot.speed();
  return s;
}

struct BusyInterval {
  double start = 0.0;
  double end = 0.0;
};

// Busy fraction of the trailing window [max(0, t - 300), t]; 0 at t = 0.
inline double utilization(std::span<const BusyInterval> busy, double t) {
  if (t <= 0.0) return 0.0;
  const double lo = std::max(0.0, t - kUtilizationWindow);
  double acc = 0.0;
  for (const BusyInterval& b : busy) {
    const double s = std::max(b.start, lo);
    const double e = std::min(b.end, t);
    if (e > s) acc += e - s;
  }
  return std::clamp(acc / std::min(t, kUtilizationWindow), 0.0, 1.0);
}

struct ServedEvent {
  std::size_t poi = 0;
  std::size_t robot = 0;
  std::size_t human = 0;
  double publish_s = 0.0;
  double start_s = 0.0;
  double end_s = 0.0;
  double t_hat_h = 0.0;
  double utilization = 0.0;
  double f_fatigue = 0.0;
  double f_workload = 0.0;
  double f_difficulty = 0.0;
  double t_bar = 0.0;
  double pr_c = 0.0;
  double points = 0.0;
  double expected_reward = 0.0;  // (2 Pr_c - 1) * points
  double reward = 0.0;           // expected_reward, or +/- points when sampled
  bool correct = true;           // sampled mode only
};

struct EpisodeOutcome {
  std::vector<ServedEvent> events;                 // indexed by POI
  std::vector<RouteSchedule> routes;               // indexed by robot
  std::vector<std::vector<std::size_t>> services;  // per human, POIs in service order
  double score = 0.0;                              // mean per-POI reward
  double expected_score = 0.0;
  double makespan = 0.0;
};

// Runs one episode. Each robot tours its assigned cluster; every published
// image joins its human's FIFO queue (publish time, then robot, then POI);
// service lasts t-bar and Pr_c is evaluated at service start.
inline EpisodeOutcome simulate(const ScenarioContext& ctx, const AllocationAction& action,
                               const SimOptions& opts, Rng& rng) {
  if (auto bad = validate_action(ctx, action)) throw std::invalid_argument(*bad);
  const std::size_t n = ctx.num_tasks();
  EpisodeOutcome out;
  out.events.resize(n);
  out.services.resize(ctx.num_humans());

  std::vector<std::tuple<double, std::size_t, std::size_t>> queue;  // (publish, robot, poi)
  for (std::size_t r = 0; r < ctx.num_robots(); ++r) {
    const std::size_t c = action.robot_to_centroid[r];
    out.routes.push_back(
        plan_route(ctx.robots[r], ctx.centroid_pois[c], ctx.clusters[c], ctx.pois));
    const RouteSchedule& s = out.routes.back();
    for (std::size_t k = 0; k < s.visits.size(); ++k) queue.emplace_back(s.publishes[k], r, s.visits[k]);
    out.makespan = std::max(out.makespan, s.return_time);
  }
  std::sort(queue.begin(), queue.end());

  std::vector<std::vector<BusyInterval>> busy(ctx.num_humans());
  std::vector<double> free_at(ctx.num_humans(), 0.0);
  for (const auto& [publish, robot, poi] : queue) {
    const std::size_t h = action.poi_to_human[poi];
    const HumanProfile& human = ctx.humans[h];
    ServedEvent& e = out.events[poi];
    e.poi = poi;
    e.robot = robot;
    e.human = h;
    e.publish_s = publish;
    e.start_s = std::max(publish, free_at[h]);
    e.t_bar = base_difficulty_time(ctx.robots[robot].image_quality(), ctx.pois[poi].difficulty);
    e.end_s = e.start_s + e.t_bar;
    e.t_hat_h = std::min(opts.shift_offset_h + e.start_s / 3600.0, kMaxShiftHours);
    e.utilization = utilization(busy[h], e.start_s);
    e.f_fatigue = fatigue_factor(e.t_hat_h);
    e.f_workload = workload_factor(e.utilization);
    e.f_difficulty = difficulty_factor(e.t_bar);
    e.pr_c = opts.forced_pr ? *opts.forced_pr
                            : classification_prob(human.cognitive, human.skill, e.f_fatigue,
                                                  e.f_workload, e.f_difficulty);
    e.points = points_for(ctx.pois[poi].difficulty);
    e.expected_reward = (2.0 * e.pr_c - 1.0) * e.points;
    busy[h].push_back({e.start_s, e.end_s});
    free_at[h] = e.end_s;
    out.services[h].push_back(poi);
    out.makespan = std::max(out.makespan, e.end_s);
  }

  // Bernoulli draws happen in POI order so the stream is allocation-independent.
  double total = 0.0, expected = 0.0;
  for (ServedEvent& e : out.events) {
    if (opts.mode == RewardMode::kSampled) {
      e.correct = uniform01(rng) < e.pr_c;
      e.reward = e.correct ? e.points : -e.points;
    } else {
      e.reward = e.expected_reward;
    }
    total += e.reward;
    expected += e.expected_reward;
  }
  out.score = total / static_cast<double>(n);
  out.expected_score = expected / static_cast<double>(n);
  return out;
}

// Expected-mode convenience overload.
inline EpisodeOutcome simulate(const ScenarioContext& ctx, const AllocationAction& action,
                               const SimOptions& opts = {}) {
  if (opts.mode == RewardMode::kSampled) {
    throw std::invalid_argument("simulate: sampled mode needs a random stream");
  }
  Rng unused(0);
  return simulate(ctx, action, opts, unused);
}

// Per-POI trace, one row per POI in index order.
inline void write_trace_csv(std::ostream& os, const EpisodeOutcome& out) {
  os << "poi_id,robot_id,human_id,publish_s,service_start_s,service_end_s,t_hat_h,u,F_f,F_w,"
        "F_s,Pr_c,points,reward\n";
  for (const ServedEvent& e : out.events) {
    os << e.poi << ',' << e.robot << ',' << e.human << ',' << format_double(e.publish_s) << ','
       << format_double(e.start_s) << ',' << format_double(e.end_s) << ','
       << format_double(e.t_hat_h) << ',' << format_double(e.utilization) << ','
       << format_double(e.f_fatigue) << ',' << format_double(e.f_workload) << ','
       << format_double(e.f_difficulty) << ',' << format_double(e.pr_c) << ','
       << format_double(e.points) << ',' << format_double(e.reward) << '\n';
  }
}

}  // namespace atrl::sim

#endif  // ATRL_SIM_SIMULATOR_HPP_
