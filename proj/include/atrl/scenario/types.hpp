#ifndef ATRL_SCENARIO_TYPES_HPP_
#define ATRL_SCENARIO_TYPES_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "atrl/util/errors.hpp"

namespace atrl {

inline constexpr double kArenaSize = 2000.0;  // metres per side

// Ability levels partition (0, pi/4): low (0, pi/12), medium [pi/12, pi/6],
// high (pi/6, pi/4).
enum class Level { kLow, kMedium, kHigh };

inline constexpr double kLevelLowUpper = std::numbers::pi / 12.0;
inline constexpr double kLevelHighLower = std::numbers::pi / 6.0;
inline constexpr double kAbilityMax = std::numbers::pi / 4.0;

inline std::optional<Level> level_of(double angle) {
  if (!(angle > 0.0) || !(angle < kAbilityMax)) return std::nullopt;
  if (angle < kLevelLowUpper) return Level::kLow;
  if (angle <= kLevelHighLower) return Level::kMedium;
  return Level::kHigh;
}

inline std::string_view to_string(Level l) {
  switch (l) {
    case Level::kLow: return "low";
    case Level::kMedium: return "medium";
    case Level::kHigh: return "high";
  }
  return "?";
}

inline std::optional<Level> parse_level(std::string_view s) {
  if (s == "low") return Level::kLow;
  if (s == "medium") return Level::kMedium;
  if (s == "high") return Level::kHigh;
  return std::nullopt;
}

struct HumanProfile {
  double cognitive = 0.0;  // h_c, radians
  double skill = 0.0;      // h_s, radians
  Level cognitive_level = Level::kLow;
  Level skill_level = Level::kLow;

  bool consistent() const {
    return level_of(cognitive) == cognitive_level && level_of(skill) == skill_level;
  }
};

enum class RobotKind { kUav, kUgv };
enum class ImageQuality { kLow, kHigh };

// Robot specifications are fixed per kind: UAV 20 m/s with low-quality
// images, UGV 8 m/s with high-quality images.
class RobotProfile {
 public:
  constexpr explicit RobotProfile(RobotKind kind = RobotKind::kUav) : kind_(kind) {}

  constexpr RobotKind kind() const { return kind_; }
  constexpr double speed() const { return kind_ == RobotKind::kUav ? 20.0 : 8.0; }
  constexpr ImageQuality image_quality() const {
    return kind_ == RobotKind::kUav ? ImageQuality::kLow : ImageQuality::kHigh;
  }

  friend constexpr bool operator==(RobotProfile, RobotProfile) = default;

 private:
  RobotKind kind_;
};

inline std::string_view to_string(RobotKind k) { return k == RobotKind::kUav ? "UAV" : "UGV"; }
inline std::string_view to_string(ImageQuality q) {
  return q == ImageQuality::kLow ? "low" : "high";
}

enum class Difficulty { kEasy, kMedium, kHard };

inline std::string_view to_string(Difficulty d) {
  switch (d) {
    case Difficulty::kEasy: return "easy";
    case Difficulty::kMedium: return "medium";
    case Difficulty::kHard: return "hard";
  }
  return "?";
}

inline std::optional<Difficulty> parse_difficulty(std::string_view s) {
  if (s == "easy") return Difficulty::kEasy;
  if (s == "medium") return Difficulty::kMedium;
  if (s == "hard") return Difficulty::kHard;
  return std::nullopt;
}

// Points won or lost for classifying a task of this difficulty.
inline constexpr double points_for(Difficulty d) {
  switch (d) {
    case Difficulty::kEasy: return 10.0;
    case Difficulty::kMedium: return 20.0;
    case Difficulty::kHard: return 30.0;
  }
  return 0.0;
}

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Poi {
  Point position;
  bool is_threat = false;
  Difficulty difficulty = Difficulty::kEasy;
};

// Team and task counts for scenario generation.
struct ScenarioSpec {
  std::size_t humans = 3;
  std::size_t robots = 4;
  std::size_t threats = 20;
  std::size_t non_threats = 20;
  // Number of UAVs; nullopt draws each robot's kind uniformly.
  std::optional<std::size_t> uavs;

  std::size_t tasks() const { return threats + non_threats; }

  static std::size_t default_uavs(std::size_t robots) { return (robots + 1) / 2; }

  static ScenarioSpec make(std::size_t humans, std::size_t robots, std::size_t threats,
                           std::size_t non_threats) {
    return {humans, robots, threats, non_threats, default_uavs(robots)};
  }
  // 3 humans, 4 robots, 20 threats, 20 non-threats.
  static ScenarioSpec setting_a() { return make(3, 4, 20, 20); }
  // 5 humans, 7 robots, 25 threats, 25 non-threats.
  static ScenarioSpec setting_b() { return make(5, 7, 25, 25); }

  friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

struct ScenarioContext {
  std::uint64_t seed = 0;
  std::vector<HumanProfile> humans;
  std::vector<RobotProfile> robots;
  std::vector<Poi> pois;
  std::vector<std::vector<std::size_t>> clusters;  // one per robot, partitions POIs
  std::vector<std::size_t> centroid_pois;          // clusters[k] contains centroid_pois[k]

  std::size_t num_humans() const { return humans.size(); }
  std::size_t num_robots() const { return robots.size(); }
  std::size_t num_tasks() const { return pois.size(); }
};

// Joint initial allocation: robot r starts at centroid_pois[robot_to_centroid[r]]
// and POI p's image goes to human poi_to_human[p].
struct AllocationAction {
  std::vector<std::size_t> robot_to_centroid;
  std::vector<std::size_t> poi_to_human;
  friend bool operator==(const AllocationAction&, const AllocationAction&) = default;
  friend auto operator<=>(const AllocationAction&, const AllocationAction&) = default;
};

}  // namespace atrl

#endif  // ATRL_SCENARIO_TYPES_HPP_
