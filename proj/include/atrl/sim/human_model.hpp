#ifndef ATRL_SIM_HUMAN_MODEL_HPP_
#define ATRL_SIM_HUMAN_MODEL_HPP_

#include <algorithm>
#include <cmath>
#include <string>

#include "atrl/scenario/types.hpp"
#include "atrl/util/errors.hpp"

namespace atrl::sim {

inline constexpr double kMaxShiftHours = 8.0;

// Minimum seconds to classify an image (t-bar): low quality {20, 60, 180},
// high quality {10, 30, 90} for easy/medium/hard.
inline constexpr double base_difficulty_time(ImageQuality quality, Difficulty difficulty) {
  constexpr double low[] = {20.0, 60.0, 180.0};
  constexpr double high[] = {10.0, 30.0, 90.0};
  const int d = static_cast<int>(difficulty);
  return quality == ImageQuality::kLow ? low[d] : high[d];
}

// Fatigue correction for `hours` on shift. Flat at 1 for the first hour,
// then linear down to 0.16 at eight hours; held there beyond.
inline double fatigue_factor(double hours) {
  if (hours < 0.0 || std::isnan(hours)) {
    throw DomainError("fatigue_factor: working hours must be >= 0, got " + std::to_string(hours));
  }
  if (hours < 1.0) return 1.0;
  const double t = std::min(hours, kMaxShiftHours);
  return -0.12 * t + 1.12;
}

// Workload correction for utilization u in [0, 1]; peaks at 1 on [0.45, 0.65).
inline double workload_factor(double u) {
  if (!(u >= 0.0 && u <= 1.0)) {
    throw DomainError("workload_factor: utilization must lie in [0, 1], got " + std::to_string(u));
  }
  if (u < 0.45) return -2.47 * u * u + 2.22 * u + 0.5;
  if (u < 0.65) return 1.0;
  return -4.08 * u * u + 5.31 * u - 0.724;
}

// Sigmoid difficulty correction for t-bar seconds.
inline double difficulty_factor(double t_bar) {
  if (!(t_bar > 0.0)) {
    throw DomainError("difficulty_factor: t_bar must be positive, got " + std::to_string(t_bar));
  }
  return 1.0 / (1.0 + std::exp(0.05 * (t_bar - 150.0)));
}

// Probability of a correct binary classification:
//   Pr_c = 1/2 + sin(h_c) * F_f * F_w * sin(h_s) * F_s.
inline double classification_prob(double cognitive, double skill, double f_fatigue,
                                   double f_workload, double f_difficulty) {
  return 0.5 + std::sin(cognitive) * (f_fatigue * f_workload) * std::sin(skill) * f_difficulty;
}

}  // namespace atrl::sim

#endif  // ATRL_SIM_HUMAN_MODEL_HPP_
