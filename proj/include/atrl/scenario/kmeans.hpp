#ifndef ATRL_SCENARIO_KMEANS_HPP_
#define ATRL_SCENARIO_KMEANS_HPP_

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "atrl/scenario/types.hpp"
#include "atrl/util/errors.hpp"
#include "atrl/util/rng.hpp"

namespace atrl {

struct KMeansOptions {
  std::size_t max_iterations = 100;
  double tolerance = 1e-6;  // metres of centroid movement
};

struct KMeansResult {
  std::vector<std::vector<std::size_t>> clusters;
  std::vector<std::size_t> centroid_points;  // member nearest each cluster mean
  std::vector<Point> means;
  std::size_t iterations = 0;
  std::vector<double> objective_history;  // within-cluster SSE after each iteration
};

namespace detail {

inline double sq_dist(Point a, Point b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

// k-means++ seeding: first centre uniform, then proportional to squared
// distance from the nearest chosen centre.
inline std::vector<Point> kmeanspp_seed(std::span<const Point> pts, std::size_t k, Rng& rng) {
  std::vector<Point> centres;
  centres.push_back(pts[uniform_index(rng, pts.size())]);
  std::vector<double> d2(pts.size(), std::numeric_limits<double>::infinity());
  while (centres.size() < k) {
    double total = 0.0;
    for (std::size_t p = 0; p < pts.size(); ++p) {
      d2[p] = std::min(d2[p], sq_dist(pts[p], centres.back()));
      total += d2[p];
    }
    std::size_t pick = pts.size() - 1;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      for (std::size_t p = 0; p < pts.size(); ++p) {
        acc += d2[p];
        if (target < acc) {
          pick = p;
          break;
        }
      }
    } else {
      pick = uniform_index(rng, pts.size());
    }
    centres.push_back(pts[pick]);
  }
  return centres;
}

}  // namespace detail

// Lloyd's algorithm with k-means++ seeding. Nearest-centre ties go to the
// lowest centre index; empty clusters are re-seeded with the point farthest
// from its current centre.
inline KMeansResult kmeans_cluster(std::span<const Point> pts, std::size_t k, Rng& rng,
                                   const KMeansOptions& opts = {}) {
  if (k == 0 || pts.size() < k) {
    throw InfeasibleScenario("k-means needs 1 <= k <= points, got k=" + std::to_string(k) +
                             " for " + std::to_string(pts.size()) + " points");
  }
  const std::size_t n = pts.size();
  KMeansResult res;
  res.means = detail::kmeanspp_seed(pts, k, rng);
  std::vector<std::size_t> label(n, 0);

  for (std::size_t iter = 0; iter < opts.max_iterations; ++iter) {
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t p = 0; p < n; ++p) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = detail::sq_dist(pts[p], res.means[c]);
        if (d < best) {
          best = d;
          label[p] = c;
        }
      }
      ++counts[label[p]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t p = 0; p < n; ++p) {
        if (counts[label[p]] < 2) continue;
        const double d = detail::sq_dist(pts[p], res.means[label[p]]);
        if (d > far_d) {
          far_d = d;
          far = p;
        }
      }
      --counts[label[far]];
      label[far] = c;
      counts[c] = 1;
      res.means[c] = pts[far];
    }

    std::vector<Point> next(k);
    for (std::size_t p = 0; p < n; ++p) {
      next[label[p]].x += pts[p].x;
      next[label[p]].y += pts[p].y;
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      next[c].x /= static_cast<double>(counts[c]);
      next[c].y /= static_cast<double>(counts[c]);
      shift = std::max(shift, distance(next[c], res.means[c]));
    }
    res.means = std::move(next);
    double sse = 0.0;
    for (std::size_t p = 0; p < n; ++p) sse += detail::sq_dist(pts[p], res.means[label[p]]);
    res.objective_history.push_back(sse);
    res.iterations = iter + 1;
    if (shift < opts.tolerance) break;
  }

  res.clusters.assign(k, {});
  for (std::size_t p = 0; p < n; ++p) res.clusters[label[p]].push_back(p);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t best_p = res.clusters[c].front();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t p : res.clusters[c]) {
      const double d = detail::sq_dist(pts[p], res.means[c]);
      if (d < best) {
        best = d;
        best_p = p;
      }
    }
    res.centroid_points.push_back(best_p);
  }
  return res;
}

}  // namespace atrl

#endif  // ATRL_SCENARIO_KMEANS_HPP_
