#ifndef ATRL_MODEL_POLICY_HPP_
#define ATRL_MODEL_POLICY_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "atrl/grad/tape.hpp"
#include "atrl/scenario/types.hpp"
#include "atrl/util/rng.hpp"

namespace atrl::model {

using grad::Tensor;
using grad::Var;

// Factorized allocation distribution. Robots pick centroids in index order,
// each from a softmax over the centroids not yet taken (so the result is
// always a bijection); every POI picks a human independently. The joint
// log-probability and entropy are sums over slots.
struct SampledAction {
  AllocationAction action;
  double log_prob = 0.0;
  double entropy = 0.0;
};

namespace detail {

// log-softmax of the listed entries of `row`, computed exactly as
// grad::log_softmax_rows does.
inline std::vector<double> log_softmax_subset(std::span<const double> row,
                                              const std::vector<std::size_t>& cols) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t c : cols) mx = std::max(mx, row[c]);
  double z = 0.0;
  for (std::size_t c : cols) z += std::exp(row[c] - mx);
  const double lse = mx + std::log(z);
  std::vector<double> out;
  out.reserve(cols.size());
  for (std::size_t c : cols) out.push_back(row[c] - lse);
  return out;
}

inline double entropy_of(const std::vector<double>& logp) {
  double h = 0.0;
  for (double lp : logp) h -= std::exp(lp) * lp;
  return h;
}

// Sampled index when rng is given, otherwise argmax (lowest index on ties).
inline std::size_t choose(const std::vector<double>& logp, Rng* rng) {
  if (!rng) {
    return static_cast<std::size_t>(std::max_element(logp.begin(), logp.end()) - logp.begin());
  }
  const double u = uniform01(*rng);
  double acc = 0.0;
  for (std::size_t k = 0; k < logp.size(); ++k) {
    acc += std::exp(logp[k]);
    if (u < acc) return k;
  }
  return logp.size() - 1;
}

inline SampledAction draw(const Tensor& centroid_logits, const Tensor& assign_logits, Rng* rng) {
  const std::size_t j = centroid_logits.rows();
  const std::size_t n = assign_logits.rows();
  SampledAction s;
  s.action.robot_to_centroid.resize(j);
  s.action.poi_to_human.resize(n);

  std::vector<bool> taken(j, false);
  for (std::size_t r = 0; r < j; ++r) {
    std::vector<std::size_t> avail;
    for (std::size_t c = 0; c < j; ++c)
      if (!taken[c]) avail.push_back(c);
    const auto lp = log_softmax_subset(centroid_logits.row(r), avail);
    const std::size_t k = choose(lp, rng);
    s.action.robot_to_centroid[r] = avail[k];
    taken[avail[k]] = true;
    s.log_prob += lp[k];
    s.entropy += entropy_of(lp);
  }

  std::vector<std::size_t> all(assign_logits.cols());
  for (std::size_t c = 0; c < all.size(); ++c) all[c] = c;
  double assign_logp = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    const auto lp = log_softmax_subset(assign_logits.row(p), all);
    const std::size_t k = choose(lp, rng);
    s.action.poi_to_human[p] = k;
    assign_logp += lp[k];
    s.entropy += entropy_of(lp);
  }
  s.log_prob += assign_logp;
  return s;
}

}  // namespace detail

inline SampledAction sample_action(const Tensor& centroid_logits, const Tensor& assign_logits,
                                   Rng& rng) {
  return detail::draw(centroid_logits, assign_logits, &rng);
}

// Per-slot argmax under the same sequential centroid masking.
inline SampledAction greedy_action(const Tensor& centroid_logits, const Tensor& assign_logits) {
  return detail::draw(centroid_logits, assign_logits, nullptr);
}

struct ActionTerms {
  Var log_prob;  // 1 x 1
  Var entropy;   // 1 x 1
};

// Differentiable joint log-probability and entropy of a given action.
inline ActionTerms action_terms(Var centroid_logits, Var assign_logits,
                                const AllocationAction& action) {
  const std::size_t j = centroid_logits.rows();
  std::vector<Var> logps, entropies;
  std::vector<bool> taken(j, false);
  for (std::size_t r = 0; r < j; ++r) {
    std::vector<std::size_t> avail;
    std::size_t pos = 0;
    for (std::size_t c = 0; c < j; ++c) {
      if (taken[c]) continue;
      if (c == action.robot_to_centroid[r]) pos = avail.size();
      avail.push_back(c);
    }
    taken[action.robot_to_centroid[r]] = true;
    if (avail.size() == 1) continue;  // forced choice: log-prob 0, entropy 0
    Var lp = grad::log_softmax_rows(
        grad::select_cols(grad::slice_rows(centroid_logits, r, 1), std::move(avail)));
    logps.push_back(grad::pick(lp, 0, pos));
    entropies.push_back(grad::neg(grad::sum(grad::mul(grad::exp(lp), lp))));
  }
  Var lp = grad::log_softmax_rows(assign_logits);
  logps.push_back(grad::sum(grad::gather_rows(lp, action.poi_to_human)));
  entropies.push_back(grad::neg(grad::sum(grad::mul(grad::exp(lp), lp))));
  return {grad::sum(grad::concat_rows(logps)), grad::sum(grad::concat_rows(entropies))};
}

// Upper bound on the joint entropy: sum of log(slot width) over slots.
inline double max_entropy(std::size_t humans, std::size_t robots, std::size_t tasks) {
  double h = 0.0;
  for (std::size_t w = robots; w >= 2; --w) h += std::log(static_cast<double>(w));
  return h + static_cast<double>(tasks) * std::log(static_cast<double>(humans));
}

}  // namespace atrl::model

#endif  // ATRL_MODEL_POLICY_HPP_
