#ifndef ATRL_BENCH_STATS_HPP_
#define ATRL_BENCH_STATS_HPP_

#include <cmath>
#include <span>
#include <stdexcept>

#include <boost/math/special_functions/beta.hpp>

namespace atrl::bench {

struct SampleSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample (n - 1) standard deviation
  std::size_t n = 0;
};

inline SampleSummary summarize(std::span<const double> xs) {
  SampleSummary s;
  s.n = xs.size();
  if (s.n == 0) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

// Two-sided p-value of Student's t with `df` degrees of freedom:
// P(|T| > |t|) = I_{df / (df + t^2)}(df / 2, 1 / 2).
inline double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw std::domain_error("t distribution needs df > 0");
  if (std::isinf(t)) return 0.0;
  return boost::math::ibeta(0.5 * df, 0.5, df / (df + t * t));
}

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

// Welch's unequal-variance two-sample t-test with Welch-Satterthwaite df.
inline WelchResult welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw std::invalid_argument("welch_t_test needs at least two samples per group");
  }
  const SampleSummary sa = summarize(a), sb = summarize(b);
  const double va = sa.stddev * sa.stddev / static_cast<double>(sa.n);
  const double vb = sb.stddev * sb.stddev / static_cast<double>(sb.n);
  if (va + vb == 0.0) {
    throw std::domain_error("welch_t_test: both samples have zero variance; p is undefined");
  }
  WelchResult r;
  r.t = (sa.mean - sb.mean) / std::sqrt(va + vb);
  const double num = (va + vb) * (va + vb);
  const double den = va * va / static_cast<double>(sa.n - 1) +
                     vb * vb / static_cast<double>(sb.n - 1);
  r.df = num / den;
  r.p = student_t_two_sided_p(r.t, r.df);
  return r;
}

}  // namespace atrl::bench

#endif  // ATRL_BENCH_STATS_HPP_
