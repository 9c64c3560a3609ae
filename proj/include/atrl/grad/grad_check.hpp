#ifndef ATRL_GRAD_GRAD_CHECK_HPP_
#define ATRL_GRAD_GRAD_CHECK_HPP_

#include <algorithm>
#include <cmath>
#include <functional>

#include "atrl/grad/tape.hpp"
#include "atrl/util/errors.hpp"

namespace atrl::grad {

// Builds a scalar on `tape` from the input variable.
using ScalarFn = std::function<Var(Tape&, Var)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Compares reverse-mode gradients of f at x against central differences.
// Relative error per entry is |a - n| / max(|a|, |n|, floor); the floor keeps
// entries whose true gradient is zero from dividing noise by noise.
inline GradCheckResult grad_check_detailed(const ScalarFn& f, const Tensor& x, double h,
                                           double floor = 1e-6) {
  if (!(h > 0.0)) throw DomainError("grad_check: step must be positive");
  Tensor analytic;
  {
    Tape tape;
    Var xv = tape.variable(x);
    Var y = f(tape, xv);
    tape.backward(y);
    analytic = tape.grad(xv);
  }
  auto eval = [&](const Tensor& at) {
    Tape tape;
    return f(tape, tape.constant(at)).value().item();
  };
  GradCheckResult res;
  Tensor probe = x;
  for (std::size_t k = 0; k < x.size(); ++k) {
    probe[k] = x[k] + h;
    const double fp = eval(probe);
    probe[k] = x[k] - h;
    const double fm = eval(probe);
    probe[k] = x[k];
    const double numeric = (fp - fm) / (2.0 * h);
    const double a = analytic[k];
    const double err =
        std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
    if (k == 0 || err > res.max_rel_error) res = {err, k, a, numeric};
  }
  return res;
}

inline double grad_check(const ScalarFn& f, const Tensor& x, double h) {
  return grad_check_detailed(f, x, h).max_rel_error;
}

}  // namespace atrl::grad

#endif  // ATRL_GRAD_GRAD_CHECK_HPP_
