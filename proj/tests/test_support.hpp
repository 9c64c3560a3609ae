#ifndef ATRL_TESTS_TEST_SUPPORT_HPP_
#define ATRL_TESTS_TEST_SUPPORT_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "atrl/grad/grad_check.hpp"
#include "atrl/grad/tape.hpp"
#include "atrl/model/network.hpp"
#include "atrl/util/rng.hpp"

namespace atrl::testing {

inline grad::Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0,
                                  double hi = 1.0) {
  grad::Tensor t(r, c);
  for (double& x : t.data()) x = lo + (hi - lo) * uniform01(rng);
  return t;
}

// Scalar probe sum(w * y) with fixed random weights so every output entry
// contributes a distinct gradient.
inline grad::Var weighted_sum(grad::Var y, std::uint64_t seed) {
  Rng rng(seed);
  grad::Var w = y.tape->constant(random_tensor(y.rows(), y.cols(), rng));
  return grad::sum(grad::mul(y, w));
}

// One entry per differentiable op; x is drawn from [lo, hi].
struct OpCase {
  const char* name;
  std::size_t rows, cols;
  double lo, hi;
  std::function<grad::Var(grad::Tape&, grad::Var, Rng&)> build;
};

inline std::vector<OpCase> op_cases() {
  using namespace grad;
  auto other = [](Tape& t, Rng& rng, std::size_t r, std::size_t c) {
    return t.constant(random_tensor(r, c, rng));
  };
  return {
      {"matmul_lhs", 3, 4, -1, 1, [=](Tape& t, Var x, Rng& r) { return matmul(x, other(t, r, 4, 2)); }},
      {"matmul_rhs", 4, 2, -1, 1, [=](Tape& t, Var x, Rng& r) { return matmul(other(t, r, 3, 4), x); }},
      {"transpose", 3, 2, -1, 1, [](Tape&, Var x, Rng&) { return transpose(x); }},
      {"add", 2, 3, -1, 1, [=](Tape& t, Var x, Rng& r) { return add(x, other(t, r, 2, 3)); }},
      {"sub", 2, 3, -1, 1, [=](Tape& t, Var x, Rng& r) { return sub(other(t, r, 2, 3), x); }},
      {"mul", 2, 3, -1, 1, [=](Tape& t, Var x, Rng& r) { return mul(x, other(t, r, 2, 3)); }},
      {"mul_self", 2, 3, -1, 1, [](Tape&, Var x, Rng&) { return mul(x, x); }},
      {"add_row_matrix", 3, 4, -1, 1, [=](Tape& t, Var x, Rng& r) { return add_row(x, other(t, r, 1, 4)); }},
      {"add_row_bias", 1, 4, -1, 1, [=](Tape& t, Var x, Rng& r) { return add_row(other(t, r, 3, 4), x); }},
      {"scale", 2, 2, -1, 1, [](Tape&, Var x, Rng&) { return scale(x, -1.7); }},
      {"add_scalar", 2, 2, -1, 1, [](Tape&, Var x, Rng&) { return add_scalar(x, 0.3); }},
      {"square", 2, 3, -1, 1, [](Tape&, Var x, Rng&) { return square(x); }},
      {"tanh", 2, 3, -2, 2, [](Tape&, Var x, Rng&) { return tanh(x); }},
      {"sigmoid", 2, 3, -3, 3, [](Tape&, Var x, Rng&) { return sigmoid(x); }},
      {"exp", 2, 3, -1, 1, [](Tape&, Var x, Rng&) { return exp(x); }},
      {"log", 2, 3, 0.2, 2, [](Tape&, Var x, Rng&) { return log(x); }},
      {"clip", 3, 3, -1, 1, [](Tape&, Var x, Rng&) { return clip(x, -0.5, 0.5); }},
      {"minimum", 3, 3, -1, 1, [=](Tape& t, Var x, Rng& r) { return minimum(x, other(t, r, 3, 3)); }},
      {"sum", 2, 4, -1, 1, [](Tape&, Var x, Rng&) { return sum(x); }},
      {"mean", 2, 4, -1, 1, [](Tape&, Var x, Rng&) { return mean(x); }},
      {"mean_rows", 4, 3, -1, 1, [](Tape&, Var x, Rng&) { return mean_rows(x); }},
      {"reshape", 2, 6, -1, 1, [](Tape&, Var x, Rng&) { return reshape(x, 3, 4); }},
      {"concat_rows", 2, 3, -1, 1,
       [=](Tape& t, Var x, Rng& r) { return concat_rows({x, other(t, r, 1, 3), x}); }},
      {"concat_cols", 2, 3, -1, 1,
       [=](Tape& t, Var x, Rng& r) { return concat_cols({other(t, r, 2, 2), x, x}); }},
      {"slice_rows", 4, 3, -1, 1, [](Tape&, Var x, Rng&) { return slice_rows(x, 1, 2); }},
      {"slice_cols", 3, 5, -1, 1, [](Tape&, Var x, Rng&) { return slice_cols(x, 2, 2); }},
      {"select_cols", 2, 5, -1, 1, [](Tape&, Var x, Rng&) { return select_cols(x, {4, 0, 2}); }},
      {"pick", 3, 3, -1, 1, [](Tape&, Var x, Rng&) { return pick(x, 2, 1); }},
      {"gather_rows", 3, 4, -1, 1, [](Tape&, Var x, Rng&) { return gather_rows(x, {3, 0, 3}); }},
      {"softmax_rows", 3, 4, -2, 2, [](Tape&, Var x, Rng&) { return softmax_rows(x); }},
      {"log_softmax_rows", 3, 4, -2, 2, [](Tape&, Var x, Rng&) { return log_softmax_rows(x); }},
      {"layer_norm", 3, 5, -2, 2,
       [](Tape& t, Var x, Rng&) {
         return layer_norm(x, t.constant(Tensor(1, 5, 1.3)), t.constant(Tensor(1, 5, 0.1)), 1e-5);
       }},
  };
}

// Central-difference check of one op at h = 1e-5 under a weighted-sum probe.
inline grad::GradCheckResult check_op(const OpCase& c, std::uint64_t seed) {
  Rng rng(100 + seed);
  const grad::Tensor x = random_tensor(c.rows, c.cols, rng, c.lo, c.hi);
  return grad::grad_check_detailed(
      [&](grad::Tape& t, grad::Var v) {
        Rng local(seed);
        return weighted_sum(c.build(t, v, local), 7 + seed);
      },
      x, 1e-5);
}

// Scalar that touches every output head of the network.
inline grad::Var probe(const model::ForwardOutput& out) {
  return grad::sum(grad::concat_rows({weighted_sum(out.centroid_logits, 1),
                                      weighted_sum(out.assign_logits, 2),
                                      weighted_sum(out.value, 3)}));
}

// The probe as a function of parameter tensor `which`, others held fixed.
inline grad::ScalarFn forward_wrt(const model::ModelParams& m, const RawContext& raw,
                                  std::size_t which) {
  return [&m, &raw, which](grad::Tape& tape, grad::Var x) {
    auto vars = model::bind_params(tape, m, false);
    vars[which] = x;
    return probe(model::forward(tape, m, vars, raw));
  };
}

}  // namespace atrl::testing

#endif  // ATRL_TESTS_TEST_SUPPORT_HPP_
