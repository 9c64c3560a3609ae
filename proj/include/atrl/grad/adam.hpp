#ifndef ATRL_GRAD_ADAM_HPP_
#define ATRL_GRAD_ADAM_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "atrl/grad/tensor.hpp"
#include "atrl/util/errors.hpp"

namespace atrl::grad {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct OptimState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

inline OptimState make_optim_state(std::span<const Tensor> params, AdamConfig config = {}) {
  OptimState s;
  s.config = config;
  for (const Tensor& p : params) {
    s.m.emplace_back(p.rows(), p.cols());
    s.v.emplace_back(p.rows(), p.cols());
  }
  return s;
}

// One bias-corrected Adam update, in place.
inline void adam_step(std::span<Tensor> params, std::span<const Tensor> grads,
                      OptimState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " params, " +
                         std::to_string(grads.size()) + " grads, " +
                         std::to_string(state.m.size()) + " moment buffers");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k].same_shape(grads[k]) || !params[k].same_shape(state.m[k])) {
      throw DimensionError("adam_step: parameter " + std::to_string(k) + " is " +
                           params[k].shape_string() + ", gradient is " +
                           grads[k].shape_string());
    }
  }
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = params[k];
    const Tensor& g = grads[k];
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    for (std::size_t e = 0; e < p.size(); ++e) {
      m[e] = c.beta1 * m[e] + (1.0 - c.beta1) * g[e];
      v[e] = c.beta2 * v[e] + (1.0 - c.beta2) * g[e] * g[e];
      const double m_hat = m[e] / bc1;
      const double v_hat = v[e] / bc2;
      p[e] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

}  // namespace atrl::grad

#endif  // ATRL_GRAD_ADAM_HPP_
