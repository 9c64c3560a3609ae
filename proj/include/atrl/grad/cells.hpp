#ifndef ATRL_GRAD_CELLS_HPP_
#define ATRL_GRAD_CELLS_HPP_

#include "atrl/grad/tape.hpp"

namespace atrl::grad {

// Affine map x W + b for a batch of rows.
inline Var linear(Var x, Var weight, Var bias) { return add_row(matmul(x, weight), bias); }

struct RnnWeights {
  Var w_x;  // d_in x d
  Var w_h;  // d x d
  Var b;    // 1 x d
};

// h = tanh(x W_x + h_prev W_h + b) for row vectors x (1 x d_in), h_prev (1 x d).
inline Var rnn_cell(Var x, Var h_prev, const RnnWeights& w) {
  return tanh(add_row(matmul(x, w.w_x) + matmul(h_prev, w.w_h), w.b));
}

// Same recurrence when x W_x has already been computed for the whole
// sequence (saves one small matmul per step).
inline Var rnn_cell_projected(Var x_proj, Var h_prev, const RnnWeights& w) {
  return tanh(add_row(x_proj + matmul(h_prev, w.w_h), w.b));
}

struct GruWeights {
  Var w_z, u_z, b_z;  // update gate
  Var w_r, u_r, b_r;  // reset gate
  Var w_n, u_n, b_n;  // candidate
};

// z = s(x Wz + h Uz + bz), r = s(x Wr + h Ur + br),
// n = tanh(x Wn + (r * h) Un + bn), h' = (1 - z) * n + z * h.
inline Var gru_cell(Var x, Var h_prev, const GruWeights& w) {
  Var z = sigmoid(add_row(matmul(x, w.w_z) + matmul(h_prev, w.u_z), w.b_z));
  Var r = sigmoid(add_row(matmul(x, w.w_r) + matmul(h_prev, w.u_r), w.b_r));
  Var n = tanh(add_row(matmul(x, w.w_n) + matmul(mul(r, h_prev), w.u_n), w.b_n));
  // (1 - z) * n + z * h = n + z * (h - n)
  return n + mul(z, h_prev - n);
}

}  // namespace atrl::grad

#endif  // ATRL_GRAD_CELLS_HPP_
