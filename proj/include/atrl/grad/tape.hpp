#ifndef ATRL_GRAD_TAPE_HPP_
#define ATRL_GRAD_TAPE_HPP_

#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "atrl/grad/tensor.hpp"
#include "atrl/util/errors.hpp"

namespace atrl::grad {

class Tape;

// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

// Dynamic reverse-mode tape. Nodes are appended in evaluation order, so a
// node's parents always have smaller ids and a single reverse sweep visits
// every node exactly once. Not thread-safe; use one tape per worker.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value) { return push(std::move(value), {}, nullptr, false); }
  Var variable(Tensor value) { return push(std::move(value), {}, nullptr, true); }

  // Records a node. `requires_grad` is forced on when any parent requires it.
  Var push(Tensor value, std::vector<std::size_t> parents, BackwardFn backward,
           bool requires_grad = false) {
    for (std::size_t p : parents) requires_grad = requires_grad || nodes_[p].requires_grad;
    nodes_.push_back(Node{std::move(value), Tensor{}, std::move(parents),
                          requires_grad ? std::move(backward) : BackwardFn{},
                          requires_grad});
    return Var{this, nodes_.size() - 1};
  }

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  // Gradient of the last backward() target with respect to `v`; zeros when
  // `v` did not influence it.
  Tensor grad(Var v) const {
    const Node& n = nodes_[v.id];
    if (n.grad.size() == 0 && n.value.size() != 0) {
      return Tensor(n.value.rows(), n.value.cols());
    }
    return n.grad;
  }

  // Accumulator for a parent's gradient, allocated on first use.
  Tensor& grad_acc(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) n.grad = Tensor(n.value.rows(), n.value.cols());
    return n.grad;
  }
  const Tensor& grad_of(std::size_t id) const { return nodes_[id].grad; }

  void backward(Var loss) {
    if (loss.tape != this) throw std::invalid_argument("loss recorded on another tape");
    const Tensor& lv = nodes_[loss.id].value;
    if (lv.rows() != 1 || lv.cols() != 1) {
      throw DimensionError("backward() needs a scalar loss, got " + lv.shape_string());
    }
    for (auto& n : nodes_) n.grad = Tensor{};
    grad_acc(loss.id)[0] = 1.0;
    for (std::size_t id = loss.id + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (!n.requires_grad || n.grad.size() == 0 || !n.backward) continue;
      n.backward(*this, id);
    }
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    bool requires_grad = false;
  };
  // deque: pushing a node never invalidates references to earlier values
  std::deque<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape->value(*this); }

namespace detail {

inline void same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw std::invalid_argument("operands recorded on different tapes");
}

inline void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_string() +
                         " vs " + b.shape_string());
  }
}

// c += a * b
inline void gemm_nn(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = &c(i, 0);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a(i, p);
      if (av == 0.0) continue;
      const double* brow = &b(p, 0);
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// c += a * b^T
inline void gemm_nt(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = &a(i, 0);
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = &b(j, 0);
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      c(i, j) += s;
    }
  }
}

// c += a^T * b
inline void gemm_tn(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    const double* brow = &b(i, 0);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a(i, p);
      if (av == 0.0) continue;
      double* crow = &c(p, 0);
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// Elementwise unary op with derivative expressed through input x and output y.
template <typename F, typename DF>
Var unary(Var a, F f, DF df) {
  const Tensor& x = a.value();
  Tensor y(x.rows(), x.cols());
  for (std::size_t k = 0; k < x.size(); ++k) y[k] = f(x[k]);
  const std::size_t pa = a.id;
  return a.tape->push(std::move(y), {pa}, [pa, df](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    const Tensor& x = t.value(pa);
    const Tensor& y = t.value(self);
    Tensor& ga = t.grad_acc(pa);
    for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * df(x[k], y[k]);
  });
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear algebra

inline Var matmul(Var a, Var b) {
  detail::same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw DimensionError("matmul: inner dimensions differ, " + av.shape_string() + " x " +
                         bv.shape_string());
  }
  Tensor c(av.rows(), bv.cols());
  detail::gemm_nn(av, bv, c);
  const std::size_t pa = a.id, pb = b.id;
  return a.tape->push(std::move(c), {pa, pb}, [pa, pb](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    if (t.requires_grad(pa)) detail::gemm_nt(g, t.value(pb), t.grad_acc(pa));
    if (t.requires_grad(pb)) detail::gemm_tn(t.value(pa), g, t.grad_acc(pb));
  });
}

inline Var transpose(Var a) {
  const Tensor& x = a.value();
  Tensor y(x.cols(), x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) y(c, r) = x(r, c);
  const std::size_t pa = a.id;
  return a.tape->push(std::move(y), {pa}, [pa](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    Tensor& ga = t.grad_acc(pa);
    for (std::size_t r = 0; r < ga.rows(); ++r)
      for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) += g(c, r);
  });
}

// ---------------------------------------------------------------------------
// Elementwise arithmetic

inline Var add(Var a, Var b) {
  detail::same_tape(a, b);
  detail::require_same_shape("add", a.value(), b.value());
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t k = 0; k < y.size(); ++k) y[k] += bv[k];
  const std::size_t pa = a.id, pb = b.id;
  return a.tape->push(std::move(y), {pa, pb}, [pa, pb](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    for (std::size_t p : {pa, pb}) {
      if (!t.requires_grad(p)) continue;
      Tensor& gp = t.grad_acc(p);
      for (std::size_t k = 0; k < g.size(); ++k) gp[k] += g[k];
    }
  });
}

inline Var sub(Var a, Var b) {
  detail::same_tape(a, b);
  detail::require_same_shape("sub", a.value(), b.value());
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t k = 0; k < y.size(); ++k) y[k] -= bv[k];
  const std::size_t pa = a.id, pb = b.id;
  return a.tape->push(std::move(y), {pa, pb}, [pa, pb](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    if (t.requires_grad(pa)) {
      Tensor& ga = t.grad_acc(pa);
      for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
    }
    if (t.requires_grad(pb)) {
      Tensor& gb = t.grad_acc(pb);
      for (std::size_t k = 0; k < g.size(); ++k) gb[k] -= g[k];
    }
  });
}

// Hadamard product.
inline Var mul(Var a, Var b) {
  detail::same_tape(a, b);
  detail::require_same_shape("mul", a.value(), b.value());
  Tensor y = a.value();
  const Tensor& bv = b.value();
  for (std::size_t k = 0; k < y.size(); ++k) y[k] *= bv[k];
  const std::size_t pa = a.id, pb = b.id;
  return a.tape->push(std::move(y), {pa, pb}, [pa, pb](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    if (t.requires_grad(pa)) {
      const Tensor& bv = t.value(pb);
      Tensor& ga = t.grad_acc(pa);
      for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * bv[k];
    }
    if (t.requires_grad(pb)) {
      const Tensor& av = t.value(pa);
      Tensor& gb = t.grad_acc(pb);
      for (std::size_t k = 0; k < g.size(); ++k) gb[k] += g[k] * av[k];
    }
  });
}

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }

// a (m x n) plus a 1 x n row added to every row. The only broadcast supported.
inline Var add_row(Var a, Var row) {
  detail::same_tape(a, row);
  const Tensor& rv = row.value();
  Tensor y = a.value();
  if (rv.rows() != 1 || rv.cols() != y.cols()) {
    throw DimensionError("add_row: bias " + rv.shape_string() + " does not fit " +
                         y.shape_string());
  }
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t c = 0; c < y.cols(); ++c) y(r, c) += rv[c];
  const std::size_t pa = a.id, pr = row.id;
  return a.tape->push(std::move(y), {pa, pr}, [pa, pr](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    if (t.requires_grad(pa)) {
      Tensor& ga = t.grad_acc(pa);
      for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
    }
    if (t.requires_grad(pr)) {
      Tensor& gr = t.grad_acc(pr);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gr[c] += g(r, c);
    }
  });
}

inline Var scale(Var a, double s) {
  return detail::unary(
      a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

inline Var add_scalar(Var a, double s) {
  return detail::unary(
      a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

inline Var neg(Var a) { return scale(a, -1.0); }

inline Var square(Var a) {
  return detail::unary(
      a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

inline Var tanh(Var a) {
  return detail::unary(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

inline Var sigmoid(Var a) {
  return detail::unary(
      a,
      [](double x) {
        return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
      },
      [](double, double y) { return y * (1.0 - y); });
}

inline Var exp(Var a) {
  return detail::unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

inline Var log(Var a) {
  return detail::unary(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

// Clamp to [lo, hi]; gradient is zero where the clamp is active.
inline Var clip(Var a, double lo, double hi) {
  return detail::unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x < lo || x > hi) ? 0.0 : 1.0; });
}

// Elementwise minimum; ties route the gradient to `a`.
inline Var minimum(Var a, Var b) {
  detail::same_tape(a, b);
  detail::require_same_shape("minimum", a.value(), b.value());
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor y(av.rows(), av.cols());
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = std::min(av[k], bv[k]);
  const std::size_t pa = a.id, pb = b.id;
  return a.tape->push(std::move(y), {pa, pb}, [pa, pb](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    const Tensor& av = t.value(pa);
    const Tensor& bv = t.value(pb);
    for (std::size_t k = 0; k < g.size(); ++k) {
      const std::size_t target = av[k] <= bv[k] ? pa : pb;
      if (t.requires_grad(target)) t.grad_acc(target)[k] += g[k];
    }
  });
}

// Value copy that blocks gradient flow.
inline Var detach(Var a) { return a.tape->constant(a.value()); }

// ---------------------------------------------------------------------------
// Reductions and reshaping

inline Var sum(Var a) {
  double s = 0.0;
  for (double x : a.value().data()) s += x;
  const std::size_t pa = a.id;
  return a.tape->push(Tensor::scalar(s), {pa}, [pa](Tape& t, std::size_t self) {
    const double g = t.grad_of(self)[0];
    Tensor& ga = t.grad_acc(pa);
    for (std::size_t k = 0; k < ga.size(); ++k) ga[k] += g;
  });
}

inline Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

// Column-wise mean over rows: m x n -> 1 x n.
inline Var mean_rows(Var a) {
  const Tensor& x = a.value();
  if (x.rows() == 0) throw DimensionError("mean_rows of an empty tensor");
  Tensor y(1, x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) y[c] += x(r, c);
  const double inv = 1.0 / static_cast<double>(x.rows());
  for (std::size_t c = 0; c < x.cols(); ++c) y[c] *= inv;
  const std::size_t pa = a.id;
  return a.tape->push(std::move(y), {pa}, [pa, inv](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    Tensor& ga = t.grad_acc(pa);
    for (std::size_t r = 0; r < ga.rows(); ++r)
      for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) += g[c] * inv;
  });
}

inline Var reshape(Var a, std::size_t rows, std::size_t cols) {
  const Tensor& x = a.value();
  if (rows * cols != x.size()) {
    throw DimensionError("reshape: cannot view " + x.shape_string() + " as " +
                         Tensor::shape_string(rows, cols));
  }
  Tensor y(rows, cols, x.values());
  const std::size_t pa = a.id;
  return a.tape->push(std::move(y), {pa}, [pa](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    Tensor& ga = t.grad_acc(pa);
    for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
  });
}

inline Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows of nothing");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  std::vector<std::size_t> ids;
  for (Var p : parts) {
    detail::same_tape(parts.front(), p);
    if (p.cols() != cols) {
      throw DimensionError("concat_rows: column mismatch " + parts.front().value().shape_string() +
                           " vs " + p.value().shape_string());
    }
    rows += p.rows();
    ids.push_back(p.id);
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  for (Var p : parts) data.insert(data.end(), p.value().values().begin(), p.value().values().end());
  Tape* tape = parts.front().tape;
  return tape->push(Tensor(rows, cols, std::move(data)), ids,
                    [ids](Tape& t, std::size_t self) {
                      const Tensor& g = t.grad_of(self);
                      std::size_t offset = 0;
                      for (std::size_t id : ids) {
                        const std::size_t n = t.value(id).size();
                        if (t.requires_grad(id)) {
                          Tensor& gp = t.grad_acc(id);
                          for (std::size_t k = 0; k < n; ++k) gp[k] += g[offset + k];
                        }
                        offset += n;
                      }
                    });
}

inline Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols of nothing");
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  std::vector<std::size_t> ids;
  for (Var p : parts) {
    detail::same_tape(parts.front(), p);
    if (p.rows() != rows) {
      throw DimensionError("concat_cols: row mismatch " + parts.front().value().shape_string() +
                           " vs " + p.value().shape_string());
    }
    cols += p.cols();
    ids.push_back(p.id);
  }
  Tensor y(rows, cols);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& v = p.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < v.cols(); ++c) y(r, offset + c) = v(r, c);
    offset += v.cols();
  }
  Tape* tape = parts.front().tape;
  return tape->push(std::move(y), ids, [ids](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    std::size_t offset = 0;
    for (std::size_t id : ids) {
      const std::size_t w = t.value(id).cols();
      if (t.requires_grad(id)) {
        Tensor& gp = t.grad_acc(id);
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < w; ++c) gp(r, c) += g(r, offset + c);
      }
      offset += w;
    }
  });
}

inline Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  const Tensor& x = a.value();
  if (begin + count > x.rows()) {
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside " + x.shape_string());
  }
  const std::size_t cols = x.cols();
  std::vector<double> data(x.values().begin() + begin * cols,
                           x.values().begin() + (begin + count) * cols);
  const std::size_t pa = a.id;
  return a.tape->push(Tensor(count, cols, std::move(data)), {pa},
                      [pa, begin, cols](Tape& t, std::size_t self) {
                        const Tensor& g = t.grad_of(self);
                        Tensor& ga = t.grad_acc(pa);
                        for (std::size_t k = 0; k < g.size(); ++k) ga[begin * cols + k] += g[k];
                      });
}

inline Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Tensor& x = a.value();
  if (begin + count > x.cols()) {
    throw DimensionError("slice_cols: cols [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") outside " + x.shape_string());
  }
  Tensor y(x.rows(), count);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) y(r, c) = x(r, begin + c);
  const std::size_t pa = a.id;
  return a.tape->push(std::move(y), {pa}, [pa, begin](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    Tensor& ga = t.grad_acc(pa);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) ga(r, begin + c) += g(r, c);
  });
}

// Gathers the listed columns (in the listed order).
inline Var select_cols(Var a, std::vector<std::size_t> columns) {
  const Tensor& x = a.value();
  for (std::size_t c : columns) {
    if (c >= x.cols()) {
      throw DimensionError("select_cols: column " + std::to_string(c) + " outside " +
                           x.shape_string());
    }
  }
  Tensor y(x.rows(), columns.size());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t k = 0; k < columns.size(); ++k) y(r, k) = x(r, columns[k]);
  const std::size_t pa = a.id;
  return a.tape->push(std::move(y), {pa},
                      [pa, columns = std::move(columns)](Tape& t, std::size_t self) {
                        const Tensor& g = t.grad_of(self);
                        Tensor& ga = t.grad_acc(pa);
                        for (std::size_t r = 0; r < g.rows(); ++r)
                          for (std::size_t k = 0; k < columns.size(); ++k)
                            ga(r, columns[k]) += g(r, k);
                      });
}

// Single entry as a 1 x 1 tensor.
inline Var pick(Var a, std::size_t row, std::size_t col) {
  const Tensor& x = a.value();
  if (row >= x.rows() || col >= x.cols()) {
    throw DimensionError("pick: (" + std::to_string(row) + ", " + std::to_string(col) +
                         ") outside " + x.shape_string());
  }
  const std::size_t pa = a.id;
  return a.tape->push(Tensor::scalar(x(row, col)), {pa},
                      [pa, row, col](Tape& t, std::size_t self) {
                        t.grad_acc(pa)(row, col) += t.grad_of(self)[0];
                      });
}

// One entry per row: out(r, 0) = a(r, columns[r]).
inline Var gather_rows(Var a, std::vector<std::size_t> columns) {
  const Tensor& x = a.value();
  if (columns.size() != x.rows()) {
    throw DimensionError("gather_rows: " + std::to_string(columns.size()) +
                         " indices for " + x.shape_string());
  }
  Tensor y(x.rows(), 1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    if (columns[r] >= x.cols()) {
      throw DimensionError("gather_rows: column " + std::to_string(columns[r]) +
                           " outside " + x.shape_string());
    }
    y[r] = x(r, columns[r]);
  }
  const std::size_t pa = a.id;
  return a.tape->push(std::move(y), {pa},
                      [pa, columns = std::move(columns)](Tape& t, std::size_t self) {
                        const Tensor& g = t.grad_of(self);
                        Tensor& ga = t.grad_acc(pa);
                        for (std::size_t r = 0; r < columns.size(); ++r)
                          ga(r, columns[r]) += g[r];
                      });
}

// ---------------------------------------------------------------------------
// Normalization

// Row-wise softmax with max subtraction.
inline Var softmax_rows(Var a) {
  const Tensor& x = a.value();
  Tensor y(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    auto out = y.row(r);
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : in) mx = std::max(mx, v);
    double z = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) z += (out[c] = std::exp(in[c] - mx));
    for (double& v : out) v /= z;
  }
  const std::size_t pa = a.id;
  return a.tape->push(std::move(y), {pa}, [pa](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    const Tensor& y = t.value(self);
    Tensor& ga = t.grad_acc(pa);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < g.cols(); ++c) dot += g(r, c) * y(r, c);
      for (std::size_t c = 0; c < g.cols(); ++c) ga(r, c) += y(r, c) * (g(r, c) - dot);
    }
  });
}

inline Var log_softmax_rows(Var a) {
  const Tensor& x = a.value();
  Tensor y(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    auto out = y.row(r);
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : in) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : in) z += std::exp(v - mx);
    const double lse = mx + std::log(z);
    for (std::size_t c = 0; c < in.size(); ++c) out[c] = in[c] - lse;
  }
  const std::size_t pa = a.id;
  return a.tape->push(std::move(y), {pa}, [pa](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    const Tensor& y = t.value(self);
    Tensor& ga = t.grad_acc(pa);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      double gs = 0.0;
      for (std::size_t c = 0; c < g.cols(); ++c) gs += g(r, c);
      for (std::size_t c = 0; c < g.cols(); ++c) ga(r, c) += g(r, c) - std::exp(y(r, c)) * gs;
    }
  });
}

// Per-row (x - mean) / sqrt(var + eps), then gain * . + bias with 1 x d
// gain and bias.
inline Var layer_norm(Var a, Var gain, Var bias, double eps) {
  if (!(eps > 0.0)) throw DomainError("layer_norm: eps must be positive");
  detail::same_tape(a, gain);
  detail::same_tape(a, bias);
  const Tensor& x = a.value();
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  const std::size_t m = x.rows(), d = x.cols();
  if (gv.rows() != 1 || gv.cols() != d || bv.rows() != 1 || bv.cols() != d) {
    throw DimensionError("layer_norm: gain " + gv.shape_string() + " / bias " +
                         bv.shape_string() + " do not fit " + x.shape_string());
  }
  Tensor normed(m, d);
  std::vector<double> inv_std(m);
  Tensor y(m, d);
  for (std::size_t r = 0; r < m; ++r) {
    double mu = 0.0;
    for (double v : x.row(r)) mu += v;
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (double v : x.row(r)) var += (v - mu) * (v - mu);
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < d; ++c) {
      normed(r, c) = (x(r, c) - mu) * inv_std[r];
      y(r, c) = normed(r, c) * gv[c] + bv[c];
    }
  }
  const std::size_t pa = a.id, pg = gain.id, pb = bias.id;
  return a.tape->push(
      std::move(y), {pa, pg, pb},
      [pa, pg, pb, normed = std::move(normed), inv_std = std::move(inv_std)](
          Tape& t, std::size_t self) {
        const Tensor& g = t.grad_of(self);
        const std::size_t m = g.rows(), d = g.cols();
        if (t.requires_grad(pg)) {
          Tensor& gg = t.grad_acc(pg);
          for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < d; ++c) gg[c] += g(r, c) * normed(r, c);
        }
        if (t.requires_grad(pb)) {
          Tensor& gb = t.grad_acc(pb);
          for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < d; ++c) gb[c] += g(r, c);
        }
        if (t.requires_grad(pa)) {
          const Tensor& gain = t.value(pg);
          Tensor& ga = t.grad_acc(pa);
          std::vector<double> gn(d);
          for (std::size_t r = 0; r < m; ++r) {
            double mean_gn = 0.0, mean_gn_n = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
              gn[c] = g(r, c) * gain[c];
              mean_gn += gn[c];
              mean_gn_n += gn[c] * normed(r, c);
            }
            mean_gn /= static_cast<double>(d);
            mean_gn_n /= static_cast<double>(d);
            for (std::size_t c = 0; c < d; ++c) {
              ga(r, c) += inv_std[r] * (gn[c] - mean_gn - normed(r, c) * mean_gn_n);
            }
          }
        }
      });
}

}  // namespace atrl::grad

#endif  // ATRL_GRAD_TAPE_HPP_
