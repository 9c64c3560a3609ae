#ifndef ATRL_MODEL_NETWORK_HPP_
#define ATRL_MODEL_NETWORK_HPP_

#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "atrl/grad/cells.hpp"
#include "atrl/grad/tape.hpp"
#include "atrl/model/params.hpp"
#include "atrl/scenario/scenario.hpp"

namespace atrl::model {

using grad::Tape;
using grad::Var;

inline constexpr double kLayerNormEps = 1e-5;

// How the shared representation is trained. kValueOnly routes the policy
// heads through a detached copy of the pooled state.
enum class ReprGradient { kJoint, kValueOnly };

// Captured attention matrices, indexed [layer][attribute][head]; each is
// (rows of the attribute) x (i + j + n).
using AttentionMaps = std::vector<std::array<std::vector<Tensor>, kNumAttributes>>;

struct ForwardOptions {
  ReprGradient repr_gradient = ReprGradient::kJoint;
  AttentionMaps* capture = nullptr;
};

struct ForwardOutput {
  Var centroid_logits;  // j x j: row r scores centroids for robot r
  Var assign_logits;    // n x i: row p scores humans for POI p
  Var value;            // 1 x 1
  Var state;            // Z^C, 3 x d
};

// Places every parameter on the tape; trainable ones become gradient leaves.
inline std::vector<Var> bind_params(Tape& tape, const ModelParams& p, bool trainable) {
  std::vector<Var> vars;
  vars.reserve(p.values.size());
  for (const Tensor& t : p.values) vars.push_back(trainable ? tape.variable(t) : tape.constant(t));
  return vars;
}

// tanh(linear) per row, then an RNN over the rows from a zero state. Row l of
// the result is the hidden state after consuming row l.
inline Var recurrent_embed(Tape& tape, const Tensor& raw, const EmbedIndex& e,
                           std::span<const Var> p) {
  if (raw.rows() == 0) throw DimensionError("recurrent_embed: empty attribute sequence");
  if (raw.cols() != p[e.tr_w].rows()) {
    throw DimensionError("recurrent_embed: raw features " + raw.shape_string() +
                         " do not match transform " + p[e.tr_w].value().shape_string());
  }
  const grad::RnnWeights w{p[e.rnn_wx], p[e.rnn_wh], p[e.rnn_b]};
  Var transformed = grad::tanh(grad::linear(tape.constant(raw), p[e.tr_w], p[e.tr_b]));
  Var projected = grad::matmul(transformed, w.w_x);
  Var h = tape.constant(Tensor(1, p[e.rnn_wh].rows()));
  std::vector<Var> states;
  states.reserve(raw.rows());
  for (std::size_t l = 0; l < raw.rows(); ++l) {
    h = grad::rnn_cell_projected(grad::slice_rows(projected, l, 1), h, w);
    states.push_back(h);
  }
  return grad::concat_rows(states);
}

// Multi-head attention with queries from one attribute sequence and keys and
// values from the joint representation; heads are concatenated and mixed by wo.
inline Var cross_attribute_attention(Var x, Var joint, const AttentionIndex& ai,
                                     std::span<const Var> p,
                                     std::vector<Tensor>* capture = nullptr) {
  const std::size_t heads = ai.wq.size();
  if (heads == 0 || x.cols() % heads != 0) {
    throw DimensionError("cross_attribute_attention: head count must divide d");
  }
  const double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(p[ai.wk[0]].cols()));
  std::vector<Var> outs;
  for (std::size_t h = 0; h < heads; ++h) {
    Var q = grad::matmul(x, p[ai.wq[h]]);
    Var k = grad::matmul(joint, p[ai.wk[h]]);
    Var v = grad::matmul(joint, p[ai.wv[h]]);
    Var attn = grad::softmax_rows(grad::scale(grad::matmul(q, grad::transpose(k)), inv_sqrt_k));
    if (capture) capture->push_back(attn.value());
    outs.push_back(grad::matmul(attn, v));
  }
  return grad::matmul(heads == 1 ? outs.front() : grad::concat_cols(outs), p[ai.wo]);
}

// LN(FFN(x_hat) + x) with a tanh hidden layer of width 4d.
inline Var enhance(Var x_hat, Var x, const AttentionIndex& ai, std::span<const Var> p) {
  Var hidden = grad::tanh(grad::linear(x_hat, p[ai.ffn_w1], p[ai.ffn_b1]));
  Var ffn = grad::linear(hidden, p[ai.ffn_w2], p[ai.ffn_b2]);
  return grad::layer_norm(ffn + x, p[ai.ln_gain], p[ai.ln_bias], kLayerNormEps);
}

// Mean over rows of each attribute sequence, stacked to 3 x d.
inline Var pool_state(Var humans, Var robots, Var tasks) {
  return grad::concat_rows({grad::mean_rows(humans), grad::mean_rows(robots),
                            grad::mean_rows(tasks)});
}

struct PolicyOutput {
  Var centroid_logits;
  Var assign_logits;
  Var value;
};

inline Var policy_hidden(Tape& tape, Var state, const GruIndex& g, std::span<const Var> p) {
  const grad::GruWeights w{p[g.w_z], p[g.u_z], p[g.b_z], p[g.w_r], p[g.u_r],
                           p[g.b_r], p[g.w_n], p[g.u_n], p[g.b_n]};
  Var h = tape.constant(Tensor(1, p[g.u_z].rows()));
  for (std::size_t row = 0; row < state.rows(); ++row) {
    h = grad::gru_cell(grad::slice_rows(state, row, 1), h, w);
  }
  return h;
}

// GRU over the pooled rows; its final state feeds the value and action heads.
inline PolicyOutput policy_forward(Tape& tape, Var state, const ModelParams& m,
                                   std::span<const Var> p,
                                   ReprGradient mode = ReprGradient::kJoint) {
  const ModelLayout& L = m.layout;
  Var h_value = policy_hidden(tape, state, L.gru, p);
  Var h_policy = mode == ReprGradient::kJoint
                     ? h_value
                     : policy_hidden(tape, grad::detach(state), L.gru, p);
  PolicyOutput out;
  out.value = grad::linear(h_value, p[L.value_w], p[L.value_b]);
  out.centroid_logits = grad::reshape(grad::linear(h_policy, p[L.centroid_w], p[L.centroid_b]),
                                      m.dims.robots, m.dims.robots);
  out.assign_logits = grad::reshape(grad::linear(h_policy, p[L.assign_w], p[L.assign_b]),
                                    m.dims.tasks, m.dims.humans);
  return out;
}

inline void check_context_dims(const ModelDims& d, const RawContext& raw) {
  if (raw.humans.rows() != d.humans || raw.robots.rows() != d.robots ||
      raw.tasks.rows() != d.tasks) {
    throw DimensionError("model built for (" + std::to_string(d.humans) + " humans, " +
                         std::to_string(d.robots) + " robots, " + std::to_string(d.tasks) +
                         " tasks) given context with (" + std::to_string(raw.humans.rows()) +
                         ", " + std::to_string(raw.robots.rows()) + ", " +
                         std::to_string(raw.tasks.rows()) + ")");
  }
}

// Full network: recurrent embeddings, cross-attribute attention layers with
// enhancement (skipped when ablated), mean pooling, GRU policy/value head.
inline ForwardOutput forward(Tape& tape, const ModelParams& m, std::span<const Var> p,
                             const RawContext& raw, const ForwardOptions& opts = {}) {
  check_context_dims(m.dims, raw);
  const ModelLayout& L = m.layout;
  std::array<Var, kNumAttributes> seq = {
      recurrent_embed(tape, raw.humans, L.embed[kHumans], p),
      recurrent_embed(tape, raw.robots, L.embed[kRobots], p),
      recurrent_embed(tape, raw.tasks, L.embed[kTasks], p)};

  for (const auto& layer : L.attention) {
    Var joint = grad::concat_rows({seq[0], seq[1], seq[2]});
    std::array<std::vector<Tensor>, kNumAttributes> maps;
    std::array<Var, kNumAttributes> next;
    for (std::size_t a = 0; a < kNumAttributes; ++a) {
      Var x_hat = cross_attribute_attention(seq[a], joint, layer[a], p,
                                            opts.capture ? &maps[a] : nullptr);
      next[a] = enhance(x_hat, seq[a], layer[a], p);
    }
    if (opts.capture) opts.capture->push_back(std::move(maps));
    seq = next;
  }

  ForwardOutput out;
  out.state = pool_state(seq[0], seq[1], seq[2]);
  PolicyOutput po = policy_forward(tape, out.state, m, p, opts.repr_gradient);
  out.centroid_logits = po.centroid_logits;
  out.assign_logits = po.assign_logits;
  out.value = po.value;
  return out;
}

// Numeric outputs of a forward pass with no gradients recorded.
struct Evaluation {
  Tensor centroid_logits;
  Tensor assign_logits;
  double value = 0.0;
};

inline Evaluation evaluate(const ModelParams& m, const RawContext& raw,
                           AttentionMaps* capture = nullptr) {
  Tape tape;
  auto p = bind_params(tape, m, false);
  ForwardOptions opts;
  opts.capture = capture;
  ForwardOutput out = forward(tape, m, p, raw, opts);
  return {out.centroid_logits.value(), out.assign_logits.value(), out.value.value().item()};
}

}  // namespace atrl::model

#endif  // ATRL_MODEL_NETWORK_HPP_
