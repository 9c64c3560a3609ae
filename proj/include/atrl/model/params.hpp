#ifndef ATRL_MODEL_PARAMS_HPP_
#define ATRL_MODEL_PARAMS_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "atrl/grad/tensor.hpp"
#include "atrl/scenario/scenario.hpp"
#include "atrl/util/errors.hpp"
#include "atrl/util/rng.hpp"

namespace atrl::model {

using grad::Tensor;

// Attribute order used everywhere: humans, robots, tasks.
enum Attribute : std::size_t { kHumans = 0, kRobots = 1, kTasks = 2 };
inline constexpr std::size_t kNumAttributes = 3;
inline constexpr std::array<const char*, kNumAttributes> kAttributeTags = {"H", "R", "T"};

inline constexpr std::array<std::size_t, kNumAttributes> kRawFeatures = {
    RawContext::kHumanFeatures, RawContext::kRobotFeatures, RawContext::kTaskFeatures};

struct ModelDims {
  std::size_t d = 32;              // embedding width
  std::size_t heads = 2;           // attention heads; must divide d
  std::size_t policy_hidden = 64;  // GRU width of the policy network
  std::size_t depth = 1;           // stacked cross-attribute attention layers
  std::size_t humans = 3;
  std::size_t robots = 4;
  std::size_t tasks = 40;
  bool ablate = false;  // drop attention/enhancement, pool embeddings directly

  std::size_t head_dim() const { return d / heads; }

  void validate() const {
    if (d == 0 || heads == 0 || d % heads != 0) {
      throw DimensionError("model: heads (" + std::to_string(heads) +
                           ") must divide d (" + std::to_string(d) + ")");
    }
    if (policy_hidden == 0 || depth == 0) throw DimensionError("model: zero-sized layer");
    if (humans == 0 || robots == 0 || tasks == 0) {
      throw DimensionError("model: team and task counts must be positive");
    }
  }

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

struct EmbedIndex {
  std::size_t tr_w, tr_b, rnn_wx, rnn_wh, rnn_b;
};

struct AttentionIndex {
  std::vector<std::size_t> wq, wk, wv;  // one per head
  std::size_t wo, ffn_w1, ffn_b1, ffn_w2, ffn_b2, ln_gain, ln_bias;
};

struct GruIndex {
  std::size_t w_z, u_z, b_z, w_r, u_r, b_r, w_n, u_n, b_n;
};

// Positions of every parameter tensor within ModelParams::values.
struct ModelLayout {
  std::array<EmbedIndex, kNumAttributes> embed{};
  std::vector<std::array<AttentionIndex, kNumAttributes>> attention;  // per layer
  GruIndex gru{};
  std::size_t value_w = 0, value_b = 0;
  std::size_t centroid_w = 0, centroid_b = 0;
  std::size_t assign_w = 0, assign_b = 0;
};

// All trainable weights: embeddings, attention, enhancement, policy and value.
struct ModelParams {
  ModelDims dims;
  ModelLayout layout;
  std::vector<std::string> names;
  std::vector<Tensor> values;

  std::size_t count() const {
    std::size_t c = 0;
    for (const Tensor& t : values) c += t.size();
    return c;
  }
};

enum class InitKind { kWeight, kOnes, kZeros };

struct ParamShape {
  std::string name;
  std::size_t rows, cols;
  std::size_t fan_in;
  InitKind init;
};

// Registers every parameter in a fixed order and fills in the layout.
inline std::vector<ParamShape> build_layout(const ModelDims& m, ModelLayout& layout) {
  m.validate();
  std::vector<ParamShape> shapes;
  auto add = [&](std::string name, std::size_t r, std::size_t c, std::size_t fan_in,
                 InitKind init = InitKind::kWeight) {
    shapes.push_back({std::move(name), r, c, fan_in, init});
    return shapes.size() - 1;
  };
  const std::size_t d = m.d, dh = m.head_dim(), dp = m.policy_hidden;

  for (std::size_t a = 0; a < kNumAttributes; ++a) {
    const std::string p = std::string("embed.") + kAttributeTags[a] + ".";
    const std::size_t in = kRawFeatures[a];
    EmbedIndex& e = layout.embed[a];
    e.tr_w = add(p + "tr_w", in, d, in);
    e.tr_b = add(p + "tr_b", 1, d, in);
    e.rnn_wx = add(p + "rnn_wx", d, d, d);
    e.rnn_wh = add(p + "rnn_wh", d, d, d);
    e.rnn_b = add(p + "rnn_b", 1, d, d);
  }

  layout.attention.clear();
  if (!m.ablate) {
    for (std::size_t l = 0; l < m.depth; ++l) {
      std::array<AttentionIndex, kNumAttributes> layer;
      for (std::size_t a = 0; a < kNumAttributes; ++a) {
        const std::string p =
            "attn" + std::to_string(l) + "." + kAttributeTags[a] + ".";
        AttentionIndex& ai = layer[a];
        for (std::size_t h = 0; h < m.heads; ++h) {
          const std::string hs = std::to_string(h);
          ai.wq.push_back(add(p + "wq" + hs, d, dh, d));
          ai.wk.push_back(add(p + "wk" + hs, d, dh, d));
          ai.wv.push_back(add(p + "wv" + hs, d, dh, d));
        }
        ai.wo = add(p + "wo", d, d, d);
        ai.ffn_w1 = add(p + "ffn_w1", d, 4 * d, d);
        ai.ffn_b1 = add(p + "ffn_b1", 1, 4 * d, d);
        ai.ffn_w2 = add(p + "ffn_w2", 4 * d, d, 4 * d);
        ai.ffn_b2 = add(p + "ffn_b2", 1, d, 4 * d);
        ai.ln_gain = add(p + "ln_gain", 1, d, d, InitKind::kOnes);
        ai.ln_bias = add(p + "ln_bias", 1, d, d, InitKind::kZeros);
      }
      layout.attention.push_back(layer);
    }
  }

  GruIndex& g = layout.gru;
  g.w_z = add("policy.gru.w_z", d, dp, d);
  g.u_z = add("policy.gru.u_z", dp, dp, dp);
  g.b_z = add("policy.gru.b_z", 1, dp, dp);
  g.w_r = add("policy.gru.w_r", d, dp, d);
  g.u_r = add("policy.gru.u_r", dp, dp, dp);
  g.b_r = add("policy.gru.b_r", 1, dp, dp);
  g.w_n = add("policy.gru.w_n", d, dp, d);
  g.u_n = add("policy.gru.u_n", dp, dp, dp);
  g.b_n = add("policy.gru.b_n", 1, dp, dp);

  layout.value_w = add("value.w", dp, 1, dp);
  layout.value_b = add("value.b", 1, 1, dp);
  layout.centroid_w = add("head.centroid.w", dp, m.robots * m.robots, dp);
  layout.centroid_b = add("head.centroid.b", 1, m.robots * m.robots, dp);
  layout.assign_w = add("head.assign.w", dp, m.tasks * m.humans, dp);
  layout.assign_b = add("head.assign.b", 1, m.tasks * m.humans, dp);
  return shapes;
}

// Fan-in scaled uniform initialization, U(-1/sqrt(fan_in), 1/sqrt(fan_in));
// layer-norm gain 1 and bias 0.
inline ModelParams init_params(const ModelDims& dims, std::uint64_t seed) {
  ModelParams p;
  p.dims = dims;
  const auto shapes = build_layout(dims, p.layout);
  Rng rng = make_rng(seed, Stream::kInit, 0);
  for (const ParamShape& s : shapes) {
    Tensor t(s.rows, s.cols);
    switch (s.init) {
      case InitKind::kOnes: t.fill(1.0); break;
      case InitKind::kZeros: break;
      case InitKind::kWeight: {
        const double bound = 1.0 / std::sqrt(static_cast<double>(s.fan_in));
        for (double& x : t.data()) x = bound * (2.0 * uniform01(rng) - 1.0);
        break;
      }
    }
    p.names.push_back(s.name);
    p.values.push_back(std::move(t));
  }
  return p;
}

// Same parameter set with zero-filled tensors; useful as a gradient buffer.
inline std::vector<Tensor> zeros_like(const ModelParams& p) {
  std::vector<Tensor> z;
  for (const Tensor& t : p.values) z.emplace_back(t.rows(), t.cols());
  return z;
}

inline ModelDims dims_for(const ScenarioSpec& spec, ModelDims base) {
  base.humans = spec.humans;
  base.robots = spec.robots;
  base.tasks = spec.tasks();
  return base;
}

}  // namespace atrl::model

#endif  // ATRL_MODEL_PARAMS_HPP_
