#ifndef ATRL_PPO_PPO_HPP_
#define ATRL_PPO_PPO_HPP_

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "atrl/grad/adam.hpp"
#include "atrl/model/network.hpp"
#include "atrl/model/policy.hpp"
#include "atrl/scenario/scenario.hpp"
#include "atrl/sim/simulator.hpp"
#include "atrl/util/rng.hpp"

namespace atrl::ppo {

using grad::Tensor;
using grad::Var;
using model::ModelParams;

struct PpoConfig {
  double clip = 0.2;
  double w_policy = 2.0;
  double w_value = 1.0;
  double w_entropy = 0.1;
  double lr = 2e-4;
  std::size_t actors = 10;             // parallel behaviour actors
  std::size_t rollout_per_actor = 8;   // episodes per actor per collection wave
  std::size_t episodes = 10000;        // total training budget
  std::size_t epochs = 4;              // passes over each wave
  std::size_t minibatch = 64;
  std::size_t curve_window = 100;      // episodes averaged per learning-curve point
  std::size_t checkpoint_every = 0;    // episodes; 0 disables
  sim::RewardMode reward_mode = sim::RewardMode::kExpected;
  model::ReprGradient repr_gradient = model::ReprGradient::kJoint;

  std::size_t wave_size() const { return actors * rollout_per_actor; }

  void validate() const {
    if (!(clip > 0.0)) throw std::invalid_argument("ppo.clip must be > 0");
    if (w_policy < 0 || w_value < 0 || w_entropy < 0) {
      throw std::invalid_argument("ppo loss weights must be >= 0");
    }
    if (!(lr > 0.0)) throw std::invalid_argument("ppo.lr must be > 0");
    if (actors == 0) throw std::invalid_argument("ppo.actors must be >= 1");
    if (rollout_per_actor == 0 || epochs == 0 || minibatch == 0 || curve_window == 0) {
      throw std::invalid_argument("ppo batch sizes must be >= 1");
    }
  }
};

// One single-decision episode.
struct Transition {
  std::size_t episode = 0;
  RawContext context;
  AllocationAction action;
  double log_prob = 0.0;  // behaviour policy, frozen at collection
  double reward = 0.0;
  double value = 0.0;
  double advantage = 0.0;
};

struct RolloutBatch {
  std::vector<Transition> items;
  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
};

struct LearningCurvePoint {
  std::size_t episode = 0;  // episodes completed
  double mean_return = 0.0;
  double wall_clock_s = 0.0;
};

struct Environment {
  ScenarioSpec scenario;
  sim::SimOptions sim;  // reward mode is taken from PpoConfig
};

// Runs one episode with the episode's own random stream: sample a context,
// act with the current policy, simulate.
inline Transition run_episode(const Environment& env, const ModelParams& params,
                              sim::RewardMode mode, std::uint64_t seed, std::size_t episode) {
  Rng rng = make_rng(seed, Stream::kEpisode, episode);
  const ScenarioContext ctx = sample_scenario(env.scenario, rng());
  Transition t;
  t.episode = episode;
  t.context = encode_context(ctx);
  const model::Evaluation ev = model::evaluate(params, t.context);
  const model::SampledAction s = model::sample_action(ev.centroid_logits, ev.assign_logits, rng);
  t.action = s.action;
  t.log_prob = s.log_prob;
  t.value = ev.value;
  sim::SimOptions opts = env.sim;
  opts.mode = mode;
  t.reward = sim::simulate(ctx, t.action, opts, rng).score;
  return t;
}

// Collects episodes [first, first + count) across cfg.actors worker threads.
// Every episode derives its stream from (seed, episode index), so the batch
// does not depend on scheduling.
inline RolloutBatch collect_rollouts(const Environment& env, const ModelParams& params,
                                     const PpoConfig& cfg, std::uint64_t seed,
                                     std::size_t first, std::size_t count) {
  RolloutBatch batch;
  batch.items.resize(count);
  const std::size_t workers = std::min(cfg.actors, count);
  auto work = [&](std::size_t w) {
    for (std::size_t k = w; k < count; k += workers) {
      batch.items[k] = run_episode(env, params, cfg.reward_mode, seed, first + k);
    }
  };
  if (workers <= 1) {
    if (count > 0) work(0);
    return batch;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        work(w);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return batch;
}

// Single-step advantages R - V, standardized across the batch.
inline void compute_advantages(RolloutBatch& batch, bool normalize = true) {
  if (batch.empty()) throw std::invalid_argument("advantages: empty batch");
  for (Transition& t : batch.items) t.advantage = t.reward - t.value;
  if (!normalize) return;
  const double n = static_cast<double>(batch.size());
  double mean = 0.0;
  for (const Transition& t : batch.items) mean += t.advantage;
  mean /= n;
  double var = 0.0;
  for (const Transition& t : batch.items) var += (t.advantage - mean) * (t.advantage - mean);
  const double sd = std::sqrt(var / n);
  for (Transition& t : batch.items) {
    t.advantage -= mean;
    if (sd > 1e-12) t.advantage /= sd;
  }
}

struct LossBreakdown {
  double total = 0.0;      // quantity minimized
  double surrogate = 0.0;  // mean clipped surrogate
  double value_loss = 0.0;
  double entropy = 0.0;
  std::vector<double> ratios;
};

// Builds -(w_p * min(r A, clip(r) A) - w_v * (V - R)^2 + w_e * H) for one
// transition on `tape`. Also returns the ratio node for inspection.
struct SampleLoss {
  Var loss;
  Var ratio;
  Var surrogate;
  Var value_loss;
  Var entropy;
};

inline SampleLoss sample_loss(grad::Tape& tape, const ModelParams& params,
                              std::span<const Var> vars, const Transition& t,
                              const PpoConfig& cfg) {
  model::ForwardOptions fo;
  fo.repr_gradient = cfg.repr_gradient;
  const model::ForwardOutput out = model::forward(tape, params, vars, t.context, fo);
  const model::ActionTerms terms = model::action_terms(out.centroid_logits, out.assign_logits,
                                                       t.action);
  SampleLoss s;
  s.ratio = grad::exp(grad::add_scalar(terms.log_prob, -t.log_prob));
  Var unclipped = grad::scale(s.ratio, t.advantage);
  Var clipped = grad::scale(grad::clip(s.ratio, 1.0 - cfg.clip, 1.0 + cfg.clip), t.advantage);
  s.surrogate = grad::minimum(unclipped, clipped);
  s.value_loss = grad::square(grad::add_scalar(out.value, -t.reward));
  s.entropy = terms.entropy;
  Var objective = grad::scale(s.surrogate, cfg.w_policy) - grad::scale(s.value_loss, cfg.w_value) +
                  grad::scale(s.entropy, cfg.w_entropy);
  s.loss = grad::neg(objective);
  return s;
}

// Mean loss over the selected transitions; fills `grads` (same layout as the
// parameters) when given.
inline LossBreakdown ppo_loss(const RolloutBatch& batch, std::span<const std::size_t> indices,
                              const ModelParams& params, const PpoConfig& cfg,
                              std::vector<Tensor>* grads = nullptr) {
  if (indices.empty()) throw std::invalid_argument("ppo_loss: empty minibatch");
  grad::Tape tape;
  const auto vars = model::bind_params(tape, params, grads != nullptr);
  std::vector<Var> losses;
  LossBreakdown lb;
  const double inv = 1.0 / static_cast<double>(indices.size());
  for (std::size_t k : indices) {
    SampleLoss s = sample_loss(tape, params, vars, batch.items[k], cfg);
    losses.push_back(s.loss);
    lb.surrogate += s.surrogate.value().item() * inv;
    lb.value_loss += s.value_loss.value().item() * inv;
    lb.entropy += s.entropy.value().item() * inv;
    lb.ratios.push_back(s.ratio.value().item());
  }
  Var total = grad::scale(grad::sum(grad::concat_rows(losses)), inv);
  lb.total = total.value().item();
  if (grads) {
    tape.backward(total);
    grads->clear();
    for (Var v : vars) grads->push_back(tape.grad(v));
  }
  return lb;
}

inline LossBreakdown ppo_loss(const RolloutBatch& batch, const ModelParams& params,
                              const PpoConfig& cfg, std::vector<Tensor>* grads = nullptr) {
  std::vector<std::size_t> all(batch.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return ppo_loss(batch, all, params, cfg, grads);
}

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainState {
  ModelParams params;
  grad::OptimState optim;
  std::size_t episodes_done = 0;
  std::vector<LearningCurvePoint> curve;
  std::vector<double> recent_returns;  // trailing window for the curve
};

struct TrainHooks {
  std::function<void(const TrainState&)> on_checkpoint;
  std::function<void(const LearningCurvePoint&)> on_progress;
};

inline TrainState initial_state(const model::ModelDims& dims, const PpoConfig& cfg,
                                std::uint64_t seed) {
  TrainState st;
  st.params = model::init_params(dims, seed);
  st.optim = grad::make_optim_state(st.params.values, grad::AdamConfig{cfg.lr});
  return st;
}

namespace detail {

inline std::string dump_minibatch(const RolloutBatch& batch, std::span<const std::size_t> idx,
                                  const LossBreakdown& lb) {
  std::ostringstream os;
  os << "non-finite PPO loss (total=" << lb.total << ", surrogate=" << lb.surrogate
     << ", value=" << lb.value_loss << ", entropy=" << lb.entropy << ")\n";
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const Transition& t = batch.items[idx[k]];
    os << "  episode " << t.episode << " reward=" << t.reward << " value=" << t.value
       << " adv=" << t.advantage << " behaviour_logp=" << t.log_prob
       << " ratio=" << (k < lb.ratios.size() ? lb.ratios[k] : NAN) << '\n';
  }
  return os.str();
}

inline bool all_finite(const std::vector<Tensor>& ts) {
  for (const Tensor& t : ts)
    for (double x : t.data())
      if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace detail

// One optimization pass over a collected wave: cfg.epochs shuffled sweeps of
// minibatch updates.
inline void update_on_batch(TrainState& st, const RolloutBatch& batch, const PpoConfig& cfg,
                            std::uint64_t seed) {
  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(seed, Stream::kShuffle, st.episodes_done);
  std::vector<Tensor> grads;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[uniform_index(rng, k)]);
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.minibatch) {
      const std::size_t end = std::min(order.size(), begin + cfg.minibatch);
      std::span<const std::size_t> idx(order.data() + begin, end - begin);
      const LossBreakdown lb = ppo_loss(batch, idx, st.params, cfg, &grads);
      if (!std::isfinite(lb.total) || !detail::all_finite(grads)) {
        throw TrainingError(detail::dump_minibatch(batch, idx, lb));
      }
      grad::adam_step(st.params.values, grads, st.optim);
    }
  }
}

// PPO over single-decision episodes until cfg.episodes have been collected.
// Pass a previous state to resume; its curve and episode count continue.
inline TrainState train(const Environment& env, const model::ModelDims& dims,
                        const PpoConfig& cfg, std::uint64_t seed,
                        std::optional<TrainState> resume = std::nullopt,
                        const TrainHooks& hooks = {}) {
  cfg.validate();
  TrainState st = resume ? std::move(*resume) : initial_state(dims, cfg, seed);
  st.optim.config.lr = cfg.lr;
  const auto t0 = std::chrono::steady_clock::now();
  const double wall_offset = st.curve.empty() ? 0.0 : st.curve.back().wall_clock_s;
  std::size_t next_checkpoint =
      cfg.checkpoint_every == 0
          ? SIZE_MAX
          : (st.episodes_done / cfg.checkpoint_every + 1) * cfg.checkpoint_every;

  while (st.episodes_done < cfg.episodes) {
    const std::size_t count = std::min(cfg.wave_size(), cfg.episodes - st.episodes_done);
    RolloutBatch batch = collect_rollouts(env, st.params, cfg, seed, st.episodes_done, count);
    compute_advantages(batch);
    update_on_batch(st, batch, cfg, seed);
    st.episodes_done += count;

    for (const Transition& t : batch.items) st.recent_returns.push_back(t.reward);
    if (st.recent_returns.size() > cfg.curve_window) {
      st.recent_returns.erase(st.recent_returns.begin(),
                              st.recent_returns.end() - static_cast<std::ptrdiff_t>(cfg.curve_window));
    }
    LearningCurvePoint pt;
    pt.episode = st.episodes_done;
    pt.mean_return = std::accumulate(st.recent_returns.begin(), st.recent_returns.end(), 0.0) /
                     static_cast<double>(st.recent_returns.size());
    pt.wall_clock_s =
        wall_offset +
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    st.curve.push_back(pt);
    if (hooks.on_progress) hooks.on_progress(pt);
    if (st.episodes_done >= next_checkpoint) {
      if (hooks.on_checkpoint) hooks.on_checkpoint(st);
      next_checkpoint =
          (st.episodes_done / cfg.checkpoint_every + 1) * cfg.checkpoint_every;
    }
  }
  return st;
}

}  // namespace atrl::ppo

#endif  // ATRL_PPO_PPO_HPP_
