// atrl: scenario generation, training, evaluation and export.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "atrl/bench/evaluate.hpp"
#include "atrl/cli/checkpoint.hpp"
#include "atrl/cli/config.hpp"
#include "atrl/model/attention_export.hpp"
#include "atrl/ppo/ppo.hpp"
#include "atrl/scenario/io.hpp"

namespace fs = std::filesystem;
using namespace atrl;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

// Thrown for bad flag combinations discovered after parsing.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

cli::RunConfig load_config(const std::string& path) {
  if (path.empty()) return cli::RunConfig{};
  std::ifstream is(path);
  if (!is) throw UsageError("cannot read config file " + path);
  return cli::parse_config(is);
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

void write_config_echo(const fs::path& p, const cli::RunConfig& c) {
  auto os = open_out(p);
  cli::write_config(os, c);
}

std::vector<ScenarioContext> load_or_generate(const std::string& fixture,
                                              const cli::RunConfig& c) {
  if (!fixture.empty()) {
    std::ifstream is(fixture);
    if (!is) throw UsageError("cannot read scenario file " + fixture);
    return read_scenarios(is);
  }
  return sample_scenarios(c.scenario, c.eval_seed, c.scenarios);
}

int cmd_gen(const cli::RunConfig& c, std::optional<std::size_t> count, const std::string& out) {
  const auto all = sample_scenarios(c.scenario, c.seed, count.value_or(c.scenarios));
  auto os = open_out(out);
  write_scenarios(os, all);
  std::cerr << "wrote " << all.size() << " scenarios to " << out << '\n';
  return 0;
}

int cmd_train(cli::RunConfig c, bool ablate, const std::string& resume, const std::string& tag) {
  if (ablate) c.model.ablate = true;
  const std::string name = tag.empty() ? (c.model.ablate ? "rl" : "atrl") : tag;
  const fs::path dir = c.output_dir;
  const fs::path ckpt_path = dir / (name + "_checkpoint.txt");

  std::optional<ppo::TrainState> start;
  if (!resume.empty()) {
    cli::Checkpoint prev = cli::load_checkpoint_file(resume);
    if (!(prev.state.params.dims == c.dims())) {
      throw UsageError("--resume checkpoint dims do not match the config");
    }
    if (!prev.has_optimizer) throw UsageError("--resume needs a checkpoint with optimizer state");
    start = std::move(prev.state);
  }
  ppo::Environment env{c.scenario, c.sim()};
  std::vector<std::pair<std::size_t, double>> timing;
  ppo::TrainHooks hooks;
  hooks.on_progress = [&](const ppo::LearningCurvePoint& pt) {
    timing.emplace_back(pt.episode, pt.wall_clock_s);
    std::cerr << "episode " << pt.episode << " mean_return " << pt.mean_return << '\n';
  };
  hooks.on_checkpoint = [&](const ppo::TrainState& st) {
    cli::save_checkpoint_file(ckpt_path.string(), cli::Checkpoint{c, st, true});
  };
  ppo::TrainState st = ppo::train(env, c.dims(), c.ppo, c.seed, std::move(start), hooks);

  cli::save_checkpoint_file(ckpt_path.string(), cli::Checkpoint{c, st, true});
  {
    auto os = open_out(dir / (name + "_curve.csv"));
    os << "episode,mean_return\n";
    for (const auto& pt : st.curve) os << pt.episode << ',' << format_double(pt.mean_return) << '\n';
  }
  {
    // wall-clock times vary run to run, so they live apart from the curve
    auto os = open_out(dir / (name + "_timing.csv"));
    os << "episode,wall_clock_s\n";
    for (const auto& [e, s] : timing) os << e << ',' << format_double(s) << '\n';
  }
  write_config_echo(dir / (name + "_config.ini"), c);
  std::cerr << "checkpoint " << ckpt_path.string() << '\n';
  return 0;
}

cli::Checkpoint load_for_eval(const std::string& path, const ScenarioSpec& spec,
                              const std::string& flag) {
  if (path.empty()) throw UsageError(flag + " is required for this method");
  cli::Checkpoint ck = cli::load_checkpoint_file(path);
  cli::require_dims_match(ck.state.params.dims, spec);
  return ck;
}

int cmd_eval(const cli::RunConfig& c, const std::vector<std::string>& methods,
             const std::string& atrl_ckpt, const std::string& rl_ckpt,
             const std::string& fixture) {
  if (methods.empty()) throw UsageError("--methods must name at least one method");
  const auto scenarios = load_or_generate(fixture, c);
  if (scenarios.empty()) throw UsageError("no scenarios to evaluate");
  const ScenarioSpec spec{scenarios[0].num_humans(), scenarios[0].num_robots(),
                          scenarios[0].num_tasks(), 0, std::nullopt};

  std::optional<cli::Checkpoint> atrl_ck, rl_ck;
  std::vector<bench::Method> list;
  for (const std::string& m : methods) {
    if (m == "av") {
      list.push_back(bench::average_method());
    } else if (m == "ra") {
      list.push_back(bench::random_method());
    } else if (m == "oracle") {
      // refuse early with the size message rather than mid-run
      bench::brute_force_best(scenarios[0], c.sim());
      list.push_back(bench::oracle_method(c.sim()));
    } else if (m == "atrl") {
      atrl_ck = load_for_eval(atrl_ckpt, spec, "--atrl-checkpoint");
      list.push_back(bench::policy_method("atrl", atrl_ck->state.params));
    } else if (m == "rl") {
      rl_ck = load_for_eval(rl_ckpt, spec, "--rl-checkpoint");
      list.push_back(bench::policy_method("rl", rl_ck->state.params));
    } else {
      throw UsageError("unknown method '" + m + "' (expected atrl, rl, av, ra, oracle)");
    }
  }
  bench::EvalOptions opts;
  opts.sim = c.sim();
  opts.threads = c.threads;
  const bench::EvalReport r = bench::evaluate_all(list, scenarios, c.eval_seed, opts);

  const fs::path dir = c.output_dir;
  {
    auto os = open_out(dir / "scores.csv");
    bench::write_scores_csv(os, r);
  }
  {
    auto os = open_out(dir / "summary.csv");
    bench::write_summary_csv(os, r);
  }
  {
    auto os = open_out(dir / "tests.csv");
    bench::write_tests_csv(os, r);
  }
  write_config_echo(dir / "eval_config.ini", c);
  bench::write_summary_csv(std::cout, r);
  return 0;
}

int cmd_export_attention(const cli::RunConfig& c, const std::string& ckpt_path,
                         const std::string& fixture, std::size_t index,
                         const std::string& attribute, std::size_t layer, const std::string& out) {
  const cli::Checkpoint ck = cli::load_checkpoint_file(ckpt_path);
  const auto& params = ck.state.params;
  if (params.dims.ablate) throw UsageError("checkpoint is an ablated model without attention");
  const ScenarioSpec spec = ck.config.scenario;
  std::vector<ScenarioContext> pool;
  if (!fixture.empty()) {
    std::ifstream is(fixture);
    if (!is) throw UsageError("cannot read scenario file " + fixture);
    pool = read_scenarios(is);
  } else {
    pool = sample_scenarios(spec, c.eval_seed, index + 1);
  }
  if (index >= pool.size()) throw UsageError("--index is past the end of the scenario list");
  const ScenarioContext& ctx = pool[index];
  cli::require_dims_match(params.dims, {ctx.num_humans(), ctx.num_robots(), ctx.num_tasks(), 0,
                                        std::nullopt});
  if (layer >= params.dims.depth) throw UsageError("--layer out of range");

  model::Attribute attr;
  if (attribute == "H") attr = model::Attribute::kHumans;
  else if (attribute == "R") attr = model::Attribute::kRobots;
  else if (attribute == "T") attr = model::Attribute::kTasks;
  else throw UsageError("--attribute must be H, R or T");

  const model::AttentionMaps maps = model::attention_weights(params, encode_context(ctx));
  const auto& heads = maps[layer][attr];
  const std::size_t rows = heads.front().rows();
  auto os = open_out(out);
  model::write_attention_csv(
      os, heads, model::attribute_labels(attr, rows),
      model::joint_labels(ctx.num_humans(), ctx.num_robots(), ctx.num_tasks()));
  std::cerr << heads.size() << " heads of " << rows << "x" << heads.front().cols() << " to "
            << out << '\n';
  return 0;
}

int cmd_trace(const cli::RunConfig& c, const std::string& method, const std::string& ckpt_path,
              const std::string& fixture, std::size_t index, const std::string& mode,
              const std::string& out) {
  const auto pool = fixture.empty() ? sample_scenarios(c.scenario, c.eval_seed, index + 1)
                                    : load_or_generate(fixture, c);
  if (index >= pool.size()) throw UsageError("--index is past the end of the scenario list");
  const ScenarioContext& ctx = pool[index];

  Rng method_rng = make_rng(c.eval_seed, Stream::kBaseline, index);
  AllocationAction action;
  std::optional<cli::Checkpoint> ck;
  if (method == "av") {
    action = bench::allocate_average(ctx);
  } else if (method == "ra") {
    action = bench::allocate_random(ctx, method_rng);
  } else if (method == "oracle") {
    action = bench::brute_force_best(ctx, c.sim()).best_action;
  } else if (method == "atrl" || method == "rl") {
    ck = load_for_eval(ckpt_path, {ctx.num_humans(), ctx.num_robots(), ctx.num_tasks(), 0,
                                   std::nullopt},
                       "--checkpoint");
    action = bench::greedy_policy_action(ck->state.params, ctx);
  } else {
    throw UsageError("unknown method '" + method + "'");
  }
  sim::SimOptions opts = c.sim();
  sim::EpisodeOutcome res;
  if (mode == "expected") {
    res = sim::simulate(ctx, action, opts);
  } else if (mode == "sampled") {
    opts.mode = sim::RewardMode::kSampled;
    Rng reward_rng = make_rng(c.eval_seed, Stream::kSampledReward, index);
    res = sim::simulate(ctx, action, opts, reward_rng);
  } else {
    throw UsageError("--mode must be expected or sampled");
  }
  auto os = open_out(out);
  sim::write_trace_csv(os, res);
  std::cout << "score," << format_double(res.score) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attention-enhanced RL for multi-human multi-robot initial task allocation"};
  app.require_subcommand(1);
  app.footer(cli::config_help());
  std::string config_path;
  app.add_option("-c,--config", config_path, "INI config file (keys listed below)");

  auto* gen = app.add_subcommand("gen-scenarios", "write random scenarios as plain-text records");
  std::optional<std::size_t> gen_count;
  std::string gen_out;
  gen->add_option("-n,--count", gen_count, "number of scenarios (default run.scenarios)");
  gen->add_option("-o,--out", gen_out, "output file")->required();

  auto* train = app.add_subcommand("train", "train a policy with PPO");
  bool ablate = false;
  std::string resume, tag;
  train->add_flag("--ablate", ablate, "train the RL variant without attention");
  train->add_option("--resume", resume, "continue from a checkpoint");
  train->add_option("--name", tag, "output file prefix (default atrl or rl)");

  auto* eval = app.add_subcommand("eval", "paired evaluation with Welch t-tests");
  std::vector<std::string> methods{"av", "ra"};
  std::string atrl_ckpt, rl_ckpt, eval_fixture;
  eval->add_option("-m,--methods", methods, "comma list of atrl, rl, av, ra, oracle")
      ->delimiter(',');
  eval->add_option("--atrl-checkpoint", atrl_ckpt, "checkpoint for method atrl");
  eval->add_option("--rl-checkpoint", rl_ckpt, "checkpoint for method rl");
  eval->add_option("-s,--scenarios", eval_fixture,
                   "scenario file (default: run.scenarios drawn from run.eval_seed)");

  auto* att = app.add_subcommand("export-attention", "write per-head attention weights as CSV");
  std::string att_ckpt, att_fixture, att_attr = "H", att_out;
  std::size_t att_index = 0, att_layer = 0;
  att->add_option("--checkpoint", att_ckpt, "trained checkpoint")->required();
  att->add_option("-s,--scenarios", att_fixture, "scenario file");
  att->add_option("--index", att_index, "scenario index");
  att->add_option("--attribute", att_attr, "query attribute: H, R or T");
  att->add_option("--layer", att_layer, "attention layer");
  att->add_option("-o,--out", att_out, "output CSV")->required();

  auto* trace = app.add_subcommand("trace", "per-event simulator trace of one episode");
  std::string tr_method = "av", tr_ckpt, tr_fixture, tr_mode = "expected", tr_out;
  std::size_t tr_index = 0;
  trace->add_option("-m,--method", tr_method, "atrl, rl, av, ra or oracle");
  trace->add_option("--checkpoint", tr_ckpt, "checkpoint for atrl or rl");
  trace->add_option("-s,--scenarios", tr_fixture, "scenario file");
  trace->add_option("--index", tr_index, "scenario index");
  trace->add_option("--mode", tr_mode, "expected or sampled");
  trace->add_option("-o,--out", tr_out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    const cli::RunConfig c = load_config(config_path);
    if (*gen) return cmd_gen(c, gen_count, gen_out);
    if (*train) return cmd_train(c, ablate, resume, tag);
    if (*eval) return cmd_eval(c, methods, atrl_ckpt, rl_ckpt, eval_fixture);
    if (*att) {
      return cmd_export_attention(c, att_ckpt, att_fixture, att_index, att_attr, att_layer,
                                  att_out);
    }
    if (*trace) return cmd_trace(c, tr_method, tr_ckpt, tr_fixture, tr_index, tr_mode, tr_out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
