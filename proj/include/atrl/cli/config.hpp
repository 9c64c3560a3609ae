#ifndef ATRL_CLI_CONFIG_HPP_
#define ATRL_CLI_CONFIG_HPP_

#include <functional>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "atrl/model/params.hpp"
#include "atrl/ppo/ppo.hpp"
#include "atrl/util/errors.hpp"
#include "atrl/util/format.hpp"

namespace atrl::cli {

// Everything a command needs besides its flags and fixture files.
struct RunConfig {
  ScenarioSpec scenario = ScenarioSpec::setting_a();
  double shift_offset_h = 0.0;
  model::ModelDims model;  // team/task counts are filled from `scenario`
  ppo::PpoConfig ppo;
  std::uint64_t seed = 1;       // training and scenario generation
  std::uint64_t eval_seed = 2;  // evaluation scenarios and baseline streams
  std::size_t scenarios = 500;  // count for gen-scenarios and eval
  std::size_t threads = 1;      // evaluation workers
  std::string output_dir = "out";

  model::ModelDims dims() const { return model::dims_for(scenario, model); }

  sim::SimOptions sim() const {
    sim::SimOptions o;
    o.shift_offset_h = shift_offset_h;
    return o;
  }

  void validate() const {
    if (scenario.humans == 0) throw ConfigError("scenario.humans must be >= 1");
    if (scenario.robots == 0) throw ConfigError("scenario.robots must be >= 1");
    if (scenario.tasks() < scenario.robots) {
      throw ConfigError("scenario: threats + non_threats must be >= robots (one cluster per robot)");
    }
    if (scenario.uavs && *scenario.uavs > scenario.robots) {
      throw ConfigError("scenario.uavs must be <= scenario.robots");
    }
    if (!(shift_offset_h >= 0.0)) throw ConfigError("scenario.shift_offset_h must be >= 0");
    try {
      dims().validate();
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    try {
      ppo.validate();
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
    if (threads == 0) throw ConfigError("run.threads must be >= 1");
    if (output_dir.empty()) throw ConfigError("run.output_dir must not be empty");
  }
};

struct ConfigKey {
  std::string section, key, doc;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;

  std::string field() const { return section + "." + key; }
};

namespace detail {

inline std::string mode_name(sim::RewardMode m) {
  return m == sim::RewardMode::kExpected ? "expected" : "sampled";
}

inline std::string grad_name(model::ReprGradient g) {
  return g == model::ReprGradient::kJoint ? "joint" : "value_only";
}

inline bool parse_bool(const std::string& v, const std::string& field) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw FormatError(field, "expected true or false, got '" + v + "'");
}

// Integer field with a lower bound, addressed through an accessor.
template <typename Int>
ConfigKey bounded_int(std::string section, std::string key, std::string doc,
                      std::function<Int&(RunConfig&)> ref, Int lo) {
  ConfigKey k;
  k.section = std::move(section);
  k.key = std::move(key);
  k.doc = std::move(doc);
  k.get = [ref](const RunConfig& c) {
    return std::to_string(ref(const_cast<RunConfig&>(c)));
  };
  const std::string field = k.field();
  k.set = [ref, lo, field](RunConfig& c, const std::string& v) {
    const Int x = parse_int<Int>(v, field);
    if (x < lo) throw FormatError(field, "must be >= " + std::to_string(lo) + ", got " + v);
    ref(c) = x;
  };
  return k;
}

inline ConfigKey bounded_double(std::string section, std::string key, std::string doc,
                                std::function<double&(RunConfig&)> ref, double lo,
                                bool strict) {
  ConfigKey k;
  k.section = std::move(section);
  k.key = std::move(key);
  k.doc = std::move(doc);
  k.get = [ref](const RunConfig& c) { return format_double(ref(const_cast<RunConfig&>(c))); };
  const std::string field = k.field();
  k.set = [ref, lo, strict, field](RunConfig& c, const std::string& v) {
    const double x = parse_double(v, field);
    if (!std::isfinite(x) || (strict ? !(x > lo) : !(x >= lo))) {
      throw FormatError(field, std::string("must be ") + (strict ? "> " : ">= ") +
                                   format_double(lo) + ", got " + v);
    }
    ref(c) = x;
  };
  return k;
}

}  // namespace detail

// The documented key table, in file order.
inline const std::vector<ConfigKey>& config_keys() {
  using detail::bounded_double;
  using detail::bounded_int;
  using Sz = std::size_t;
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> v;
    v.push_back(bounded_int<Sz>("scenario", "humans", "number of human operators (i)",
                                [](RunConfig& c) -> Sz& { return c.scenario.humans; }, 1));
    v.push_back(bounded_int<Sz>("scenario", "robots", "number of robots (j), one cluster each",
                                [](RunConfig& c) -> Sz& { return c.scenario.robots; }, 1));
    v.push_back(bounded_int<Sz>("scenario", "threats", "threat POIs per scenario",
                                [](RunConfig& c) -> Sz& { return c.scenario.threats; }, 0));
    v.push_back(bounded_int<Sz>("scenario", "non_threats", "non-threat POIs per scenario",
                                [](RunConfig& c) -> Sz& { return c.scenario.non_threats; }, 0));
    {
      ConfigKey k{"scenario", "uavs",
                  "UAV count, or 'random' to draw each robot kind uniformly (default ceil(j/2))",
                  [](const RunConfig& c) {
                    return c.scenario.uavs ? std::to_string(*c.scenario.uavs)
                                           : std::string("random");
                  },
                  nullptr};
      k.set = [](RunConfig& c, const std::string& v) {
        if (v == "random") {
          c.scenario.uavs.reset();
        } else {
          c.scenario.uavs = parse_int<Sz>(v, "scenario.uavs");
        }
      };
      v.push_back(k);
    }
    v.push_back(bounded_double("scenario", "shift_offset_h",
                               "hours already worked when the mission starts",
                               [](RunConfig& c) -> double& { return c.shift_offset_h; }, 0.0,
                               false));
    v.push_back(bounded_int<Sz>("model", "d", "embedding width",
                                [](RunConfig& c) -> Sz& { return c.model.d; }, 1));
    v.push_back(bounded_int<Sz>("model", "heads", "attention heads (must divide d)",
                                [](RunConfig& c) -> Sz& { return c.model.heads; }, 1));
    v.push_back(bounded_int<Sz>("model", "policy_hidden", "GRU width of the policy network",
                                [](RunConfig& c) -> Sz& { return c.model.policy_hidden; }, 1));
    v.push_back(bounded_int<Sz>("model", "depth", "stacked cross-attribute attention layers",
                                [](RunConfig& c) -> Sz& { return c.model.depth; }, 1));
    {
      ConfigKey k{"model", "ablate", "true trains the RL variant without attention",
                  [](const RunConfig& c) { return std::string(c.model.ablate ? "true" : "false"); },
                  [](RunConfig& c, const std::string& v) {
                    c.model.ablate = detail::parse_bool(v, "model.ablate");
                  }};
      v.push_back(k);
    }
    v.push_back(bounded_double("ppo", "clip", "clipping range epsilon",
                               [](RunConfig& c) -> double& { return c.ppo.clip; }, 0.0, true));
    v.push_back(bounded_double("ppo", "w_p", "policy loss weight",
                               [](RunConfig& c) -> double& { return c.ppo.w_policy; }, 0.0,
                               false));
    v.push_back(bounded_double("ppo", "w_v", "value loss weight",
                               [](RunConfig& c) -> double& { return c.ppo.w_value; }, 0.0, false));
    v.push_back(bounded_double("ppo", "w_e", "entropy bonus weight",
                               [](RunConfig& c) -> double& { return c.ppo.w_entropy; }, 0.0,
                               false));
    v.push_back(bounded_double("ppo", "lr", "Adam learning rate",
                               [](RunConfig& c) -> double& { return c.ppo.lr; }, 0.0, true));
    v.push_back(bounded_int<Sz>("ppo", "actors", "parallel rollout actors",
                                [](RunConfig& c) -> Sz& { return c.ppo.actors; }, 1));
    v.push_back(bounded_int<Sz>("ppo", "rollout_per_actor", "episodes per actor per wave",
                                [](RunConfig& c) -> Sz& { return c.ppo.rollout_per_actor; }, 1));
    v.push_back(bounded_int<Sz>("ppo", "episodes", "total training episodes",
                                [](RunConfig& c) -> Sz& { return c.ppo.episodes; }, 1));
    v.push_back(bounded_int<Sz>("ppo", "epochs", "optimization passes per wave",
                                [](RunConfig& c) -> Sz& { return c.ppo.epochs; }, 1));
    v.push_back(bounded_int<Sz>("ppo", "minibatch", "transitions per gradient step",
                                [](RunConfig& c) -> Sz& { return c.ppo.minibatch; }, 1));
    v.push_back(bounded_int<Sz>("ppo", "curve_window", "episodes averaged per curve point",
                                [](RunConfig& c) -> Sz& { return c.ppo.curve_window; }, 1));
    v.push_back(bounded_int<Sz>("ppo", "checkpoint_every", "episodes between checkpoints (0 = off)",
                                [](RunConfig& c) -> Sz& { return c.ppo.checkpoint_every; }, 0));
    {
      ConfigKey k{"ppo", "reward_mode", "expected or sampled training reward",
                  [](const RunConfig& c) { return detail::mode_name(c.ppo.reward_mode); },
                  [](RunConfig& c, const std::string& v) {
                    if (v == "expected") c.ppo.reward_mode = sim::RewardMode::kExpected;
                    else if (v == "sampled") c.ppo.reward_mode = sim::RewardMode::kSampled;
                    else throw FormatError("ppo.reward_mode", "expected 'expected' or 'sampled', got '" + v + "'");
                  }};
      v.push_back(k);
    }
    {
      ConfigKey k{"ppo", "repr_grad",
                  "joint: policy loss also trains the representation; value_only: it does not",
                  [](const RunConfig& c) { return detail::grad_name(c.ppo.repr_gradient); },
                  [](RunConfig& c, const std::string& v) {
                    if (v == "joint") c.ppo.repr_gradient = model::ReprGradient::kJoint;
                    else if (v == "value_only") c.ppo.repr_gradient = model::ReprGradient::kValueOnly;
                    else throw FormatError("ppo.repr_grad", "expected 'joint' or 'value_only', got '" + v + "'");
                  }};
      v.push_back(k);
    }
    v.push_back(bounded_int<std::uint64_t>("run", "seed", "master seed for training and generation",
                                           [](RunConfig& c) -> std::uint64_t& { return c.seed; }, 0));
    v.push_back(bounded_int<std::uint64_t>("run", "eval_seed", "seed for evaluation scenarios",
                                           [](RunConfig& c) -> std::uint64_t& { return c.eval_seed; },
                                           0));
    v.push_back(bounded_int<Sz>("run", "scenarios", "scenario count for gen-scenarios and eval",
                                [](RunConfig& c) -> Sz& { return c.scenarios; }, 0));
    v.push_back(bounded_int<Sz>("run", "threads", "evaluation worker threads",
                                [](RunConfig& c) -> Sz& { return c.threads; }, 1));
    {
      ConfigKey k{"run", "output_dir", "directory for every output file",
                  [](const RunConfig& c) { return c.output_dir; },
                  [](RunConfig& c, const std::string& v) { c.output_dir = v; }};
      v.push_back(k);
    }
    return v;
  }();
  return keys;
}

// Parses an INI-style config on top of the defaults. Unknown sections or keys
// and out-of-range values are rejected naming the offending field.
inline RunConfig parse_config(std::istream& is) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("config: " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  RunConfig c;
  std::set<std::string> known;
  for (const ConfigKey& k : config_keys()) known.insert(k.field());
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError("config: key '" + section + "' must be inside a [section]");
    }
    for (const auto& [key, value] : body) {
      const std::string field = section + "." + key;
      if (!known.count(field)) throw ConfigError("config: unknown key '" + field + "'");
    }
  }
  for (const ConfigKey& k : config_keys()) {
    const auto v = tree.get_optional<std::string>(k.section + "." + k.key);
    if (!v) continue;
    try {
      k.set(c, *v);
    } catch (const FormatError& e) {
      throw ConfigError("config: " + std::string(e.what()));
    }
  }
  c.validate();
  return c;
}

inline RunConfig parse_config_string(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

inline void write_config(std::ostream& os, const RunConfig& c) {
  std::string section;
  for (const ConfigKey& k : config_keys()) {
    if (k.section != section) {
      if (!section.empty()) os << '\n';
      section = k.section;
      os << '[' << section << "]\n";
    }
    os << k.key << " = " << k.get(c) << '\n';
  }
}

inline std::string config_help() {
  std::ostringstream os;
  os << "Config keys (INI sections):\n";
  for (const ConfigKey& k : config_keys()) {
    os << "  " << k.field() << " (default " << k.get(RunConfig{}) << "): " << k.doc << '\n';
  }
  return os.str();
}

}  // namespace atrl::cli

#endif  // ATRL_CLI_CONFIG_HPP_
