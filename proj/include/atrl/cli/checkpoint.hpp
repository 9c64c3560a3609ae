#ifndef ATRL_CLI_CHECKPOINT_HPP_
#define ATRL_CLI_CHECKPOINT_HPP_

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "atrl/cli/config.hpp"
#include "atrl/model/params.hpp"
#include "atrl/ppo/ppo.hpp"
#include "atrl/util/errors.hpp"
#include "atrl/util/format.hpp"

namespace atrl::cli {

using grad::Tensor;

inline constexpr const char* kCheckpointVersion = "atrl-checkpoint v1";

// Text checkpoint. Doubles use shortest round-trip decimal, so values survive
// save/load exactly and a re-save is byte-identical.
//
//   atrl-checkpoint v1
//   dims <d> <heads> <policy_hidden> <depth> <humans> <robots> <tasks> <ablate>
//   episodes_done <k>
//   config <line count>
//   ...INI echo...
//   params <count>
//   param <name> <rows> <cols>
//   <values>
//   optimizer <step> <lr> <beta1> <beta2> <eps> | optimizer none
//   m <name> / v <name> blocks as for params
//   curve <count>
//   <episode> <mean_return>
//   recent <count> <values>
//   end
struct Checkpoint {
  RunConfig config;
  ppo::TrainState state;
  bool has_optimizer = true;
};

namespace detail {

inline void write_tensor(std::ostream& os, const char* tag, const std::string& name,
                         const Tensor& t) {
  os << tag << ' ' << name << ' ' << t.rows() << ' ' << t.cols() << '\n';
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (k) os << ' ';
    os << format_double(t[k]);
  }
  os << '\n';
}

class LineReader {
 public:
  explicit LineReader(std::istream& is) : is_(is) {}

  std::string next(const std::string& field) {
    std::string line;
    if (!std::getline(is_, line)) throw FormatError(field, "unexpected end of checkpoint");
    ++line_;
    return line;
  }

  std::vector<std::string> tokens(const std::string& field, const std::string& tag,
                                  std::size_t count) {
    std::istringstream ls(next(field));
    std::vector<std::string> out;
    for (std::string w; ls >> w;) out.push_back(w);
    if (out.empty() || out[0] != tag) {
      throw FormatError(field, "line " + std::to_string(line_) + ": expected '" + tag + "'");
    }
    if (count != SIZE_MAX && out.size() != count + 1) {
      throw FormatError(field, "line " + std::to_string(line_) + ": expected " +
                                   std::to_string(count) + " values after '" + tag + "'");
    }
    out.erase(out.begin());
    return out;
  }

  std::size_t line() const { return line_; }

 private:
  std::istream& is_;
  std::size_t line_ = 0;
};

inline Tensor read_tensor(LineReader& in, const char* tag, const std::string& name,
                          const Tensor& like) {
  const auto head = in.tokens(name, tag, 3);
  if (head[0] != name) {
    throw FormatError(name, "expected parameter '" + name + "', found '" + head[0] + "'");
  }
  const auto rows = parse_int<std::size_t>(head[1], name + ".rows");
  const auto cols = parse_int<std::size_t>(head[2], name + ".cols");
  if (rows != like.rows() || cols != like.cols()) {
    throw FormatError(name, "shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                                " does not match model shape " + like.shape_string());
  }
  std::istringstream ls(in.next(name));
  Tensor t(rows, cols);
  std::string w;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (!(ls >> w)) throw FormatError(name, "too few values");
    t[k] = parse_double(w, name);
  }
  if (ls >> w) throw FormatError(name, "too many values");
  return t;
}

}  // namespace detail

inline void save_checkpoint(std::ostream& os, const Checkpoint& c) {
  const model::ModelDims& m = c.state.params.dims;
  os << kCheckpointVersion << '\n';
  os << "dims " << m.d << ' ' << m.heads << ' ' << m.policy_hidden << ' ' << m.depth << ' '
     << m.humans << ' ' << m.robots << ' ' << m.tasks << ' ' << (m.ablate ? 1 : 0) << '\n';
  os << "episodes_done " << c.state.episodes_done << '\n';
  std::ostringstream cfg;
  write_config(cfg, c.config);
  std::vector<std::string> lines;
  std::istringstream cl(cfg.str());
  for (std::string l; std::getline(cl, l);) lines.push_back(l);
  os << "config " << lines.size() << '\n';
  for (const auto& l : lines) os << l << '\n';

  const auto& p = c.state.params;
  os << "params " << p.values.size() << '\n';
  for (std::size_t k = 0; k < p.values.size(); ++k) {
    detail::write_tensor(os, "param", p.names[k], p.values[k]);
  }
  if (c.has_optimizer) {
    const auto& o = c.state.optim;
    os << "optimizer " << o.step << ' ' << format_double(o.config.lr) << ' '
       << format_double(o.config.beta1) << ' ' << format_double(o.config.beta2) << ' '
       << format_double(o.config.eps) << '\n';
    for (std::size_t k = 0; k < p.values.size(); ++k) detail::write_tensor(os, "m", p.names[k], o.m[k]);
    for (std::size_t k = 0; k < p.values.size(); ++k) detail::write_tensor(os, "v", p.names[k], o.v[k]);
  } else {
    os << "optimizer none\n";
  }
  os << "curve " << c.state.curve.size() << '\n';
  for (const auto& pt : c.state.curve) {
    os << pt.episode << ' ' << format_double(pt.mean_return) << '\n';
  }
  os << "recent " << c.state.recent_returns.size();
  for (double r : c.state.recent_returns) os << ' ' << format_double(r);
  os << "\nend\n";
}

inline Checkpoint load_checkpoint(std::istream& is) {
  detail::LineReader in(is);
  const std::string version = in.next("version");
  if (version != kCheckpointVersion) {
    throw FormatError("version", "unsupported checkpoint version '" + version + "' (expected '" +
                                     kCheckpointVersion + "')");
  }
  Checkpoint c;
  const auto d = in.tokens("dims", "dims", 8);
  model::ModelDims m;
  m.d = parse_int<std::size_t>(d[0], "dims.d");
  m.heads = parse_int<std::size_t>(d[1], "dims.heads");
  m.policy_hidden = parse_int<std::size_t>(d[2], "dims.policy_hidden");
  m.depth = parse_int<std::size_t>(d[3], "dims.depth");
  m.humans = parse_int<std::size_t>(d[4], "dims.humans");
  m.robots = parse_int<std::size_t>(d[5], "dims.robots");
  m.tasks = parse_int<std::size_t>(d[6], "dims.tasks");
  m.ablate = parse_int<int>(d[7], "dims.ablate") != 0;
  c.state.episodes_done =
      parse_int<std::size_t>(in.tokens("episodes_done", "episodes_done", 1)[0], "episodes_done");

  const auto n_cfg = parse_int<std::size_t>(in.tokens("config", "config", 1)[0], "config");
  std::string cfg_text;
  for (std::size_t k = 0; k < n_cfg; ++k) cfg_text += in.next("config") + "\n";
  try {
    c.config = parse_config_string(cfg_text);
  } catch (const std::exception& e) {
    throw FormatError("config", e.what());
  }
  if (!(c.config.dims() == m)) {
    throw FormatError("dims", "dims line disagrees with the embedded config");
  }

  const auto shapes_ref = [&] {
    try {
      return model::init_params(m, 0);
    } catch (const std::exception& e) {
      throw FormatError("dims", e.what());
    }
  }();
  const auto n_params = parse_int<std::size_t>(in.tokens("params", "params", 1)[0], "params");
  if (n_params != shapes_ref.values.size()) {
    throw FormatError("params", "expected " + std::to_string(shapes_ref.values.size()) +
                                    " tensors, found " + std::to_string(n_params));
  }
  ppo::TrainState& st = c.state;
  st.params = shapes_ref;
  for (std::size_t k = 0; k < n_params; ++k) {
    st.params.values[k] = detail::read_tensor(in, "param", st.params.names[k], shapes_ref.values[k]);
  }

  const auto opt = in.tokens("optimizer", "optimizer", SIZE_MAX);
  if (opt.size() == 1 && opt[0] == "none") {
    c.has_optimizer = false;
    st.optim = grad::make_optim_state(st.params.values, grad::AdamConfig{c.config.ppo.lr});
  } else if (opt.size() == 5) {
    st.optim.step = parse_int<std::uint64_t>(opt[0], "optimizer.step");
    st.optim.config.lr = parse_double(opt[1], "optimizer.lr");
    st.optim.config.beta1 = parse_double(opt[2], "optimizer.beta1");
    st.optim.config.beta2 = parse_double(opt[3], "optimizer.beta2");
    st.optim.config.eps = parse_double(opt[4], "optimizer.eps");
    for (std::size_t k = 0; k < n_params; ++k)
      st.optim.m.push_back(detail::read_tensor(in, "m", st.params.names[k], shapes_ref.values[k]));
    for (std::size_t k = 0; k < n_params; ++k)
      st.optim.v.push_back(detail::read_tensor(in, "v", st.params.names[k], shapes_ref.values[k]));
  } else {
    throw FormatError("optimizer", "expected 'none' or 5 values");
  }

  const auto n_curve = parse_int<std::size_t>(in.tokens("curve", "curve", 1)[0], "curve");
  for (std::size_t k = 0; k < n_curve; ++k) {
    std::istringstream ls(in.next("curve"));
    std::string e, r;
    if (!(ls >> e >> r)) throw FormatError("curve", "expected '<episode> <mean_return>'");
    st.curve.push_back({parse_int<std::size_t>(e, "curve.episode"), parse_double(r, "curve.mean_return"), 0.0});
  }
  const auto recent = in.tokens("recent", "recent", SIZE_MAX);
  if (recent.empty()) throw FormatError("recent", "missing count");
  const auto n_recent = parse_int<std::size_t>(recent[0], "recent");
  if (recent.size() != n_recent + 1) throw FormatError("recent", "count does not match values");
  for (std::size_t k = 1; k < recent.size(); ++k) {
    st.recent_returns.push_back(parse_double(recent[k], "recent"));
  }
  if (in.next("end") != "end") throw FormatError("end", "missing end marker");
  return c;
}

inline void save_checkpoint_file(const std::string& path, const Checkpoint& c) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path);
  save_checkpoint(os, c);
  if (!os) throw std::runtime_error("failed writing checkpoint " + path);
}

inline Checkpoint load_checkpoint_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read checkpoint " + path);
  return load_checkpoint(is);
}

// Refuses to evaluate a checkpoint on a scenario shape its heads were not
// built for.
inline void require_dims_match(const model::ModelDims& have, const ScenarioSpec& spec) {
  if (have.humans != spec.humans || have.robots != spec.robots || have.tasks != spec.tasks()) {
    throw DimensionError("checkpoint built for i=" + std::to_string(have.humans) +
                         ", j=" + std::to_string(have.robots) + ", n=" +
                         std::to_string(have.tasks) + " but the scenario has i=" +
                         std::to_string(spec.humans) + ", j=" + std::to_string(spec.robots) +
                         ", n=" + std::to_string(spec.tasks()));
  }
}

}  // namespace atrl::cli

#endif  // ATRL_CLI_CHECKPOINT_HPP_
