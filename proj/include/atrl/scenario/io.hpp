#ifndef ATRL_SCENARIO_IO_HPP_
#define ATRL_SCENARIO_IO_HPP_

#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "atrl/scenario/scenario.hpp"
#include "atrl/util/format.hpp"

namespace atrl {

// Plain-text scenario fixtures. One record per scenario:
//
//   scenario <seed> <humans> <robots> <pois>
//   human <h_c> <h_s> <cognitive level> <skill level>      (x humans)
//   robot <UAV|UGV> <speed m/s> <low|high>                   (x robots)
//   poi <x m> <y m> <threat 0|1> <easy|medium|hard>          (x pois)
//   cluster <centroid poi> <member poi>...                   (x robots)
//   end
//
// The file starts with the line "# atrl scenarios v1". Numbers use the
// shortest round-trip decimal form, so reading back is exact.
inline constexpr const char* kScenarioHeader = "# atrl scenarios v1";

inline void write_scenario(std::ostream& os, const ScenarioContext& ctx) {
  os << "scenario " << ctx.seed << ' ' << ctx.num_humans() << ' ' << ctx.num_robots() << ' '
     << ctx.num_tasks() << '\n';
  for (const HumanProfile& h : ctx.humans) {
    os << "human " << format_double(h.cognitive) << ' ' << format_double(h.skill) << ' '
       << to_string(h.cognitive_level) << ' ' << to_string(h.skill_level) << '\n';
  }
  for (const RobotProfile& r : ctx.robots) {
    os << "robot " << to_string(r.kind()) << ' ' << format_double(r.speed()) << ' '
       << to_string(r.image_quality()) << '\n';
  }
  for (const Poi& p : ctx.pois) {
    os << "poi " << format_double(p.position.x) << ' ' << format_double(p.position.y) << ' '
       << (p.is_threat ? 1 : 0) << ' ' << to_string(p.difficulty) << '\n';
  }
  for (std::size_t c = 0; c < ctx.clusters.size(); ++c) {
    os << "cluster " << ctx.centroid_pois[c];
    for (std::size_t m : ctx.clusters[c]) os << ' ' << m;
    os << '\n';
  }
  os << "end\n";
}

inline void write_scenarios(std::ostream& os, const std::vector<ScenarioContext>& all) {
  os << kScenarioHeader << '\n';
  for (const auto& ctx : all) write_scenario(os, ctx);
}

namespace detail {

class RecordReader {
 public:
  explicit RecordReader(std::istream& is) : is_(is) {}

  // Next non-empty, non-comment line split into tokens; false at EOF.
  bool next(std::vector<std::string>& tokens) {
    std::string line;
    while (std::getline(is_, line)) {
      ++line_no_;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ss(line);
      tokens.clear();
      for (std::string tok; ss >> tok;) tokens.push_back(tok);
      if (!tokens.empty()) return true;
    }
    return false;
  }

  std::string where() const { return "line " + std::to_string(line_no_); }

  std::vector<std::string> expect(const std::string& keyword, std::size_t min_tokens) {
    std::vector<std::string> t;
    if (!next(t)) throw FormatError(keyword, "unexpected end of file");
    if (t[0] != keyword) {
      throw FormatError(keyword, where() + ": expected '" + keyword + "', found '" + t[0] + "'");
    }
    if (t.size() < min_tokens) throw FormatError(keyword, where() + ": too few fields");
    return t;
  }

 private:
  std::istream& is_;
  std::size_t line_no_ = 0;
};

}  // namespace detail

// Reads every record and checks each against the context invariants.
inline std::vector<ScenarioContext> read_scenarios(std::istream& is) {
  std::string first;
  if (!std::getline(is, first) || first != kScenarioHeader) {
    throw FormatError("header", "missing '" + std::string(kScenarioHeader) + "'");
  }
  detail::RecordReader rd(is);
  std::vector<ScenarioContext> out;
  std::vector<std::string> t;
  while (rd.next(t)) {
    if (t[0] != "scenario" || t.size() != 5) {
      throw FormatError("scenario", rd.where() + ": expected 'scenario <seed> <i> <j> <n>'");
    }
    ScenarioContext ctx;
    ctx.seed = parse_int<std::uint64_t>(t[1], "scenario.seed");
    const auto i = parse_int<std::size_t>(t[2], "scenario.humans");
    const auto j = parse_int<std::size_t>(t[3], "scenario.robots");
    const auto n = parse_int<std::size_t>(t[4], "scenario.pois");
    for (std::size_t k = 0; k < i; ++k) {
      auto f = rd.expect("human", 5);
      HumanProfile h;
      h.cognitive = parse_double(f[1], "human.h_c");
      h.skill = parse_double(f[2], "human.h_s");
      auto cl = parse_level(f[3]);
      auto sl = parse_level(f[4]);
      if (!cl || !sl) throw FormatError("human.level", rd.where() + ": unknown level");
      h.cognitive_level = *cl;
      h.skill_level = *sl;
      if (!h.consistent()) {
        throw FormatError("human.level", rd.where() + ": level tag does not match value");
      }
      ctx.humans.push_back(h);
    }
    for (std::size_t k = 0; k < j; ++k) {
      auto f = rd.expect("robot", 4);
      RobotProfile r(f[1] == "UAV" ? RobotKind::kUav : RobotKind::kUgv);
      if ((f[1] != "UAV" && f[1] != "UGV") || parse_double(f[2], "robot.speed") != r.speed() ||
          f[3] != to_string(r.image_quality())) {
        throw FormatError("robot", rd.where() + ": not a valid UAV/UGV specification");
      }
      ctx.robots.push_back(r);
    }
    for (std::size_t k = 0; k < n; ++k) {
      auto f = rd.expect("poi", 5);
      Poi p;
      p.position = {parse_double(f[1], "poi.x"), parse_double(f[2], "poi.y")};
      if (p.position.x < 0 || p.position.x > kArenaSize || p.position.y < 0 ||
          p.position.y > kArenaSize) {
        throw FormatError("poi.position", rd.where() + ": outside the arena");
      }
      p.is_threat = parse_int<int>(f[3], "poi.threat") != 0;
      auto d = parse_difficulty(f[4]);
      if (!d) throw FormatError("poi.difficulty", rd.where() + ": unknown difficulty");
      p.difficulty = *d;
      ctx.pois.push_back(p);
    }
    std::vector<bool> seen(n, false);
    for (std::size_t k = 0; k < j; ++k) {
      auto f = rd.expect("cluster", 3);
      ctx.centroid_pois.push_back(parse_int<std::size_t>(f[1], "cluster.centroid"));
      std::vector<std::size_t> members;
      for (std::size_t m = 2; m < f.size(); ++m) {
        const auto p = parse_int<std::size_t>(f[m], "cluster.member");
        if (p >= n || seen[p]) {
          throw FormatError("cluster", rd.where() + ": member " + f[m] +
                                           " out of range or repeated");
        }
        seen[p] = true;
        members.push_back(p);
      }
      if (std::find(members.begin(), members.end(), ctx.centroid_pois.back()) == members.end()) {
        throw FormatError("cluster.centroid", rd.where() + ": centroid is not a member");
      }
      ctx.clusters.push_back(std::move(members));
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
      throw FormatError("cluster", "clusters do not cover every POI");
    }
    rd.expect("end", 1);
    out.push_back(std::move(ctx));
  }
  return out;
}

}  // namespace atrl

#endif  // ATRL_SCENARIO_IO_HPP_
