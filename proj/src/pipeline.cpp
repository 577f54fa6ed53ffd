#include "gffx/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <json.hpp>

#include "gffx/error.hpp"
#include "gffx/gff.hpp"
#include "gffx/rng.hpp"

namespace gffx::pipeline {

using nlohmann::ordered_json;

const char* to_string(Mode m) noexcept {
  switch (m) {
    case Mode::tree: return "tree";
    case Mode::graph: return "graph";
    case Mode::iid: return "iid";
  }
  return "unknown";
}

Mode mode_from_string(const std::string& s) {
  if (s == "tree") return Mode::tree;
  if (s == "graph") return Mode::graph;
  if (s == "iid") return Mode::iid;
  fail(ErrorKind::invalid_config, "unknown mode '" + s + "'");
}

ExperimentConfig::ExperimentConfig()
    : intervals(extremes::default_intervals()),
      rho_grid{0.0, 0.3, 0.7, 0.9},
      u_grid{1.0, 2.0, 3.0},
      windows{{0.0, 1.0}, {-0.5, 0.5}},
      tree_ladder{1u << 10, 1u << 12, 1u << 14, 1u << 16, 1u << 18},
      graph_ladder{500, 1000, 2000} {}

std::uint32_t ExperimentConfig::census_radius() const {
  if (ell) return *ell;
  double l = 0.3 * std::log2(static_cast<double>(n));
  return std::max<std::uint32_t>(1, static_cast<std::uint32_t>(l));
}

std::uint32_t ExperimentConfig::agreement_radius() const {
  return ell0 ? *ell0 : census_radius();
}

void ExperimentConfig::validate() const {
  if (n < 3) fail(ErrorKind::invalid_config, "n must be at least 3");
  if (r < 3) fail(ErrorKind::invalid_config, "r must be at least 3");
  if (replicas == 0) fail(ErrorKind::invalid_config, "replicas must be positive");
  if (mode == Mode::graph) {
    if (static_cast<std::uint64_t>(n) * r % 2 != 0)
      fail(ErrorKind::invalid_config, "n * r must be even for a graph");
    if (n <= r) fail(ErrorKind::invalid_config, "n must exceed r for a simple graph");
  }
  if (ell && *ell == 0) fail(ErrorKind::invalid_config, "ell must be positive");
  if (ell0 && *ell0 > census_radius())
    fail(ErrorKind::invalid_config, "ell0 must not exceed the census radius");
  if (!(k3 > 0.0)) fail(ErrorKind::invalid_config, "k3 must be positive");
  if (!(delta > 0.0)) fail(ErrorKind::invalid_config, "delta must be positive");
  if (!(K1 > 0.0)) fail(ErrorKind::invalid_config, "K1 must be positive");
  if (intervals.empty()) fail(ErrorKind::invalid_config, "intervals must be nonempty");
  for (const auto& s : intervals)
    if (!std::isfinite(s.lo) || !(s.hi > s.lo))
      fail(ErrorKind::invalid_config, "intervals must be bounded below and nonempty");
  if (!(ks_alpha > 0.0 && ks_alpha < 1.0))
    fail(ErrorKind::invalid_config, "ks_alpha must be in (0,1)");
  if (!(ppp_alpha > 0.0 && ppp_alpha < 1.0))
    fail(ErrorKind::invalid_config, "ppp_alpha must be in (0,1)");
  if (!(laplace_tol > 0.0)) fail(ErrorKind::invalid_config, "laplace_tol must be positive");
  if (!(slope_tol > 0.0)) fail(ErrorKind::invalid_config, "slope_tol must be positive");
  for (double rho : rho_grid)
    if (!(rho >= 0.0 && rho < 1.0))
      fail(ErrorKind::invalid_config, "rho_grid values must lie in [0,1)");
  for (double u : u_grid)
    if (!(u > 0.0)) fail(ErrorKind::invalid_config, "u_grid values must be positive");
  for (const auto& w : windows)
    if (!std::isfinite(w.lo) || !std::isfinite(w.hi) || !(w.hi > w.lo))
      fail(ErrorKind::invalid_config, "windows must be bounded and nonempty");
  for (std::uint32_t size : tree_ladder)
    if (size < 3) fail(ErrorKind::invalid_config, "tree_ladder sizes must be at least 3");
  for (std::uint32_t size : graph_ladder)
    if (size <= r || static_cast<std::uint64_t>(size) * r % 2 != 0)
      fail(ErrorKind::invalid_config, "graph_ladder sizes must fit a simple graph");
  for (const auto* ladder : {&tree_ladder, &graph_ladder})
    for (std::size_t i = 1; i < ladder->size(); ++i)
      if ((*ladder)[i] <= (*ladder)[i - 1])
        fail(ErrorKind::invalid_config, "ladder sizes must be strictly increasing");
  if (ladder_seeds == 0) fail(ErrorKind::invalid_config, "ladder_seeds must be positive");
}

namespace {

std::string fmt_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& tok) {
  if (tok == "inf" || tok == "+inf") return std::numeric_limits<double>::infinity();
  if (tok == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    fail(ErrorKind::invalid_config, "bad number '" + tok + "'");
  }
  if (pos != tok.size()) fail(ErrorKind::invalid_config, "bad number '" + tok + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& tok) {
  std::size_t pos = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(tok, &pos);
  } catch (const std::exception&) {
    fail(ErrorKind::invalid_config, "bad integer '" + tok + "'");
  }
  if (pos != tok.size()) fail(ErrorKind::invalid_config, "bad integer '" + tok + "'");
  return v;
}

std::string interval_token(const stats::Interval& s) {
  return "(" + fmt_double(s.lo) + "," + fmt_double(s.hi) + ")";
}

stats::Interval parse_interval_token(std::string tok) {
  if (tok.size() < 3 || tok.front() != '(' || tok.back() != ')')
    fail(ErrorKind::invalid_config, "bad interval '" + tok + "'");
  tok = tok.substr(1, tok.size() - 2);
  auto comma = tok.find(',');
  if (comma == std::string::npos)
    fail(ErrorKind::invalid_config, "bad interval '" + tok + "'");
  return {parse_double(tok.substr(0, comma)), parse_double(tok.substr(comma + 1))};
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string config_to_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "mode = " << to_string(c.mode) << "\n";
  os << "n = " << c.n << "\n";
  os << "r = " << c.r << "\n";
  os << "replicas = " << c.replicas << "\n";
  os << "master_seed = " << c.master_seed << "\n";
  if (c.ell) os << "ell = " << *c.ell << "\n";
  if (c.ell0) os << "ell0 = " << *c.ell0 << "\n";
  os << "k3 = " << fmt_double(c.k3) << "\n";
  os << "delta = " << fmt_double(c.delta) << "\n";
  os << "K1 = " << fmt_double(c.K1) << "\n";
  os << "intervals =";
  for (const auto& s : c.intervals) os << " " << interval_token(s);
  os << "\n";
  if (!c.out_dir.empty()) os << "out_dir = " << c.out_dir << "\n";
  os << "ks_alpha = " << fmt_double(c.ks_alpha) << "\n";
  os << "ppp_alpha = " << fmt_double(c.ppp_alpha) << "\n";
  os << "laplace_tol = " << fmt_double(c.laplace_tol) << "\n";
  os << "slope_tol = " << fmt_double(c.slope_tol) << "\n";
  os << "rho_grid =";
  for (double v : c.rho_grid) os << " " << fmt_double(v);
  os << "\n";
  os << "u_grid =";
  for (double v : c.u_grid) os << " " << fmt_double(v);
  os << "\n";
  os << "windows =";
  for (const auto& s : c.windows) os << " " << interval_token(s);
  os << "\n";
  os << "tree_ladder =";
  for (auto v : c.tree_ladder) os << " " << v;
  os << "\n";
  os << "graph_ladder =";
  for (auto v : c.graph_ladder) os << " " << v;
  os << "\n";
  os << "ladder_seeds = " << c.ladder_seeds << "\n";
  return os.str();
}

namespace {

ordered_json interval_json(const stats::Interval& s) {
  ordered_json j = ordered_json::array();
  if (std::isinf(s.lo))
    j.push_back(s.lo > 0 ? "inf" : "-inf");
  else
    j.push_back(s.lo);
  if (std::isinf(s.hi))
    j.push_back(s.hi > 0 ? "inf" : "-inf");
  else
    j.push_back(s.hi);
  return j;
}

double json_bound(const ordered_json& v) {
  if (v.is_string()) return parse_double(v.get<std::string>());
  return v.get<double>();
}

ordered_json config_json(const ExperimentConfig& c) {
  ordered_json j;
  j["mode"] = to_string(c.mode);
  j["n"] = c.n;
  j["r"] = c.r;
  j["replicas"] = c.replicas;
  j["master_seed"] = c.master_seed;
  if (c.ell) j["ell"] = *c.ell;
  if (c.ell0) j["ell0"] = *c.ell0;
  j["k3"] = c.k3;
  j["delta"] = c.delta;
  j["K1"] = c.K1;
  j["intervals"] = ordered_json::array();
  for (const auto& s : c.intervals) j["intervals"].push_back(interval_json(s));
  j["out_dir"] = c.out_dir;
  j["ks_alpha"] = c.ks_alpha;
  j["ppp_alpha"] = c.ppp_alpha;
  j["laplace_tol"] = c.laplace_tol;
  j["slope_tol"] = c.slope_tol;
  j["rho_grid"] = c.rho_grid;
  j["u_grid"] = c.u_grid;
  j["windows"] = ordered_json::array();
  for (const auto& s : c.windows) j["windows"].push_back(interval_json(s));
  j["tree_ladder"] = c.tree_ladder;
  j["graph_ladder"] = c.graph_ladder;
  j["ladder_seeds"] = c.ladder_seeds;
  return j;
}

ExperimentConfig config_from_json_value(const ordered_json& j) {
  ExperimentConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const ordered_json& v = it.value();
    if (key == "mode") {
      c.mode = mode_from_string(v.get<std::string>());
    } else if (key == "n") {
      c.n = v.get<std::uint32_t>();
    } else if (key == "r") {
      c.r = v.get<std::uint32_t>();
    } else if (key == "replicas") {
      c.replicas = v.get<std::uint32_t>();
    } else if (key == "master_seed") {
      c.master_seed = v.get<std::uint64_t>();
    } else if (key == "ell") {
      c.ell = v.get<std::uint32_t>();
    } else if (key == "ell0") {
      c.ell0 = v.get<std::uint32_t>();
    } else if (key == "k3") {
      c.k3 = v.get<double>();
    } else if (key == "delta") {
      c.delta = v.get<double>();
    } else if (key == "K1") {
      c.K1 = v.get<double>();
    } else if (key == "intervals") {
      c.intervals.clear();
      for (const auto& s : v) c.intervals.push_back({json_bound(s[0]), json_bound(s[1])});
    } else if (key == "out_dir") {
      c.out_dir = v.get<std::string>();
    } else if (key == "ks_alpha") {
      c.ks_alpha = v.get<double>();
    } else if (key == "ppp_alpha") {
      c.ppp_alpha = v.get<double>();
    } else if (key == "laplace_tol") {
      c.laplace_tol = v.get<double>();
    } else if (key == "slope_tol") {
      c.slope_tol = v.get<double>();
    } else if (key == "rho_grid") {
      c.rho_grid = v.get<std::vector<double>>();
    } else if (key == "u_grid") {
      c.u_grid = v.get<std::vector<double>>();
    } else if (key == "windows") {
      c.windows.clear();
      for (const auto& s : v) c.windows.push_back({json_bound(s[0]), json_bound(s[1])});
    } else if (key == "tree_ladder") {
      c.tree_ladder = v.get<std::vector<std::uint32_t>>();
    } else if (key == "graph_ladder") {
      c.graph_ladder = v.get<std::vector<std::uint32_t>>();
    } else if (key == "ladder_seeds") {
      c.ladder_seeds = v.get<std::uint32_t>();
    } else {
      fail(ErrorKind::invalid_config, "unknown config key '" + key + "'");
    }
  }
  return c;
}

ExperimentConfig config_from_text(const std::string& text) {
  ExperimentConfig c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::invalid_config, "expected key = value, got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key == "mode") {
      c.mode = mode_from_string(value);
    } else if (key == "n") {
      c.n = static_cast<std::uint32_t>(parse_u64(value));
    } else if (key == "r") {
      c.r = static_cast<std::uint32_t>(parse_u64(value));
    } else if (key == "replicas") {
      c.replicas = static_cast<std::uint32_t>(parse_u64(value));
    } else if (key == "master_seed") {
      c.master_seed = parse_u64(value);
    } else if (key == "ell") {
      c.ell = static_cast<std::uint32_t>(parse_u64(value));
    } else if (key == "ell0") {
      c.ell0 = static_cast<std::uint32_t>(parse_u64(value));
    } else if (key == "k3") {
      c.k3 = parse_double(value);
    } else if (key == "delta") {
      c.delta = parse_double(value);
    } else if (key == "K1") {
      c.K1 = parse_double(value);
    } else if (key == "intervals") {
      c.intervals.clear();
      for (const auto& tok : split_ws(value)) c.intervals.push_back(parse_interval_token(tok));
    } else if (key == "out_dir") {
      c.out_dir = value;
    } else if (key == "ks_alpha") {
      c.ks_alpha = parse_double(value);
    } else if (key == "ppp_alpha") {
      c.ppp_alpha = parse_double(value);
    } else if (key == "laplace_tol") {
      c.laplace_tol = parse_double(value);
    } else if (key == "slope_tol") {
      c.slope_tol = parse_double(value);
    } else if (key == "rho_grid") {
      c.rho_grid.clear();
      for (const auto& tok : split_ws(value)) c.rho_grid.push_back(parse_double(tok));
    } else if (key == "u_grid") {
      c.u_grid.clear();
      for (const auto& tok : split_ws(value)) c.u_grid.push_back(parse_double(tok));
    } else if (key == "windows") {
      c.windows.clear();
      for (const auto& tok : split_ws(value)) c.windows.push_back(parse_interval_token(tok));
    } else if (key == "tree_ladder") {
      c.tree_ladder.clear();
      for (const auto& tok : split_ws(value))
        c.tree_ladder.push_back(static_cast<std::uint32_t>(parse_u64(tok)));
    } else if (key == "graph_ladder") {
      c.graph_ladder.clear();
      for (const auto& tok : split_ws(value))
        c.graph_ladder.push_back(static_cast<std::uint32_t>(parse_u64(tok)));
    } else if (key == "ladder_seeds") {
      c.ladder_seeds = static_cast<std::uint32_t>(parse_u64(value));
    } else {
      fail(ErrorKind::invalid_config, "unknown config key '" + key + "'");
    }
  }
  return c;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& c) {
  return config_json(c).dump(2) + "\n";
}

ExperimentConfig parse_config(const std::string& text) {
  auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    ordered_json j = ordered_json::parse(text, nullptr, false);
    if (j.is_discarded()) fail(ErrorKind::invalid_config, "config is not valid json");
    try {
      return config_from_json_value(j);
    } catch (const ordered_json::exception& e) {
      fail(ErrorKind::invalid_config, std::string("config json: ") + e.what());
    }
  }
  return config_from_text(text);
}

namespace {

class StageClock {
 public:
  explicit StageClock(RunReport& rep) : rep_(rep) {}

  template <typename F>
  auto run(const std::string& name, F&& f) {
    auto t0 = std::chrono::steady_clock::now();
    auto done = [&] {
      double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      rep_.timings.push_back({name, s});
    };
    try {
      if constexpr (std::is_void_v<decltype(f())>) {
        f();
        done();
      } else {
        auto value = f();
        done();
        return value;
      }
    } catch (const Error& e) {
      if (e.stage().empty()) throw Error(e.kind(), e.message(), name);
      throw;
    }
  }

 private:
  RunReport& rep_;
};

// Shared replica-statistics accumulator: maxima, interval counts, inner sums.
struct ReplicaAccumulator {
  extremes::RescalingConstants constants;
  std::vector<stats::Interval> intervals;
  std::vector<extremes::TestFunction> phis;
  std::vector<double> maxima;
  std::vector<std::vector<std::size_t>> counts;    // [interval][replica]
  std::vector<std::vector<double>> inner_sums;     // [phi][replica]

  ReplicaAccumulator(const extremes::RescalingConstants& c,
                     const std::vector<stats::Interval>& iv)
      : constants(c), intervals(iv) {
    for (int i = 0; i < 3; ++i) phis.push_back(extremes::canonical_phi(i));
    counts.resize(intervals.size());
    inner_sums.resize(phis.size());
  }

  void add(const extremes::ExtremalProcess& p) {
    maxima.push_back(p.max_point);
    for (std::size_t i = 0; i < intervals.size(); ++i)
      counts[i].push_back(extremes::count_in(p, intervals[i]));
    for (std::size_t i = 0; i < phis.size(); ++i)
      inner_sums[i].push_back(extremes::laplace_inner_sum(p, phis[i]));
  }
};

FieldStatistics finish_statistics(const std::string& label, ReplicaAccumulator&& acc,
                                  const ExperimentConfig& cfg, RunReport& rep) {
  FieldStatistics fs;
  fs.label = label;
  fs.constants = acc.constants;
  fs.maxima = std::move(acc.maxima);
  fs.counts = std::move(acc.counts);
  fs.inner_sums = std::move(acc.inner_sums);
  fs.passed = true;

  if (fs.maxima.size() >= 100) {
    fs.ks = extremes::ks_gumbel(fs.maxima);
    if (!(fs.ks.p_value > cfg.ks_alpha)) {
      fs.passed = false;
      fs.failures.push_back(label + ": ks p-value " + fmt_double(fs.ks.p_value) +
                            " at alpha " + fmt_double(cfg.ks_alpha));
    }
  } else {
    rep.skipped.push_back(label + "/ks: needs at least 100 replicas");
  }

  for (std::size_t i = 0; i < acc.intervals.size(); ++i) {
    auto r = extremes::ppp_interval_test(fs.counts[i], acc.intervals[i]);
    if (!(r.p_value > cfg.ppp_alpha)) {
      fs.passed = false;
      fs.failures.push_back(label + ": occupancy p-value " + fmt_double(r.p_value) +
                            " on " + interval_token(acc.intervals[i]));
    }
    fs.interval_reports.push_back(r);
  }

  for (std::size_t i = 0; i < acc.phis.size(); ++i) {
    auto r = extremes::laplace_functional(fs.inner_sums[i], acc.phis[i]);
    if (!(std::abs(r.empirical - r.target) <= cfg.laplace_tol)) {
      fs.passed = false;
      fs.failures.push_back(label + ": laplace gap " +
                            fmt_double(std::abs(r.empirical - r.target)) + " on ramp " +
                            std::to_string(i));
    }
    fs.laplace_reports.push_back(r);
  }

  for (const auto& f : fs.failures) rep.failures.push_back(f);
  return fs;
}

}  // namespace

RunReport run_tree_pipeline(const ExperimentConfig& config) {
  config.validate();
  if (config.mode == Mode::graph)
    fail(ErrorKind::invalid_config, "tree pipeline needs mode tree or iid");

  RunReport rep;
  rep.config = config;
  StageClock clock(rep);

  auto constants = extremes::rescaling_constants(config.n, config.r);

  gff::TreeSubtree subtree;
  if (config.mode == Mode::tree)
    subtree = clock.run("subtree", [&] { return gff::build_subtree(config.n, config.r); });

  ReplicaAccumulator acc(constants, config.intervals);
  clock.run("sample", [&] {
    for (std::uint32_t j = 1; j <= config.replicas; ++j) {
      Rng rng = Rng::for_stream(config.master_seed, j);
      gff::FieldSample s = config.mode == Mode::tree
                               ? gff::sample_tree_gff(subtree, rng)
                               : gff::sample_iid_field(config.n, rng);
      acc.add(extremes::extract_process(s, constants));
    }
  });

  clock.run("tests", [&] {
    rep.field_stats.push_back(finish_statistics("all", std::move(acc), config, rep));
  });

  rep.passed = rep.failures.empty();
  return rep;
}

RunReport run_graph_pipeline(const ExperimentConfig& config) {
  config.validate();
  if (config.mode != Mode::graph) fail(ErrorKind::invalid_config, "graph pipeline needs mode graph");

  RunReport rep;
  rep.config = config;
  StageClock clock(rep);

  auto constants = extremes::rescaling_constants(config.n, config.r);

  auto gen = clock.run("generate", [&] {
    return graphgen::generate_simple(config.n, config.r,
                                     derive_stream(config.master_seed, 0));
  });
  rep.generation_attempts = gen.attempts;
  const graphgen::RegularGraph& g = gen.graph;

  graphgen::StructuralCheckParams params;
  params.K1 = config.K1;
  params.k3 = config.k3;
  clock.run("structure", [&] {
    rep.structure = graphgen::structural_report(g, params, nullptr,
                                                derive_stream(config.master_seed, 0));
  });

  auto G = clock.run("green", [&] { return green::zero_average_green(g); });
  clock.run("green_invariants", [&] { rep.green_invariants = G.check_invariants(); });
  clock.run("green_bound",
            [&] { rep.green_bound = green::green_upper_bound(g, G, config.K1, config.k3); });

  auto census = clock.run("census",
                          [&] { return graphgen::vertex_census(g, config.census_radius()); });
  rep.census = CensusSummary{census.ell, g.n_vertices - census.bad_count, census.bad_count};
  bool any_good = census.bad_count < g.n_vertices;

  if (any_good) {
    clock.run("tree_agreement", [&] {
      rep.tree_agreement = green::green_vs_tree(g, G, census, config.agreement_radius());
    });
  } else {
    rep.skipped.push_back("tree_agreement: no good vertices");
  }

  auto factor = clock.run("factor", [&] { return gff::factor_green(G); });

  ReplicaAccumulator acc_all(constants, config.intervals);
  ReplicaAccumulator acc_good(constants, config.intervals);
  clock.run("sample", [&] {
    for (std::uint32_t j = 1; j <= config.replicas; ++j) {
      Rng rng = Rng::for_stream(config.master_seed, j);
      gff::FieldSample s = gff::sample_graph_gff(factor, rng);
      acc_all.add(extremes::extract_process(s, constants));
      if (any_good)
        acc_good.add(extremes::extract_process(s, constants, nullptr, &census.good_flags));
    }
  });

  clock.run("tests", [&] {
    rep.field_stats.push_back(finish_statistics("all", std::move(acc_all), config, rep));
    if (any_good)
      rep.field_stats.push_back(
          finish_statistics("good_only", std::move(acc_good), config, rep));
    else
      rep.skipped.push_back("extract/good_only: no good vertices");
  });

  clock.run("comparison", [&] {
    rep.graph_comparison = comparison::comparison_sum_graph(g, G, constants, config.k3,
                                                            config.delta);
  });

  if (rep.green_invariants && !rep.green_invariants->ok())
    rep.failures.push_back("green invariants violated");
  rep.passed = rep.failures.empty();
  return rep;
}

namespace {

double fit_loglog_slope(const std::vector<double>& ns, const std::vector<double>& ys) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double m = static_cast<double>(ns.size());
  for (std::size_t i = 0; i < ns.size(); ++i) {
    double x = std::log(ns[i]), y = std::log(ys[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace

RunReport run_comparison_suite(const ExperimentConfig& config) {
  config.validate();
  if (config.rho_grid.empty() || config.u_grid.empty() || config.windows.empty())
    fail(ErrorKind::invalid_config, "dominance grid must be nonempty");
  if (config.tree_ladder.empty() || config.graph_ladder.empty())
    fail(ErrorKind::invalid_config, "decay ladders must be nonempty");

  RunReport rep;
  rep.config = config;
  StageClock clock(rep);

  clock.run("interpolation", [&] {
    using comparison::InterpolationFamily;
    using comparison::TestFunctional;

    auto push = [&](const std::string& label, const InterpolationFamily& fam,
                    const TestFunctional& F, double tol) {
      InterpolationCase ic;
      ic.label = label;
      ic.check = comparison::interpolation_identity_check(fam, F);
      ic.tolerance = tol;
      ic.passed = ic.check.abs_gap <= tol;
      if (!ic.passed) rep.failures.push_back("interpolation/" + label + ": gap " +
                                             fmt_double(ic.check.abs_gap));
      rep.interpolation_cases.push_back(std::move(ic));
    };

    InterpolationFamily pair;
    pair.cov0 = Eigen::MatrixXd::Identity(2, 2);
    pair.cov1 = Eigen::MatrixXd::Identity(2, 2);
    pair.cov1(0, 1) = pair.cov1(1, 0) = 0.5;
    push("product_pair", pair, TestFunctional::product_pair(), 1e-10);

    InterpolationFamily same;
    same.cov0 = pair.cov1;
    same.cov1 = pair.cov1;
    push("equal_ends", same, TestFunctional::ramp_product(), 1e-10);

    // Random correlation ends, diagonals pinned to 1 so validate() accepts.
    Rng rng = Rng::for_stream(config.master_seed, 31);
    for (int inst = 0; inst < 3; ++inst) {
      auto random_corr = [&] {
        Eigen::MatrixXd A(3, 3);
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) A(i, j) = rng.gaussian();
        Eigen::MatrixXd C = A * A.transpose();
        Eigen::VectorXd d = C.diagonal().cwiseSqrt();
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) C(i, j) /= d(i) * d(j);
        return C;
      };
      InterpolationFamily fam;
      fam.cov0 = random_corr();
      fam.cov1 = random_corr();
      push("ramp_product_" + std::to_string(inst), fam,
           TestFunctional::ramp_product(0.0, 1.0), 1e-3);
    }
  });

  clock.run("dominance", [&] {
    std::uint64_t cell = 0;
    for (double rho : config.rho_grid)
      for (double u : config.u_grid)
        for (const auto& S : config.windows) {
          DominanceCell dc;
          dc.rho = rho;
          dc.u = u;
          dc.window = S;
          dc.quadrature = comparison::bivariate_prob(rho, u, S);
          Rng rng = Rng::for_stream(config.master_seed, 1000 + cell);
          dc.mc = comparison::bivariate_prob(rho, u, S, comparison::ProbMethod::mc,
                                             1000000, &rng);
          dc.bound = comparison::bivariate_bound(rho, u, S);
          dc.dominated_with_margin =
              dc.bound - dc.quadrature.value > 3.0 * std::max(dc.quadrature.error, 1e-15);
          double sigma = std::sqrt(dc.quadrature.error * dc.quadrature.error +
                                   dc.mc.error * dc.mc.error);
          dc.cross_consistent = std::abs(dc.quadrature.value - dc.mc.value) <= 3.0 * sigma;
          if (!dc.dominated_with_margin)
            rep.failures.push_back("dominance: bound not above probability at rho " +
                                   fmt_double(rho) + ", u " + fmt_double(u));
          if (!dc.cross_consistent)
            rep.failures.push_back("dominance: quadrature and mc disagree at rho " +
                                   fmt_double(rho) + ", u " + fmt_double(u));
          rep.dominance_grid.push_back(dc);
          ++cell;
        }
  });

  clock.run("eq_tozero", [&] {
    const std::uint32_t m = 32;
    auto t = gff::build_subtree(m, config.r);
    comparison::InterpolationFamily fam;
    fam.cov0 = comparison::tree_correlation_matrix(t);
    fam.cov1 = Eigen::MatrixXd::Identity(m, m);
    auto c32 = extremes::rescaling_constants(m, config.r);
    rep.eq_tozero = comparison::eq_tozero_sum(fam, c32, {0.0, 1.0});
    rep.eq_tozero_tree_bound = comparison::comparison_sum_tree(m, config.r).exact_sum;
    if (!rep.eq_tozero->dominated)
      rep.failures.push_back("eq_tozero: closed-form ceiling violated");
    if (!(rep.eq_tozero->value <= rep.eq_tozero_tree_bound))
      rep.failures.push_back("eq_tozero: tree comparison sum does not dominate");
  });

  clock.run("tree_ladder", [&] {
    TreeLadderReport ladder;
    std::vector<double> ns, sums;
    for (std::uint32_t n : config.tree_ladder) {
      ladder.rows.push_back(comparison::comparison_sum_tree(n, config.r));
      ns.push_back(static_cast<double>(n));
      sums.push_back(ladder.rows.back().exact_sum);
    }
    ladder.predicted = (2.0 - config.r) / static_cast<double>(config.r);
    ladder.strictly_decreasing = true;
    for (std::size_t i = 1; i < sums.size(); ++i)
      if (!(sums[i] < sums[i - 1])) ladder.strictly_decreasing = false;
    if (sums.size() >= 2) {
      ladder.slope = fit_loglog_slope(ns, sums);
      ladder.slope_ok = std::abs(ladder.slope - ladder.predicted) <= config.slope_tol;
    }
    if (!ladder.strictly_decreasing)
      rep.failures.push_back("tree_ladder: sums not strictly decreasing");
    if (!ladder.slope_ok)
      rep.failures.push_back("tree_ladder: slope " + fmt_double(ladder.slope) +
                             " outside the predicted band");
    rep.tree_ladder = std::move(ladder);
  });

  clock.run("graph_ladder", [&] {
    GraphLadderReport ladder;
    for (std::uint32_t s = 0; s < config.ladder_seeds; ++s) {
      GraphLadderSeed seed;
      seed.seed_index = s;
      for (std::size_t i = 0; i < config.graph_ladder.size(); ++i) {
        std::uint32_t n = config.graph_ladder[i];
        std::uint64_t sub =
            derive_stream(config.master_seed, (s + 1) * 100000ull + i);
        auto gen = graphgen::generate_simple(n, config.r, sub);
        auto G = green::zero_average_green(gen.graph);
        seed.rows.push_back(comparison::comparison_sum_graph(
            gen.graph, G, extremes::rescaling_constants(n, config.r), config.k3,
            config.delta));
      }
      seed.decreasing = true;
      for (std::size_t i = 1; i < seed.rows.size(); ++i)
        if (!(seed.rows[i].total < seed.rows[i - 1].total)) seed.decreasing = false;
      if (seed.decreasing) ++ladder.decreasing_count;
      ladder.seeds.push_back(std::move(seed));
    }
    ladder.required = (9 * config.ladder_seeds + 9) / 10;  // ceil(0.9 s)
    ladder.ok = ladder.decreasing_count >= ladder.required;
    if (!ladder.ok)
      rep.failures.push_back("graph_ladder: only " +
                             std::to_string(ladder.decreasing_count) + " of " +
                             std::to_string(config.ladder_seeds) +
                             " seeds strictly decreasing");
    rep.graph_ladder = std::move(ladder);
  });

  rep.passed = rep.failures.empty();
  return rep;
}

namespace {

ordered_json ks_json(const extremes::KsReport& r) {
  return {{"n", r.n}, {"statistic", r.statistic}, {"p_value", r.p_value}};
}

ordered_json interval_report_json(const extremes::PppIntervalReport& r) {
  ordered_json j;
  j["interval"] = interval_json(r.interval);
  j["n_replicas"] = r.n_replicas;
  j["mean_count"] = r.mean_count;
  j["expected_count"] = r.expected_count;
  j["count_variance"] = r.count_variance;
  j["chi_square"] = r.chi_square;
  j["dof"] = r.dof;
  j["p_value"] = r.p_value;
  return j;
}

ordered_json laplace_json(const extremes::LaplaceReport& r) {
  ordered_json j;
  j["n_replicas"] = r.n_replicas;
  j["empirical"] = r.empirical;
  j["std_error"] = r.std_error;
  j["target"] = r.target;
  return j;
}

ordered_json field_stats_json(const FieldStatistics& fs) {
  ordered_json j;
  j["label"] = fs.label;
  j["n"] = fs.constants.n;
  j["a_n"] = fs.constants.a_n;
  j["b_n"] = fs.constants.b_n;
  j["sigma_r"] = fs.constants.sigma_r;
  j["replicas"] = fs.maxima.size();
  auto m = stats::sample_moments(fs.maxima);
  j["max_mean"] = m.mean;
  j["max_variance"] = m.variance;
  if (fs.ks.n > 0) j["ks"] = ks_json(fs.ks);
  j["intervals"] = ordered_json::array();
  for (const auto& r : fs.interval_reports) j["intervals"].push_back(interval_report_json(r));
  j["laplace"] = ordered_json::array();
  for (const auto& r : fs.laplace_reports) j["laplace"].push_back(laplace_json(r));
  j["passed"] = fs.passed;
  j["failures"] = fs.failures;
  return j;
}

ordered_json structure_json(const graphgen::GraphRegularityReport& r) {
  ordered_json j;
  j["spectral_gap"] = r.spectral_gap;
  j["diameter"] = r.diameter;
  j["ball_radius"] = r.ball_radius;
  j["max_cycles_in_ball"] = r.max_cycles_in_ball;
  j["expansion_min_ratio"] = r.probe.min_ratio;
  j["check_expander"] = r.check_expander;
  j["check_cycles"] = r.check_cycles;
  j["check_gap"] = r.check_gap;
  if (r.check_green_bound) j["check_green_bound"] = *r.check_green_bound;
  j["all_passed"] = r.all_passed();
  return j;
}

ordered_json graph_sum_json(const comparison::GraphComparisonSum& s) {
  ordered_json j;
  j["n"] = s.n_vertices;
  j["a_n"] = s.a_n;
  j["k_star"] = s.k_star;
  j["near_sum"] = s.near_sum;
  j["far_sum"] = s.far_sum;
  j["total"] = s.total;
  j["near_sum_abs"] = s.near_sum_abs;
  j["far_sum_abs"] = s.far_sum_abs;
  j["clamped_pairs"] = s.clamped_pairs;
  j["max_abs_far_rho"] = s.max_abs_far_rho;
  return j;
}

ordered_json tree_sum_json(const comparison::TreeComparisonSum& s) {
  ordered_json j;
  j["n"] = s.n_vertices;
  j["exact_sum"] = s.exact_sum;
  j["monotone_bound"] = s.monotone_bound;
  j["c_tilde"] = s.c_tilde;
  j["fitted_exponent"] = s.fitted_exponent;
  return j;
}

ordered_json prob_json(const comparison::ProbEstimate& p) {
  return {{"value", p.value}, {"error", p.error}, {"flagged", p.flagged}};
}

}  // namespace

std::string report_to_json(const RunReport& rep) {
  ordered_json j;
  j["config"] = config_json(rep.config);
  j["passed"] = rep.passed;
  j["failures"] = rep.failures;
  j["skipped"] = rep.skipped;

  if (rep.config.mode == Mode::graph) {
    j["generation_attempts"] = rep.generation_attempts;
    if (rep.structure) j["structure"] = structure_json(*rep.structure);
    if (rep.green_invariants) {
      const auto& inv = *rep.green_invariants;
      j["green_invariants"] = {{"max_asymmetry", inv.max_asymmetry},
                               {"max_abs_row_sum", inv.max_abs_row_sum},
                               {"min_eigenvalue", inv.min_eigenvalue},
                               {"near_zero_modes", inv.near_zero_modes},
                               {"ok", inv.ok()}};
    }
    if (rep.green_bound) {
      const auto& b = *rep.green_bound;
      j["green_bound"] = {{"ok", b.ok},
                          {"worst_value", b.worst_value},
                          {"worst_bound", b.worst_bound},
                          {"fitted_k3", std::isfinite(b.fitted_k3) ? b.fitted_k3 : -1.0}};
    }
    if (rep.census)
      j["census"] = {{"ell", rep.census->ell},
                     {"good_count", rep.census->good_count},
                     {"bad_count", rep.census->bad_count}};
    if (rep.tree_agreement) {
      const auto& t = *rep.tree_agreement;
      j["tree_agreement"] = {{"n_good", t.n_good},
                             {"pairs_checked", t.pairs_checked},
                             {"max_abs_error", t.max_abs_error},
                             {"fitted_exponent", t.fitted_exponent}};
    }
  }

  if (!rep.field_stats.empty()) {
    j["field_stats"] = ordered_json::array();
    for (const auto& fs : rep.field_stats) j["field_stats"].push_back(field_stats_json(fs));
  }
  if (rep.graph_comparison) j["graph_comparison"] = graph_sum_json(*rep.graph_comparison);

  if (!rep.interpolation_cases.empty()) {
    j["interpolation"] = ordered_json::array();
    for (const auto& ic : rep.interpolation_cases)
      j["interpolation"].push_back({{"label", ic.label},
                                    {"lhs", ic.check.lhs},
                                    {"rhs", ic.check.rhs},
                                    {"gap", ic.check.abs_gap},
                                    {"quadrature", ic.check.used_quadrature},
                                    {"tolerance", ic.tolerance},
                                    {"passed", ic.passed}});
  }
  if (!rep.dominance_grid.empty()) {
    j["dominance"] = ordered_json::array();
    for (const auto& dc : rep.dominance_grid)
      j["dominance"].push_back({{"rho", dc.rho},
                                {"u", dc.u},
                                {"window", interval_json(dc.window)},
                                {"quadrature", prob_json(dc.quadrature)},
                                {"mc", prob_json(dc.mc)},
                                {"bound", dc.bound},
                                {"dominated_with_margin", dc.dominated_with_margin},
                                {"cross_consistent", dc.cross_consistent}});
  }
  if (rep.eq_tozero) {
    j["eq_tozero"] = {{"n", rep.eq_tozero->n_vertices},
                      {"value", rep.eq_tozero->value},
                      {"dominating_bound", rep.eq_tozero->dominating_bound},
                      {"window_dist", rep.eq_tozero->window_dist},
                      {"dominated", rep.eq_tozero->dominated},
                      {"tree_bound", rep.eq_tozero_tree_bound}};
  }
  if (rep.tree_ladder) {
    ordered_json l;
    l["rows"] = ordered_json::array();
    for (const auto& row : rep.tree_ladder->rows) l["rows"].push_back(tree_sum_json(row));
    l["slope"] = rep.tree_ladder->slope;
    l["predicted"] = rep.tree_ladder->predicted;
    l["strictly_decreasing"] = rep.tree_ladder->strictly_decreasing;
    l["slope_ok"] = rep.tree_ladder->slope_ok;
    j["tree_ladder"] = std::move(l);
  }
  if (rep.graph_ladder) {
    ordered_json l;
    l["seeds"] = ordered_json::array();
    for (const auto& seed : rep.graph_ladder->seeds) {
      ordered_json sj;
      sj["seed_index"] = seed.seed_index;
      sj["rows"] = ordered_json::array();
      for (const auto& row : seed.rows) sj["rows"].push_back(graph_sum_json(row));
      sj["decreasing"] = seed.decreasing;
      l["seeds"].push_back(std::move(sj));
    }
    l["decreasing_count"] = rep.graph_ladder->decreasing_count;
    l["required"] = rep.graph_ladder->required;
    l["ok"] = rep.graph_ladder->ok;
    j["graph_ladder"] = std::move(l);
  }
  return j.dump(2) + "\n";
}

std::string timings_to_json(const RunReport& rep) {
  ordered_json j = ordered_json::array();
  for (const auto& t : rep.timings) j.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  return j.dump(2) + "\n";
}

std::string replica_csv(const FieldStatistics& fs) {
  std::ostringstream os;
  os << "replica,stream,max";
  for (std::size_t i = 0; i < fs.counts.size(); ++i) os << ",count_" << i;
  for (std::size_t i = 0; i < fs.inner_sums.size(); ++i) os << ",inner_sum_" << i;
  os << "\n";
  for (std::size_t rep = 0; rep < fs.maxima.size(); ++rep) {
    os << rep << "," << rep + 1 << "," << fmt_double(fs.maxima[rep]);
    for (const auto& col : fs.counts) os << "," << col[rep];
    for (const auto& col : fs.inner_sums) os << "," << fmt_double(col[rep]);
    os << "\n";
  }
  return os.str();
}

std::string tree_ladder_csv(const TreeLadderReport& ladder) {
  std::ostringstream os;
  os << "n,sum,bound,slope\n";
  for (const auto& row : ladder.rows)
    os << row.n_vertices << "," << fmt_double(row.exact_sum) << ","
       << fmt_double(row.monotone_bound) << "," << fmt_double(ladder.slope) << "\n";
  return os.str();
}

std::string graph_ladder_csv(const GraphLadderReport& ladder) {
  std::ostringstream os;
  os << "seed,n,near_sum,far_sum,total,clamped_pairs\n";
  for (const auto& seed : ladder.seeds)
    for (const auto& row : seed.rows)
      os << seed.seed_index << "," << row.n_vertices << "," << fmt_double(row.near_sum)
         << "," << fmt_double(row.far_sum) << "," << fmt_double(row.total) << ","
         << row.clamped_pairs << "\n";
  return os.str();
}

void write_outputs(const RunReport& rep) {
  if (rep.config.out_dir.empty()) return;
  namespace fs = std::filesystem;
  fs::path dir(rep.config.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io_error, "cannot create output directory " + dir.string());

  auto write_file = [&](const fs::path& p, const std::string& content) {
    std::ofstream os(p, std::ios::binary);
    os << content;
    if (!os) fail(ErrorKind::io_error, "cannot write " + p.string());
  };

  write_file(dir / "report.json", report_to_json(rep));
  write_file(dir / "timings.json", timings_to_json(rep));
  for (const auto& fs_var : rep.field_stats)
    write_file(dir / ("replicas_" + fs_var.label + ".csv"), replica_csv(fs_var));
  if (rep.tree_ladder) write_file(dir / "tree_ladder.csv", tree_ladder_csv(*rep.tree_ladder));
  if (rep.graph_ladder)
    write_file(dir / "graph_ladder.csv", graph_ladder_csv(*rep.graph_ladder));
}

}  // namespace gffx::pipeline
