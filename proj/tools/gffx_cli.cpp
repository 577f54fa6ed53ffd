// gffx: simulation and verification toolkit for Gaussian free fields on
// regular trees and random regular graphs.
//
// Exit codes: 0 all checks passed, 1 a statistical or numerical check failed,
// 2 configuration or runtime error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gffx/comparison.hpp"
#include "gffx/error.hpp"
#include "gffx/extremes.hpp"
#include "gffx/gff.hpp"
#include "gffx/graphgen.hpp"
#include "gffx/green.hpp"
#include "gffx/pipeline.hpp"
#include "gffx/rng.hpp"

namespace {

using gffx::Error;
using gffx::ErrorKind;
using nlohmann::ordered_json;
namespace pl = gffx::pipeline;

constexpr const char* kVersion = "0.1.0";

struct GlobalOpts {
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string format = "json";
  bool manifest = false;
};

struct ConfigOverrides {
  std::string config_path;
  std::optional<std::string> mode;
  std::optional<std::uint32_t> n, r, replicas, ell, ell0, ladder_seeds;
  std::optional<double> k3, delta, K1, ks_alpha, ppp_alpha, laplace_tol, slope_tol;
};

void add_config_options(CLI::App* sub, ConfigOverrides& o, bool with_mode) {
  sub->add_option("--config", o.config_path, "Config file (key = value text or JSON)");
  if (with_mode)
    sub->add_option("--mode", o.mode, "Field ensemble: tree, graph, or iid")
        ->check(CLI::IsMember({"tree", "graph", "iid"}));
  sub->add_option("--n", o.n, "Number of vertices");
  sub->add_option("--r", o.r, "Vertex degree (>= 3)");
  sub->add_option("--replicas", o.replicas, "Number of field replicas");
  sub->add_option("--ell", o.ell, "Census radius");
  sub->add_option("--ell0", o.ell0, "Tree-agreement radius (<= ell)");
  sub->add_option("--k3", o.k3, "Far-field decay exponent");
  sub->add_option("--delta", o.delta, "Distance-threshold margin");
  sub->add_option("--K1", o.K1, "Green decay prefactor");
  sub->add_option("--ks-alpha", o.ks_alpha, "KS rejection level");
  sub->add_option("--ppp-alpha", o.ppp_alpha, "Occupancy rejection level");
  sub->add_option("--laplace-tol", o.laplace_tol, "Laplace functional tolerance");
  sub->add_option("--slope-tol", o.slope_tol, "Ladder slope tolerance");
  sub->add_option("--ladder-seeds", o.ladder_seeds, "Graph ladder seed count");
}

std::string read_text_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) gffx::fail(ErrorKind::io_error, "cannot open " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

pl::ExperimentConfig build_config(const ConfigOverrides& o, const GlobalOpts& g,
                                  pl::Mode default_mode) {
  pl::ExperimentConfig c;
  if (!o.config_path.empty()) c = pl::parse_config(read_text_file(o.config_path));
  else c.mode = default_mode;
  if (o.mode) c.mode = pl::mode_from_string(*o.mode);
  if (o.n) c.n = *o.n;
  if (o.r) c.r = *o.r;
  if (o.replicas) c.replicas = *o.replicas;
  if (o.ell) c.ell = *o.ell;
  if (o.ell0) c.ell0 = *o.ell0;
  if (o.k3) c.k3 = *o.k3;
  if (o.delta) c.delta = *o.delta;
  if (o.K1) c.K1 = *o.K1;
  if (o.ks_alpha) c.ks_alpha = *o.ks_alpha;
  if (o.ppp_alpha) c.ppp_alpha = *o.ppp_alpha;
  if (o.laplace_tol) c.laplace_tol = *o.laplace_tol;
  if (o.slope_tol) c.slope_tol = *o.slope_tol;
  if (o.ladder_seeds) c.ladder_seeds = *o.ladder_seeds;
  if (g.seed) c.master_seed = *g.seed;
  if (!g.out_dir.empty()) c.out_dir = g.out_dir;
  return c;
}

ordered_json manifest_json(const pl::ExperimentConfig& c) {
  ordered_json j;
  j["tool"] = "gffx";
  j["version"] = kVersion;
  j["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
               std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  j["compiler"] = __VERSION__;
  j["config"] = ordered_json::parse(pl::config_to_json(c));
  j["seeds"] = {{"master_seed", c.master_seed},
                {"structure_stream", 0},
                {"replica_streams", "1.." + std::to_string(c.replicas)}};
  j["tolerances"] = {{"ks_alpha", c.ks_alpha},
                     {"ppp_alpha", c.ppp_alpha},
                     {"laplace_tol", c.laplace_tol},
                     {"slope_tol", c.slope_tol},
                     {"green_max_asymmetry", 1e-10},
                     {"green_max_abs_row_sum", 1e-8},
                     {"green_min_eigenvalue", -1e-9}};
  return j;
}

void write_text(const std::filesystem::path& p, const std::string& content) {
  std::ofstream os(p, std::ios::binary);
  os << content;
  if (!os) gffx::fail(ErrorKind::io_error, "cannot write " + p.string());
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) gffx::fail(ErrorKind::io_error, "cannot create output directory " + dir);
}

void maybe_emit_manifest(const GlobalOpts& g, const pl::ExperimentConfig& c) {
  if (!g.manifest) return;
  std::string text = manifest_json(c).dump(2) + "\n";
  std::cout << text;
  if (!c.out_dir.empty()) {
    ensure_out_dir(c.out_dir);
    write_text(std::filesystem::path(c.out_dir) / "manifest.json", text);
  }
}

gffx::graphgen::RegularGraph load_or_generate(const std::string& graph_path,
                                              const pl::ExperimentConfig& c,
                                              std::uint64_t* attempts = nullptr) {
  if (!graph_path.empty()) {
    std::ifstream is(graph_path);
    if (!is) gffx::fail(ErrorKind::io_error, "cannot open " + graph_path);
    return gffx::graphgen::read_edge_list(is);
  }
  auto gen = gffx::graphgen::generate_simple(c.n, c.r,
                                             gffx::derive_stream(c.master_seed, 0));
  if (attempts) *attempts = gen.attempts;
  return std::move(gen.graph);
}

ordered_json structure_to_json(const gffx::graphgen::GraphRegularityReport& r) {
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

int cmd_gen_graph(const ConfigOverrides& o, const GlobalOpts& g) {
  auto c = build_config(o, g, pl::Mode::graph);
  c.mode = pl::Mode::graph;
  c.validate();
  maybe_emit_manifest(g, c);

  std::uint64_t attempts = 0;
  auto graph = load_or_generate("", c, &attempts);
  gffx::graphgen::StructuralCheckParams params;
  params.K1 = c.K1;
  params.k3 = c.k3;
  auto report = gffx::graphgen::structural_report(graph, params, nullptr,
                                                  gffx::derive_stream(c.master_seed, 0));

  std::ostringstream edges;
  gffx::graphgen::write_edge_list(graph, edges);

  ordered_json j;
  j["n"] = graph.n_vertices;
  j["r"] = graph.degree;
  j["seed"] = c.master_seed;
  j["attempts"] = attempts;
  j["structure"] = structure_to_json(report);

  if (!c.out_dir.empty()) {
    ensure_out_dir(c.out_dir);
    write_text(std::filesystem::path(c.out_dir) / "graph.edges", edges.str());
    write_text(std::filesystem::path(c.out_dir) / "structure.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << edges.str();
    std::cerr << j.dump(2) << "\n";
  }
  return 0;
}

int cmd_green(const ConfigOverrides& o, const GlobalOpts& g, const std::string& graph_path,
              const std::string& method) {
  auto c = build_config(o, g, pl::Mode::graph);
  c.mode = pl::Mode::graph;
  c.validate();
  maybe_emit_manifest(g, c);

  auto graph = load_or_generate(graph_path, c);
  auto build = method == "eigen" ? gffx::green::BuildMethod::eigendecomposition
                                 : gffx::green::BuildMethod::shift_invert;
  auto G = gffx::green::zero_average_green(graph, build);
  auto inv = G.check_invariants();
  auto bound = gffx::green::green_upper_bound(graph, G, c.K1, c.k3);

  ordered_json j;
  j["n"] = G.n_vertices;
  j["r"] = G.degree;
  j["method"] = method;
  j["invariants"] = {{"max_asymmetry", inv.max_asymmetry},
                     {"max_abs_row_sum", inv.max_abs_row_sum},
                     {"min_eigenvalue", inv.min_eigenvalue},
                     {"near_zero_modes", inv.near_zero_modes},
                     {"ok", inv.ok()}};
  j["decay_bound"] = {{"ok", bound.ok},
                      {"worst_value", bound.worst_value},
                      {"worst_bound", bound.worst_bound},
                      {"fitted_k3", std::isfinite(bound.fitted_k3) ? bound.fitted_k3 : -1.0}};
  std::cout << j.dump(2) << "\n";

  if (!c.out_dir.empty()) {
    ensure_out_dir(c.out_dir);
    std::ofstream os(std::filesystem::path(c.out_dir) / "green.gagf", std::ios::binary);
    gffx::green::write_green_binary(G, os);
    if (!os) gffx::fail(ErrorKind::io_error, "cannot write green.gagf");
    write_text(std::filesystem::path(c.out_dir) / "green.json", j.dump(2) + "\n");
  }
  return inv.ok() ? 0 : 1;
}

int cmd_census(const ConfigOverrides& o, const GlobalOpts& g, const std::string& graph_path) {
  auto c = build_config(o, g, pl::Mode::graph);
  c.mode = pl::Mode::graph;
  c.validate();
  maybe_emit_manifest(g, c);

  auto graph = load_or_generate(graph_path, c);
  auto census = gffx::graphgen::vertex_census(graph, c.census_radius());

  ordered_json j;
  j["n"] = graph.n_vertices;
  j["ell"] = census.ell;
  j["good_count"] = graph.n_vertices - census.bad_count;
  j["bad_count"] = census.bad_count;

  std::ostringstream csv;
  csv << "vertex,good\n";
  for (std::uint32_t x = 0; x < graph.n_vertices; ++x)
    csv << x << "," << int(census.good_flags[x]) << "\n";

  if (g.format == "csv")
    std::cout << csv.str();
  else
    std::cout << j.dump(2) << "\n";

  if (!c.out_dir.empty()) {
    ensure_out_dir(c.out_dir);
    write_text(std::filesystem::path(c.out_dir) / "census.json", j.dump(2) + "\n");
    write_text(std::filesystem::path(c.out_dir) / "census.csv", csv.str());
  }
  return 0;
}

int cmd_sample(const ConfigOverrides& o, const GlobalOpts& g, const std::string& graph_path) {
  auto c = build_config(o, g, pl::Mode::tree);
  c.validate();
  maybe_emit_manifest(g, c);

  std::vector<gffx::gff::FieldSample> samples;
  samples.reserve(c.replicas);
  if (c.mode == pl::Mode::graph) {
    auto graph = load_or_generate(graph_path, c);
    auto G = gffx::green::zero_average_green(graph);
    auto factor = gffx::gff::factor_green(G);
    for (std::uint32_t j = 1; j <= c.replicas; ++j) {
      auto rng = gffx::Rng::for_stream(c.master_seed, j);
      samples.push_back(gffx::gff::sample_graph_gff(factor, rng));
    }
  } else if (c.mode == pl::Mode::tree) {
    auto subtree = gffx::gff::build_subtree(c.n, c.r);
    for (std::uint32_t j = 1; j <= c.replicas; ++j) {
      auto rng = gffx::Rng::for_stream(c.master_seed, j);
      samples.push_back(gffx::gff::sample_tree_gff(subtree, rng));
    }
  } else {
    for (std::uint32_t j = 1; j <= c.replicas; ++j) {
      auto rng = gffx::Rng::for_stream(c.master_seed, j);
      samples.push_back(gffx::gff::sample_iid_field(c.n, rng));
    }
  }

  std::ostringstream out;
  if (g.format == "csv") {
    out << "replica,stream";
    for (std::uint32_t x = 0; x < c.n; ++x) out << ",v" << x;
    out << "\n";
    char buf[40];
    for (std::size_t rep = 0; rep < samples.size(); ++rep) {
      out << rep << "," << samples[rep].rng_stream_id;
      for (std::uint32_t x = 0; x < c.n; ++x) {
        std::snprintf(buf, sizeof buf, "%.17g", samples[rep].values[x]);
        out << "," << buf;
      }
      out << "\n";
    }
  } else {
    ordered_json arr = ordered_json::array();
    for (std::size_t rep = 0; rep < samples.size(); ++rep) {
      std::vector<double> vals(samples[rep].values.data(),
                               samples[rep].values.data() + samples[rep].values.size());
      arr.push_back({{"replica", rep},
                     {"stream", samples[rep].rng_stream_id},
                     {"values", vals}});
    }
    out << arr.dump(2) << "\n";
  }

  if (!c.out_dir.empty()) {
    ensure_out_dir(c.out_dir);
    std::string name = g.format == "csv" ? "samples.csv" : "samples.json";
    write_text(std::filesystem::path(c.out_dir) / name, out.str());
  } else {
    std::cout << out.str();
  }
  return 0;
}

int run_and_emit(const pl::ExperimentConfig& c, bool full_report) {
  pl::RunReport rep = c.mode == pl::Mode::graph ? pl::run_graph_pipeline(c)
                                                : pl::run_tree_pipeline(c);
  pl::write_outputs(rep);
  if (full_report) {
    std::cout << pl::report_to_json(rep);
  } else {
    ordered_json whole = ordered_json::parse(pl::report_to_json(rep));
    ordered_json j;
    j["passed"] = whole["passed"];
    j["failures"] = whole["failures"];
    j["skipped"] = whole["skipped"];
    if (whole.contains("field_stats")) j["field_stats"] = whole["field_stats"];
    std::cout << j.dump(2) << "\n";
  }
  return rep.passed ? 0 : 1;
}

int cmd_extremes(const ConfigOverrides& o, const GlobalOpts& g) {
  auto c = build_config(o, g, pl::Mode::tree);
  c.validate();
  maybe_emit_manifest(g, c);
  return run_and_emit(c, false);
}

int cmd_compare(const ConfigOverrides& o, const GlobalOpts& g) {
  auto c = build_config(o, g, pl::Mode::tree);
  c.validate();
  maybe_emit_manifest(g, c);
  pl::RunReport rep = pl::run_comparison_suite(c);
  pl::write_outputs(rep);
  std::cout << pl::report_to_json(rep);
  return rep.passed ? 0 : 1;
}

int cmd_pipeline(const ConfigOverrides& o, const GlobalOpts& g) {
  auto c = build_config(o, g, pl::Mode::tree);
  c.validate();
  maybe_emit_manifest(g, c);
  return run_and_emit(c, true);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian free field extremes on regular trees and random regular graphs"};
  app.require_subcommand(0, 1);

  GlobalOpts globals;
  app.add_option("--seed", globals.seed, "Master seed (overrides config)");
  app.add_option("--out-dir", globals.out_dir, "Directory for file outputs");
  app.add_option("--format", globals.format, "Tabular output format")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_flag("--manifest", globals.manifest, "Emit provenance JSON (versions, seeds, tolerances)");
  app.set_version_flag("--version", kVersion);

  int exit_code = 0;

  auto* gen = app.add_subcommand("gen-graph", "Generate a random r-regular simple graph");
  gen->fallthrough();
  auto gen_o = std::make_shared<ConfigOverrides>();
  add_config_options(gen, *gen_o, false);
  gen->callback([&, gen_o] { exit_code = cmd_gen_graph(*gen_o, globals); });

  auto* grn = app.add_subcommand("green", "Build the zero-average Green operator");
  grn->fallthrough();
  auto grn_o = std::make_shared<ConfigOverrides>();
  auto grn_path = std::make_shared<std::string>();
  auto grn_method = std::make_shared<std::string>("shift-invert");
  add_config_options(grn, *grn_o, false);
  grn->add_option("--graph", *grn_path, "Edge-list file (generated when omitted)");
  grn->add_option("--method", *grn_method, "Construction method")
      ->check(CLI::IsMember({"shift-invert", "eigen"}));
  grn->callback(
      [&, grn_o, grn_path, grn_method] { exit_code = cmd_green(*grn_o, globals, *grn_path, *grn_method); });

  auto* cen = app.add_subcommand("census", "Classify vertices by tree-like neighborhoods");
  cen->fallthrough();
  auto cen_o = std::make_shared<ConfigOverrides>();
  auto cen_path = std::make_shared<std::string>();
  add_config_options(cen, *cen_o, false);
  cen->add_option("--graph", *cen_path, "Edge-list file (generated when omitted)");
  cen->callback([&, cen_o, cen_path] { exit_code = cmd_census(*cen_o, globals, *cen_path); });

  auto* smp = app.add_subcommand("sample", "Draw field replicas and export them");
  smp->fallthrough();
  auto smp_o = std::make_shared<ConfigOverrides>();
  auto smp_path = std::make_shared<std::string>();
  add_config_options(smp, *smp_o, true);
  smp->add_option("--graph", *smp_path, "Edge-list file for mode graph");
  smp->callback([&, smp_o, smp_path] { exit_code = cmd_sample(*smp_o, globals, *smp_path); });

  auto* ext = app.add_subcommand("extremes", "Extract extremal processes and run the limit tests");
  ext->fallthrough();
  auto ext_o = std::make_shared<ConfigOverrides>();
  add_config_options(ext, *ext_o, true);
  ext->callback([&, ext_o] { exit_code = cmd_extremes(*ext_o, globals); });

  auto* cmp = app.add_subcommand("compare", "Run the Gaussian comparison verification suite");
  cmp->fallthrough();
  auto cmp_o = std::make_shared<ConfigOverrides>();
  add_config_options(cmp, *cmp_o, false);
  cmp->callback([&, cmp_o] { exit_code = cmd_compare(*cmp_o, globals); });

  auto* pip = app.add_subcommand("pipeline", "Run the full experiment pipeline for a config");
  pip->fallthrough();
  auto pip_o = std::make_shared<ConfigOverrides>();
  add_config_options(pip, *pip_o, true);
  pip->callback([&, pip_o] { exit_code = cmd_pipeline(*pip_o, globals); });

  try {
    app.parse(argc, argv);
    if (app.get_subcommands().empty()) {
      if (globals.manifest) {
        pl::ExperimentConfig c;
        if (globals.seed) c.master_seed = *globals.seed;
        if (!globals.out_dir.empty()) c.out_dir = globals.out_dir;
        maybe_emit_manifest(globals, c);
      } else {
        std::cout << app.help();
      }
    }
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return exit_code;
}
