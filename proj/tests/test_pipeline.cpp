#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "gffx/error.hpp"
#include "gffx/pipeline.hpp"

using namespace gffx;
namespace pl = gffx::pipeline;

namespace {

bool has_entry(const std::vector<std::string>& entries, const std::string& needle) {
  for (const auto& e : entries)
    if (e.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config defaults and validation") {
  pl::ExperimentConfig c;
  CHECK(c.mode == pl::Mode::tree);
  CHECK(c.n == 1024);
  CHECK(c.r == 3);
  CHECK(c.replicas == 200);
  CHECK(c.intervals.size() == 4);
  CHECK(c.rho_grid.size() == 4);
  CHECK(c.windows.size() == 2);
  CHECK(c.tree_ladder.size() == 5);
  CHECK_NOTHROW(c.validate());
  CHECK(c.census_radius() == 3);  // floor(0.3 * log2 1024)

  pl::ExperimentConfig bad = c;
  bad.n = 2;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.r = 2;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.replicas = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.k3 = -0.5;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.ks_alpha = 2.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.tree_ladder = {1024, 1024};
  CHECK_THROWS_AS(bad.validate(), Error);

  CHECK(pl::mode_from_string("graph") == pl::Mode::graph);
  CHECK(std::string(pl::to_string(pl::Mode::iid)) == "iid");
  CHECK_THROWS_AS(pl::mode_from_string("forest"), Error);
}

TEST_CASE("config round trips") {
  pl::ExperimentConfig c;
  c.mode = pl::Mode::graph;
  c.n = 512;
  c.replicas = 321;
  c.master_seed = 987654321;
  c.ell = 2;
  c.K1 = 4.5;
  c.intervals = {{0.0, std::numeric_limits<double>::infinity()}, {-2.5, -1.5}};
  c.rho_grid = {0.0, 0.55};
  c.tree_ladder = {1024, 2048};
  c.ladder_seeds = 3;

  auto from_text = pl::parse_config(pl::config_to_text(c));
  auto from_json = pl::parse_config(pl::config_to_json(c));
  for (const auto& back : {from_text, from_json}) {
    CHECK(back.mode == pl::Mode::graph);
    CHECK(back.n == 512);
    CHECK(back.replicas == 321);
    CHECK(back.master_seed == 987654321);
    REQUIRE(back.ell.has_value());
    CHECK(*back.ell == 2);
    CHECK_FALSE(back.ell0.has_value());
    CHECK(back.K1 == 4.5);
    REQUIRE(back.intervals.size() == 2);
    CHECK(std::isinf(back.intervals[0].hi));
    CHECK(back.intervals[1].lo == -2.5);
    CHECK(back.rho_grid == std::vector<double>{0.0, 0.55});
    CHECK(back.tree_ladder == std::vector<std::uint32_t>{1024, 2048});
    CHECK(back.ladder_seeds == 3);
  }

  // Text format tolerates comments and blank lines.
  auto sparse = pl::parse_config("# run setup\n\nmode = iid\nn = 256\nreplicas = 120\n");
  CHECK(sparse.mode == pl::Mode::iid);
  CHECK(sparse.n == 256);
  CHECK(sparse.replicas == 120);
  CHECK(sparse.r == 3);  // untouched default

  CHECK_THROWS_AS(pl::parse_config("mode = iid\nwibble = 3\n"), Error);
  CHECK_THROWS_AS(pl::parse_config("{\"wibble\": 3}"), Error);
  CHECK_THROWS_AS(pl::parse_config("{ not json"), Error);
  CHECK_THROWS_AS(pl::parse_config("n 256\n"), Error);
}

TEST_CASE("iid pipeline run") {
  pl::ExperimentConfig c;
  c.mode = pl::Mode::iid;
  c.n = 256;
  c.replicas = 150;
  c.master_seed = 11;
  auto rep = pl::run_tree_pipeline(c);
  REQUIRE(rep.field_stats.size() == 1);
  const auto& fs = rep.field_stats[0];
  CHECK(fs.label == "all");
  CHECK(fs.maxima.size() == 150);
  CHECK(fs.ks.n == 150);
  CHECK(fs.counts.size() == c.intervals.size());
  CHECK(fs.inner_sums.size() == 3);
  CHECK_FALSE(rep.timings.empty());

  // The statistical report is byte-stable for a fixed config.
  auto rep2 = pl::run_tree_pipeline(c);
  CHECK(pl::report_to_json(rep) == pl::report_to_json(rep2));
}

TEST_CASE("tree pipeline run") {
  pl::ExperimentConfig c;
  c.mode = pl::Mode::tree;
  c.n = 128;
  c.replicas = 120;
  c.master_seed = 21;
  auto rep = pl::run_tree_pipeline(c);
  REQUIRE(rep.field_stats.size() == 1);
  CHECK(rep.field_stats[0].maxima.size() == 120);
  CHECK(rep.field_stats[0].ks.n == 120);
  CHECK_FALSE(rep.field_stats[0].constants.a_n == 0.0);

  pl::ExperimentConfig g = c;
  g.mode = pl::Mode::graph;
  CHECK_THROWS_AS(pl::run_tree_pipeline(g), Error);
}

TEST_CASE("replica skip below the ks threshold") {
  pl::ExperimentConfig c;
  c.mode = pl::Mode::iid;
  c.n = 64;
  c.replicas = 30;
  c.master_seed = 5;
  auto rep = pl::run_tree_pipeline(c);
  CHECK(has_entry(rep.skipped, "needs at least 100 replicas"));
  CHECK(rep.field_stats[0].ks.n == 0);
}

TEST_CASE("graph pipeline on the complete graph") {
  // K4 is a pathological but legal input: every vertex is bad at radius 2,
  // so the good-only variant is skipped and the comparison total clamps to 0.
  pl::ExperimentConfig c;
  c.mode = pl::Mode::graph;
  c.n = 4;
  c.r = 3;
  c.replicas = 150;
  c.master_seed = 31;
  c.ell = 2;
  auto rep = pl::run_graph_pipeline(c);
  REQUIRE(rep.census.has_value());
  CHECK(rep.census->bad_count == 4);
  CHECK(rep.census->good_count == 0);
  CHECK(has_entry(rep.skipped, "no good vertices"));
  REQUIRE(rep.graph_comparison.has_value());
  CHECK(rep.graph_comparison->total == 0.0);
  CHECK(rep.graph_comparison->clamped_pairs == 6);
  REQUIRE(rep.green_invariants.has_value());
  CHECK(rep.green_invariants->ok());
  REQUIRE(rep.field_stats.size() == 1);  // good-only variant absent
  CHECK(rep.field_stats[0].label == "all");
}

TEST_CASE("graph pipeline run") {
  pl::ExperimentConfig c;
  c.mode = pl::Mode::graph;
  c.n = 64;
  c.replicas = 120;
  c.master_seed = 41;
  auto rep = pl::run_graph_pipeline(c);
  REQUIRE(rep.structure.has_value());
  REQUIRE(rep.green_invariants.has_value());
  CHECK(rep.green_invariants->ok());
  REQUIRE(rep.green_bound.has_value());
  REQUIRE(rep.census.has_value());
  CHECK(rep.census->good_count + rep.census->bad_count == 64);
  CHECK(rep.generation_attempts >= 1);
  CHECK(rep.field_stats.size() == (rep.census->good_count > 0 ? 2 : 1));
  REQUIRE(rep.graph_comparison.has_value());
  CHECK(rep.graph_comparison->near_sum >= 0.0);

  auto rep2 = pl::run_graph_pipeline(c);
  CHECK(pl::report_to_json(rep) == pl::report_to_json(rep2));
}

TEST_CASE("comparison suite") {
  pl::ExperimentConfig c;
  c.mode = pl::Mode::tree;
  c.master_seed = 7;
  c.rho_grid = {0.0, 0.5};
  c.u_grid = {2.0};
  c.windows = {{0.0, 1.0}};
  c.tree_ladder = {1024, 4096, 16384};
  c.slope_tol = 0.2;
  // sizes below ~256 sit in the fluctuation regime where per-draw cycle
  // structure can break monotonicity for any seed
  c.graph_ladder = {256, 512, 1024};
  c.ladder_seeds = 4;
  auto rep = pl::run_comparison_suite(c);

  REQUIRE(rep.interpolation_cases.size() >= 2);
  for (const auto& icase : rep.interpolation_cases) {
    CHECK(icase.passed);
    CHECK(icase.check.abs_gap <= icase.tolerance);
  }

  CHECK(rep.dominance_grid.size() == 2);  // 2 rhos x 1 u x 1 window
  for (const auto& cell : rep.dominance_grid) {
    CHECK(cell.dominated_with_margin);
    CHECK(cell.cross_consistent);
    CHECK(cell.bound > cell.quadrature.value);
  }

  REQUIRE(rep.eq_tozero.has_value());
  CHECK(rep.eq_tozero->dominated);
  CHECK(rep.eq_tozero->value <= rep.eq_tozero_tree_bound);

  REQUIRE(rep.tree_ladder.has_value());
  CHECK(rep.tree_ladder->rows.size() == 3);
  CHECK(rep.tree_ladder->strictly_decreasing);
  CHECK(rep.tree_ladder->predicted == doctest::Approx(-1.0 / 3.0));
  CHECK(std::abs(rep.tree_ladder->slope - rep.tree_ladder->predicted) <= c.slope_tol);
  CHECK(rep.tree_ladder->slope_ok);

  REQUIRE(rep.graph_ladder.has_value());
  CHECK(rep.graph_ladder->seeds.size() == 4);
  CHECK(rep.graph_ladder->required == 4);  // ceil(0.9 * 4)
  CHECK(rep.graph_ladder->decreasing_count >= rep.graph_ladder->required);
  CHECK(rep.graph_ladder->ok);
  CHECK(rep.passed);

  auto rep2 = pl::run_comparison_suite(c);
  CHECK(pl::report_to_json(rep) == pl::report_to_json(rep2));
}

TEST_CASE("csv serializations") {
  pl::ExperimentConfig c;
  c.mode = pl::Mode::iid;
  c.n = 64;
  c.replicas = 3;
  c.master_seed = 2;
  auto rep = pl::run_tree_pipeline(c);
  auto csv = pl::replica_csv(rep.field_stats[0]);
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  CHECK(header.substr(0, 19) == "replica,stream,max,");
  int rows = 0;
  for (std::string line; std::getline(lines, line);)
    if (!line.empty()) ++rows;
  CHECK(rows == 3);
}

TEST_CASE("output files") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "gffx_pipeline_out";
  fs::remove_all(dir);

  pl::ExperimentConfig c;
  c.mode = pl::Mode::iid;
  c.n = 64;
  c.replicas = 10;
  c.master_seed = 3;
  c.out_dir = dir.string();
  auto rep = pl::run_tree_pipeline(c);
  pl::write_outputs(rep);

  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "timings.json"));
  CHECK(fs::exists(dir / "replicas_all.csv"));

  std::ifstream in(dir / "report.json");
  nlohmann::json doc = nlohmann::json::parse(in);
  CHECK(doc.contains("config"));
  CHECK(doc.contains("field_stats"));
  CHECK(doc["config"]["n"] == 64);

  fs::remove_all(dir);
}

}  // TEST_SUITE
