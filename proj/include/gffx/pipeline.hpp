#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gffx/comparison.hpp"
#include "gffx/extremes.hpp"
#include "gffx/graphgen.hpp"
#include "gffx/green.hpp"
#include "gffx/stats.hpp"

namespace gffx::pipeline {

enum class Mode { tree, graph, iid };
const char* to_string(Mode m) noexcept;
Mode mode_from_string(const std::string& s);

/// Everything one run needs; round-trips losslessly through both key=value
/// text and JSON. Seeding: stream 0 of master_seed drives structure (the
/// graph draw), streams 1..replicas drive the field replicas; ladder cell
/// (size index i, seed s) uses stream (s+1)*100000 + i of the suite seed.
struct ExperimentConfig {
  Mode mode = Mode::tree;
  std::uint32_t n = 1024;
  std::uint32_t r = 3;
  std::uint32_t replicas = 200;
  std::uint64_t master_seed = 1;
  std::optional<std::uint32_t> ell;   // census radius; default floor(0.3 log2 n)
  std::optional<std::uint32_t> ell0;  // tree-agreement radius; default = census radius
  double k3 = 0.2;
  double delta = 0.1;
  double K1 = 3.0;
  std::vector<stats::Interval> intervals;  // default occupancy windows
  std::string out_dir;                     // empty: no files written

  // Tolerance overrides for the pass/fail summary.
  double ks_alpha = 1e-3;
  double ppp_alpha = 1e-3;
  double laplace_tol = 0.05;
  double slope_tol = 0.15;

  // Comparison-suite grids and ladders.
  std::vector<double> rho_grid;             // default {0, 0.3, 0.7, 0.9}
  std::vector<double> u_grid;               // default {1, 2, 3}
  std::vector<stats::Interval> windows;     // default {(0,1), (-0.5,0.5)}
  std::vector<std::uint32_t> tree_ladder;   // default {2^10, 2^12, 2^14, 2^16, 2^18}
  std::vector<std::uint32_t> graph_ladder;  // default {500, 1000, 2000}
  std::uint32_t ladder_seeds = 10;

  ExperimentConfig();
  void validate() const;  // invalid-config on any out-of-range field
  std::uint32_t census_radius() const;
  std::uint32_t agreement_radius() const;
};

std::string config_to_text(const ExperimentConfig& c);
std::string config_to_json(const ExperimentConfig& c);
/// Accepts both formats (JSON when the first non-space byte is '{').
ExperimentConfig parse_config(const std::string& text);

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

/// Per-replica statistics of one extraction variant plus the aggregate tests.
struct FieldStatistics {
  std::string label;  // "all" | "good_only"
  extremes::RescalingConstants constants;
  std::vector<double> maxima;                    // rescaled max per replica
  std::vector<std::vector<std::size_t>> counts;  // [interval][replica]
  std::vector<std::vector<double>> inner_sums;   // [canonical ramp][replica]
  extremes::KsReport ks;                         // ks.n == 0: not run
  std::vector<extremes::PppIntervalReport> interval_reports;
  std::vector<extremes::LaplaceReport> laplace_reports;
  bool passed = false;
  std::vector<std::string> failures;
};

struct CensusSummary {
  std::uint32_t ell = 0;
  std::size_t good_count = 0;
  std::size_t bad_count = 0;
};

struct TreeLadderReport {
  std::vector<comparison::TreeComparisonSum> rows;
  double slope = 0.0;      // least-squares log-log slope of exact_sum vs n
  double predicted = 0.0;  // (2 - r) / r
  bool strictly_decreasing = false;
  bool slope_ok = false;
};

struct GraphLadderSeed {
  std::uint32_t seed_index = 0;
  std::vector<comparison::GraphComparisonSum> rows;  // one per ladder size
  bool decreasing = false;                           // total strictly decreasing
};

struct GraphLadderReport {
  std::vector<GraphLadderSeed> seeds;
  std::size_t decreasing_count = 0;
  std::size_t required = 0;  // ceil(0.9 * seeds)
  bool ok = false;
};

struct DominanceCell {
  double rho = 0.0;
  double u = 0.0;
  stats::Interval window;
  comparison::ProbEstimate quadrature;
  comparison::ProbEstimate mc;
  double bound = 0.0;
  bool dominated_with_margin = false;  // bound - value > 3 * quadrature error
  bool cross_consistent = false;       // |quad - mc| <= 3 * combined sigma
};

struct InterpolationCase {
  std::string label;
  comparison::InterpolationCheck check;
  double tolerance = 0.0;
  bool passed = false;
};

/// One run's full output. The JSON serialization of everything except
/// `timings` is deterministic for a fixed config.
struct RunReport {
  ExperimentConfig config;
  std::vector<StageTiming> timings;
  std::vector<std::string> skipped;   // "stage: reason"
  std::vector<std::string> failures;  // failed statistical gates
  bool passed = false;

  // Field pipelines.
  std::uint32_t generation_attempts = 0;
  std::optional<graphgen::GraphRegularityReport> structure;
  std::optional<green::GreenOperator::InvariantReport> green_invariants;
  std::optional<green::GreenBoundCheck> green_bound;
  std::optional<CensusSummary> census;
  std::optional<green::GreenTreeComparison> tree_agreement;
  std::vector<FieldStatistics> field_stats;
  std::optional<comparison::GraphComparisonSum> graph_comparison;

  // Comparison suite.
  std::vector<InterpolationCase> interpolation_cases;
  std::vector<DominanceCell> dominance_grid;
  std::optional<comparison::EqToZeroReport> eq_tozero;
  double eq_tozero_tree_bound = 0.0;  // exact tree sum of the reference family
  std::optional<TreeLadderReport> tree_ladder;
  std::optional<GraphLadderReport> graph_ladder;
};

/// Field pipeline on the tree subtree (mode=tree) or the iid reference
/// ensemble (mode=iid): sample -> extract -> KS + occupancy + Laplace.
RunReport run_tree_pipeline(const ExperimentConfig& config);

/// Graph pipeline: generate -> structure -> green (+ invariants, decay bound)
/// -> census -> tree agreement -> factor -> sample -> extract (all and
/// good-only) -> tests -> pair comparison sum. Skipped stages carry reasons.
RunReport run_graph_pipeline(const ExperimentConfig& config);

/// Interpolation identity cases, the dominance grid, the discrepancy sum
/// example, and both decay ladders.
RunReport run_comparison_suite(const ExperimentConfig& config);

/// Deterministic statistical report (no timings), byte-stable across reruns.
std::string report_to_json(const RunReport& rep);
/// Wall-clock stage timings, separated so the main report stays reproducible.
std::string timings_to_json(const RunReport& rep);

/// Per-replica rows: replica, stream, max, one count column per interval,
/// one inner-sum column per canonical ramp.
std::string replica_csv(const FieldStatistics& stats);
/// Ladder rows (n, sum, bound, slope) for decay studies.
std::string tree_ladder_csv(const TreeLadderReport& ladder);
std::string graph_ladder_csv(const GraphLadderReport& ladder);

/// Writes report.json, timings.json, and the CSVs into config.out_dir
/// (created if missing). No-op when out_dir is empty.
void write_outputs(const RunReport& rep);

}  // namespace gffx::pipeline
