// Acceptance gate: one line per criterion, exit 0 only if every selected
// criterion passes. Usage: gffx_acceptance [id ...] with ids in 1..11
// (default: all). Statistical criteria run at pinned seeds; the tolerances
// are calibrated to the sizes used here, not to asymptotic rates.

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gffx/comparison.hpp"
#include "gffx/error.hpp"
#include "gffx/extremes.hpp"
#include "gffx/gff.hpp"
#include "gffx/graphgen.hpp"
#include "gffx/green.hpp"
#include "gffx/pipeline.hpp"
#include "gffx/rng.hpp"
#include "gffx/stats.hpp"

using namespace gffx;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string details;
};

// ---------------------------------------------------------------- criterion 1

Outcome exact_tree_green() {
  double worst_rel = 0.0;
  for (std::uint32_t d = 0; d <= 30; ++d) {
    double expect = 2.0 * std::pow(2.0, -double(d));
    double got = green::tree_green(3, d);
    worst_rel = std::max(worst_rel, std::abs(got - expect) / expect);
  }
  if (worst_rel > 1e-15) return {false, fmt("closed form off, rel err %.3e", worst_rel)};

  // Discrete walk on the 3-regular tree as a depth birth-death chain: from
  // the root the walk must leave, at depth d >= 1 it steps down with
  // probability 1/3. Expected visits to the root is g(o,o) = 2; truncating
  // at depth 30 loses under 1e-8 of it.
  Rng rng(1902);
  const int walks = 1000000;
  std::uint64_t visits = 0;
  for (int w = 0; w < walks; ++w) {
    std::uint32_t depth = 0;
    ++visits;
    while (depth <= 30) {
      if (depth == 0) {
        depth = 1;
      } else if (rng.uniform01() < 1.0 / 3.0) {
        --depth;
        if (depth == 0) ++visits;
      } else {
        ++depth;
      }
    }
  }
  double mean = double(visits) / walks;
  bool ok = std::abs(mean - 2.0) <= 0.02;
  return {ok, fmt("closed-form rel err %.1e; walk mean %.4f vs 2 (tol 0.02)", worst_rel, mean)};
}

// ---------------------------------------------------------------- criterion 2

Outcome green_oracle() {
  auto k4 = graphgen::complete_graph_k4();
  auto G4 = green::zero_average_green(k4);
  double worst_k4 = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double expect = (i == j) ? 9.0 / 16.0 : -3.0 / 16.0;
      worst_k4 = std::max(worst_k4, std::abs(G4.matrix(i, j) - expect));
    }
  if (worst_k4 > 1e-10) return {false, fmt("K4 mismatch %.3e", worst_k4)};

  double worst_cross = 0.0;
  for (std::uint32_t n : {16u, 32u, 64u}) {
    auto g = graphgen::generate_simple(n, 3, derive_stream(2001, n)).graph;
    auto a = green::zero_average_green(g, green::BuildMethod::shift_invert).matrix;
    auto b = green::zero_average_green(g, green::BuildMethod::eigendecomposition).matrix;
    auto c = green::green_time_quadrature(g);
    worst_cross = std::max(worst_cross, (a - b).cwiseAbs().maxCoeff());
    worst_cross = std::max(worst_cross, (a - c).cwiseAbs().maxCoeff());
    worst_cross = std::max(worst_cross, (b - c).cwiseAbs().maxCoeff());
  }
  bool ok = worst_cross <= 1e-6;
  return {ok, fmt("K4 err %.1e; construction spread %.2e (tol 1e-6)", worst_k4, worst_cross)};
}

// ---------------------------------------------------------------- criterion 3

Outcome sampler_covariance() {
  const int reps = 200000;

  auto t = gff::build_subtree(40, 3);
  Eigen::MatrixXd target(40, 40);
  for (std::uint32_t x = 0; x < 40; ++x)
    for (std::uint32_t y = 0; y < 40; ++y)
      target(x, y) = green::tree_green(3, gff::tree_distance(t, x, y));
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(40, 40);
  for (int rep = 1; rep <= reps; ++rep) {
    Rng rng = Rng::for_stream(5100, std::uint64_t(rep));
    auto s = gff::sample_tree_gff(t, rng);
    acc.noalias() += s.values * s.values.transpose();
  }
  double tree_dev = (acc / reps - target).cwiseAbs().maxCoeff();

  auto g = graphgen::generate_simple(64, 3, 5200).graph;
  auto G = green::zero_average_green(g);
  auto f = gff::factor_green(G);
  Eigen::MatrixXd gacc = Eigen::MatrixXd::Zero(64, 64);
  for (int rep = 1; rep <= reps; ++rep) {
    Rng rng = Rng::for_stream(5201, std::uint64_t(rep));
    auto s = gff::sample_graph_gff(f, rng);
    gacc.noalias() += s.values * s.values.transpose();
  }
  double graph_dev = (gacc / reps - G.matrix).cwiseAbs().maxCoeff();

  bool ok = tree_dev <= 0.02 && graph_dev <= 0.02;
  return {ok, fmt("tree max dev %.4f, graph max dev %.4f (tol 0.02)", tree_dev, graph_dev)};
}

// ---------------------------------------------------------------- criterion 4

Outcome mixing_bound() {
  std::vector<graphgen::RegularGraph> graphs;
  graphs.push_back(graphgen::petersen_graph());
  for (std::uint32_t n : {32u, 64u, 128u, 256u})
    for (std::uint64_t s = 0; s < 5; ++s)
      graphs.push_back(graphgen::generate_simple(n, 3, derive_stream(5400 + s, n)).graph);

  int violations = 0;
  double worst_margin = kInf;
  for (const auto& g : graphs)
    for (double t : {0.5, 1.0, 2.0, 4.0, 8.0}) {
      auto dev = green::heat_kernel_max_deviation(g, t);
      if (!dev.within_bound) ++violations;
      worst_margin = std::min(worst_margin, dev.bound - dev.deviation);
    }
  bool ok = violations == 0;
  return {ok, fmt("%zu graphs x 5 times, %d violations, slimmest margin %.2e", graphs.size(),
                  violations, worst_margin)};
}

// ---------------------------------------------------------------- criterion 5

Outcome dominance_grid() {
  pipeline::ExperimentConfig defaults;
  int cells = 0, failures = 0;
  double worst_ratio = 0.0;
  std::uint64_t cell_id = 0;
  for (double rho : defaults.rho_grid)
    for (double u : defaults.u_grid)
      for (const auto& S : defaults.windows) {
        ++cell_id;
        auto quad = comparison::bivariate_prob(rho, u, S);
        Rng rng = Rng::for_stream(5500, cell_id);
        auto mc =
            comparison::bivariate_prob(rho, u, S, comparison::ProbMethod::mc, 1000000, &rng);
        double bound = comparison::bivariate_bound(rho, u, S);
        double sigma = std::max({quad.error, mc.error, 1e-15});
        ++cells;
        if (!(bound - quad.value > 3.0 * sigma)) ++failures;
        worst_ratio = std::max(worst_ratio, quad.value / bound);
      }
  bool ok = failures == 0;
  return {ok, fmt("%d cells, %d margin failures, worst prob/bound %.3f", cells, failures,
                  worst_ratio)};
}

// ---------------------------------------------------------------- criterion 6

Outcome interpolation_identity() {
  Rng rng = Rng::for_stream(5600, 0);
  auto random_correlation = [&](int n) {
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = rng.gaussian();
    Eigen::MatrixXd C = A * A.transpose();
    Eigen::VectorXd d = C.diagonal().cwiseSqrt();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) C(i, j) /= d(i) * d(j);
    return C;
  };

  double worst_family = 0.0, worst_product = 0.0;
  for (int n : {2, 3})
    for (int trial = 0; trial < 10; ++trial) {
      comparison::InterpolationFamily fam;
      fam.cov0 = random_correlation(n);
      fam.cov1 = random_correlation(n);
      auto prod =
          comparison::interpolation_identity_check(fam, comparison::TestFunctional::product_pair());
      worst_product = std::max(worst_product, prod.abs_gap);
      for (auto F : {comparison::TestFunctional::ramp_product(),
                     comparison::TestFunctional::exp_neg_sum()}) {
        auto check = comparison::interpolation_identity_check(fam, F);
        worst_family = std::max(worst_family, check.abs_gap);
      }
    }
  bool ok = worst_product <= 1e-10 && worst_family <= 1e-3;
  return {ok, fmt("product gap %.2e (tol 1e-10), family gap %.2e (tol 1e-3)", worst_product,
                  worst_family)};
}

// ------------------------------------------------------ criteria 7 and 8 core

struct TreeRun {
  extremes::KsReport ks;
  double statistic = 0.0;
  double mean_upper = 0.0;  // mean count in (0, inf)
  double mean_band = 0.0;   // mean count in (-1, 0)
};

const TreeRun& tree_extremes_run() {
  static std::optional<TreeRun> cached;
  if (cached) return *cached;

  const std::uint32_t n = 1u << 16;
  const int reps = 2000;
  auto t = gff::build_subtree(n, 3);
  auto c = extremes::rescaling_constants(n, 3);
  stats::Interval upper{0.0, kInf}, band{-1.0, 0.0};
  std::vector<double> maxima;
  maxima.reserve(reps);
  std::uint64_t upper_total = 0, band_total = 0;
  for (int rep = 1; rep <= reps; ++rep) {
    Rng rng = Rng::for_stream(5700, std::uint64_t(rep));
    auto s = gff::sample_tree_gff(t, rng);
    auto p = extremes::extract_process(s, c);
    maxima.push_back(p.max_point);
    upper_total += extremes::count_in(p, upper);
    band_total += extremes::count_in(p, band);
  }
  TreeRun run;
  run.ks = extremes::ks_gumbel(maxima);
  run.statistic = run.ks.statistic;
  run.mean_upper = double(upper_total) / reps;
  run.mean_band = double(band_total) / reps;
  cached = run;
  return *cached;
}

Outcome gumbel_convergence() {
  const auto& tree = tree_extremes_run();
  bool tree_ok = tree.ks.statistic <= 0.05 && tree.ks.p_value > 0.001;

  const std::uint32_t n = 2048;
  const int reps = 1000;
  auto g = graphgen::generate_simple(n, 3, 5800).graph;
  auto G = green::zero_average_green(g);
  std::uint32_t ell = std::uint32_t(0.3 * std::log2(double(n)));
  auto census = graphgen::vertex_census(g, ell);
  if (census.bad_count == census.good_flags.size())
    return {false, "graph run has no good vertices"};
  auto f = gff::factor_green(G);
  auto c = extremes::rescaling_constants(n, 3);
  std::vector<double> maxima;
  maxima.reserve(reps);
  for (int rep = 1; rep <= reps; ++rep) {
    Rng rng = Rng::for_stream(5800, std::uint64_t(rep));
    auto s = gff::sample_graph_gff(f, rng);
    auto p = extremes::extract_process(s, c, nullptr, &census.good_flags);
    maxima.push_back(p.max_point);
  }
  auto gks = extremes::ks_gumbel(maxima);
  bool graph_ok = gks.statistic <= 0.08 && gks.p_value > 0.001;

  return {tree_ok && graph_ok,
          fmt("tree D=%.4f p=%.4f (tol 0.05); graph D=%.4f p=%.4f (tol 0.08)",
              tree.ks.statistic, tree.ks.p_value, gks.statistic, gks.p_value)};
}

Outcome ppp_intensity() {
  const auto& tree = tree_extremes_run();
  bool upper_ok = tree.mean_upper >= 0.8 && tree.mean_upper <= 1.2;
  bool band_ok = tree.mean_band >= 1.4 && tree.mean_band <= 2.1;
  return {upper_ok && band_ok,
          fmt("mean count (0,inf) %.3f in [0.8,1.2]; (-1,0) %.3f in [1.4,2.1]", tree.mean_upper,
              tree.mean_band)};
}

// ---------------------------------------------------------------- criterion 9

Outcome comparison_decay() {
  std::vector<std::uint32_t> sizes = {1u << 10, 1u << 12, 1u << 14, 1u << 16, 1u << 18};
  std::vector<double> lns, lnsum;
  bool decreasing = true;
  double prev = kInf;
  for (auto n : sizes) {
    auto s = comparison::comparison_sum_tree(n, 3);
    if (s.exact_sum >= prev) decreasing = false;
    prev = s.exact_sum;
    lns.push_back(std::log(double(n)));
    lnsum.push_back(std::log(s.exact_sum));
  }
  double mx = std::accumulate(lns.begin(), lns.end(), 0.0) / lns.size();
  double my = std::accumulate(lnsum.begin(), lnsum.end(), 0.0) / lnsum.size();
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < lns.size(); ++i) {
    num += (lns[i] - mx) * (lnsum[i] - my);
    den += (lns[i] - mx) * (lns[i] - mx);
  }
  double slope = num / den;
  bool slope_ok = std::abs(slope - (-1.0 / 3.0)) <= 0.15;

  int decreasing_seeds = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    double last = kInf;
    bool mono = true;
    std::uint32_t idx = 0;
    for (std::uint32_t n : {500u, 1000u, 2000u}) {
      auto g =
          graphgen::generate_simple(n, 3, derive_stream(5900, (seed + 1) * 100000 + idx)).graph;
      ++idx;
      auto G = green::zero_average_green(g);
      auto sum = comparison::comparison_sum_graph(g, G, 0.2, 0.1);
      if (sum.total >= last) mono = false;
      last = sum.total;
    }
    if (mono) ++decreasing_seeds;
  }
  bool graph_ok = decreasing_seeds >= 9;

  return {decreasing && slope_ok && graph_ok,
          fmt("tree ladder %s, slope %.4f vs -1/3 (tol 0.15); %d/10 graph seeds decreasing",
              decreasing ? "decreasing" : "NOT decreasing", slope, decreasing_seeds)};
}

// --------------------------------------------------------------- criterion 10

Outcome bad_vertex_tail() {
  auto rep = graphgen::bad_tail_check(2000, 3, 2, {1.0, 2.0, 4.0, 8.0}, 1000, 6000);
  bool scale_ok = std::abs(rep.scale - 36.0) < 1e-12;
  bool k_ok = rep.fitted_k <= 5.0;
  bool tail_ok = true;
  for (std::size_t i = 0; i < rep.z_values.size(); ++i)
    if (rep.tail_probs[i] > rep.fitted_k2 / rep.z_values[i] + 1e-12) tail_ok = false;
  return {scale_ok && k_ok && tail_ok,
          fmt("mean bad %.2f, fitted K %.3f (tol 5), K2 %.3f, tails %s", rep.mean_bad,
              rep.fitted_k, rep.fitted_k2, tail_ok ? "dominated" : "NOT dominated")};
}

// --------------------------------------------------------------- criterion 11

Outcome determinism() {
  pipeline::ExperimentConfig iid;
  iid.mode = pipeline::Mode::iid;
  iid.n = 256;
  iid.replicas = 150;
  iid.master_seed = 6100;
  auto i1 = pipeline::report_to_json(pipeline::run_tree_pipeline(iid));
  auto i2 = pipeline::report_to_json(pipeline::run_tree_pipeline(iid));

  pipeline::ExperimentConfig graph;
  graph.mode = pipeline::Mode::graph;
  graph.n = 64;
  graph.replicas = 120;
  graph.master_seed = 6200;
  auto g1 = pipeline::report_to_json(pipeline::run_graph_pipeline(graph));
  auto g2 = pipeline::report_to_json(pipeline::run_graph_pipeline(graph));

  pipeline::ExperimentConfig cmp;
  cmp.master_seed = 6300;
  cmp.rho_grid = {0.0, 0.7};
  cmp.u_grid = {2.0};
  cmp.windows = {{0.0, 1.0}};
  cmp.tree_ladder = {1024, 4096};
  cmp.graph_ladder = {128, 256};
  cmp.ladder_seeds = 3;
  auto c1 = pipeline::report_to_json(pipeline::run_comparison_suite(cmp));
  auto c2 = pipeline::report_to_json(pipeline::run_comparison_suite(cmp));

  bool ok = i1 == i2 && g1 == g2 && c1 == c2;
  return {ok, fmt("iid %s, graph %s, comparison %s", i1 == i2 ? "stable" : "DRIFTS",
                  g1 == g2 ? "stable" : "DRIFTS", c1 == c2 ? "stable" : "DRIFTS")};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all = {
      {1, "exact tree green", exact_tree_green},
      {2, "zero-average green oracle", green_oracle},
      {3, "sampler covariance", sampler_covariance},
      {4, "heat kernel mixing bound", mixing_bound},
      {5, "bivariate dominance grid", dominance_grid},
      {6, "interpolation identity", interpolation_identity},
      {7, "gumbel convergence", gumbel_convergence},
      {8, "ppp intensity", ppp_intensity},
      {9, "comparison sum decay", comparison_decay},
      {10, "bad vertex tail", bad_vertex_tail},
      {11, "pipeline determinism", determinism},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    int id = std::atoi(argv[i]);
    if (id < 1 || id > 11) {
      std::fprintf(stderr, "unknown criterion '%s' (expected 1..11)\n", argv[i]);
      return 2;
    }
    selected.push_back(id);
  }

  int failed = 0;
  for (const auto& c : criteria()) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), c.id) == selected.end())
      continue;
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, fmt("exception: %s", e.what())};
    }
    std::printf("[%s] %02d %s (%s)\n", out.pass ? "PASS" : "FAIL", c.id, c.name,
                out.details.c_str());
    std::fflush(stdout);
    if (!out.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
