#include "gffx/comparison.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>

#include "gffx/error.hpp"

namespace gffx::comparison {

double h_function(double rho, double a) {
  if (!(rho >= 0.0 && rho < 1.0))
    fail(ErrorKind::invalid_parameters, "h_function needs rho in [0, 1)");
  return std::exp(-a * a / (1.0 + rho)) / std::sqrt(1.0 - rho * rho);
}

double window_distance(double u, const stats::Interval& S) {
  return std::max({S.lo + u, -u - S.hi, 0.0});
}

namespace {

void require_bounded_window(const stats::Interval& S) {
  if (!(S.hi > S.lo) || !std::isfinite(S.lo) || !std::isfinite(S.hi))
    fail(ErrorKind::invalid_parameters, "window must be a bounded interval");
}

}  // namespace

double bivariate_bound(double rho, double u, const stats::Interval& S) {
  require_bounded_window(S);
  double r = std::abs(rho);
  if (!(r < 1.0)) fail(ErrorKind::invalid_parameters, "bound needs |rho| < 1");
  double d = window_distance(u, S);
  double len = S.length();
  return len * len / (2.0 * M_PI * std::sqrt(1.0 - r * r)) *
         std::exp(-d * d / (1.0 + r));
}

namespace {

double box_probability(double rho, double lo, double hi, const stats::QuadratureRule& q) {
  double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  double det = 1.0 - rho * rho;
  double norm = 1.0 / (2.0 * M_PI * std::sqrt(det));
  double acc = 0.0;
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    double x = mid + half * q.nodes[i];
    for (std::size_t j = 0; j < q.nodes.size(); ++j) {
      double y = mid + half * q.nodes[j];
      double quad = (x * x - 2.0 * rho * x * y + y * y) / (2.0 * det);
      acc += q.weights[i] * q.weights[j] * std::exp(-quad);
    }
  }
  return norm * acc * half * half;
}

}  // namespace

ProbEstimate bivariate_prob(double rho, double u, const stats::Interval& S,
                            ProbMethod method, std::size_t budget, Rng* rng) {
  require_bounded_window(S);
  if (!(std::abs(rho) < 1.0))
    fail(ErrorKind::invalid_parameters, "probability needs |rho| < 1");
  double lo = u + S.lo, hi = u + S.hi;
  ProbEstimate est;
  if (method == ProbMethod::quadrature) {
    // Too-small budgets widen the error bar instead of failing.
    bool starved = budget < 8;
    int nodes = std::max<int>(4, static_cast<int>(budget));
    est.value = box_probability(rho, lo, hi, stats::gauss_legendre(nodes));
    double coarse = box_probability(rho, lo, hi, stats::gauss_legendre(nodes / 2));
    est.error = std::abs(est.value - coarse);
    if (starved) {
      est.error = std::max(est.error, est.value);
      est.flagged = true;
    }
  } else {
    if (rng == nullptr) fail(ErrorKind::invalid_parameters, "monte carlo needs an rng");
    std::size_t samples = std::max<std::size_t>(1, budget);
    double noise = std::sqrt(1.0 - rho * rho);
    std::size_t hits = 0;
    for (std::size_t s = 0; s < samples; ++s) {
      double g1 = rng->gaussian();
      double g2 = rng->gaussian();
      double x = g1;
      double y = rho * g1 + noise * g2;
      if (x > lo && x < hi && y > lo && y < hi) ++hits;
    }
    double n = static_cast<double>(samples);
    est.value = static_cast<double>(hits) / n;
    est.error = hits == 0 ? 1.0 / n : std::sqrt(est.value * (1.0 - est.value) / n);
    if (budget == 0) est.flagged = true;
  }
  est.flagged = est.flagged || est.value < 3.0 * est.error;
  return est;
}

Eigen::MatrixXd InterpolationFamily::at(double h) const {
  return (1.0 - h) * cov0 + h * cov1;
}

void InterpolationFamily::validate() const {
  if (cov0.rows() == 0 || cov0.rows() != cov0.cols() || cov1.rows() != cov0.rows() ||
      cov1.cols() != cov0.cols())
    fail(ErrorKind::invalid_parameters, "family ends must be square and equally sized");
  for (const auto* c : {&cov0, &cov1}) {
    if ((*c - c->transpose()).cwiseAbs().maxCoeff() > 1e-12)
      fail(ErrorKind::invalid_parameters, "family end is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(*c, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9)
      fail(ErrorKind::invalid_parameters, "family end is not positive semidefinite");
  }
  if ((cov0.diagonal() - cov1.diagonal()).cwiseAbs().maxCoeff() > 1e-9)
    fail(ErrorKind::invalid_parameters, "family ends must share their diagonal");
}

TestFunctional TestFunctional::product_pair() {
  return TestFunctional(Kind::product_pair, 0.0, 0.0);
}
TestFunctional TestFunctional::ramp_product(double threshold, double width) {
  if (!(width > 0.0)) fail(ErrorKind::invalid_parameters, "ramp width must be positive");
  return TestFunctional(Kind::ramp_product, threshold, width);
}
TestFunctional TestFunctional::exp_neg_sum(double rate) {
  if (!(rate > 0.0)) fail(ErrorKind::invalid_parameters, "rate must be positive");
  return TestFunctional(Kind::exp_neg_sum, rate, 0.0);
}

double TestFunctional::value(const Eigen::VectorXd& x) const {
  switch (kind_) {
    case Kind::product_pair:
      if (x.size() < 2) fail(ErrorKind::invalid_parameters, "product needs dimension >= 2");
      return x(0) * x(1);
    case Kind::ramp_product: {
      double v = 1.0;
      for (Eigen::Index i = 0; i < x.size(); ++i)
        v *= stats::smooth_step((x(i) - p1_) / p2_);
      return v;
    }
    case Kind::exp_neg_sum:
      return std::exp(-p1_ * x.sum());
  }
  return 0.0;
}

double TestFunctional::second_partial(const Eigen::VectorXd& x, int i, int j) const {
  switch (kind_) {
    case Kind::product_pair:
      if (x.size() < 2) fail(ErrorKind::invalid_parameters, "product needs dimension >= 2");
      return ((i == 0 && j == 1) || (i == 1 && j == 0)) ? 1.0 : 0.0;
    case Kind::ramp_product: {
      double rest = 1.0;
      for (Eigen::Index k = 0; k < x.size(); ++k) {
        if (k == i || k == j) continue;
        rest *= stats::smooth_step((x(k) - p1_) / p2_);
      }
      double ti = (x(i) - p1_) / p2_;
      if (i == j) return stats::smooth_step_second(ti) / (p2_ * p2_) * rest;
      double tj = (x(j) - p1_) / p2_;
      return stats::smooth_step_prime(ti) * stats::smooth_step_prime(tj) /
             (p2_ * p2_) * rest;
    }
    case Kind::exp_neg_sum:
      return p1_ * p1_ * value(x);
  }
  return 0.0;
}

double TestFunctional::hessian_gap_sum(const Eigen::VectorXd& x,
                                       const Eigen::MatrixXd& w) const {
  const int n = static_cast<int>(x.size());
  switch (kind_) {
    case Kind::product_pair:
      if (n < 2) fail(ErrorKind::invalid_parameters, "product needs dimension >= 2");
      return w(0, 1) + w(1, 0);
    case Kind::ramp_product: {
      thread_local std::vector<double> v, p, s, pre, suf;
      v.resize(n);
      p.resize(n);
      s.resize(n);
      pre.resize(n + 1);
      suf.resize(n + 1);
      const double inv = 1.0 / p2_;
      for (int i = 0; i < n; ++i) {
        auto d = stats::smooth_step_triple((x(i) - p1_) * inv);
        v[i] = d.value;
        p[i] = d.first * inv;
        s[i] = d.second * inv * inv;
      }
      // pre[i] = prod v[0..i), suf[i] = prod v[i..n); products over "all but
      // one or two" come from these without dividing by possibly-zero v.
      pre[0] = 1.0;
      for (int i = 0; i < n; ++i) pre[i + 1] = pre[i] * v[i];
      suf[n] = 1.0;
      for (int i = n - 1; i >= 0; --i) suf[i] = v[i] * suf[i + 1];
      double total = 0.0;
      for (int i = 0; i < n; ++i)
        if (w(i, i) != 0.0 && s[i] != 0.0) total += w(i, i) * s[i] * pre[i] * suf[i + 1];
      for (int i = 0; i < n; ++i) {
        if (p[i] == 0.0) continue;
        double mid = 1.0;
        for (int j = i + 1; j < n; ++j) {
          double wij = w(i, j) + w(j, i);
          if (wij != 0.0 && p[j] != 0.0)
            total += wij * p[i] * p[j] * pre[i] * mid * suf[j + 1];
          mid *= v[j];
        }
      }
      return total;
    }
    case Kind::exp_neg_sum:
      return p1_ * p1_ * w.sum() * value(x);
  }
  return 0.0;
}

namespace {

// L with C = L L^T; near-zero eigenvalues clamp to zero, below -1e-9 rejects.
Eigen::MatrixXd covariance_sqrt(const Eigen::MatrixXd& C) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
  if (es.eigenvalues().minCoeff() < -1e-9)
    fail(ErrorKind::degenerate_operator, "interpolant lost positive semidefiniteness");
  Eigen::VectorXd roots = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * roots.asDiagonal();
}

// One-dimensional rule for E[f(Z)], Z standard normal: composite
// Gauss-Legendre panels on [-8, 8] with the normal density folded into the
// weights, normalized to total mass 1. The ramp functionals are smooth but
// not analytic, which starves a global Hermite rule (sub-geometric, and far
// worse on the second-derivative integrands); panel-wise Legendre keeps its
// high order through that, so equal node counts land orders of magnitude
// closer. Mass beyond |z| = 8 is ~1e-15, below everything measured here.
stats::QuadratureRule normal_panel_rule(int nodes_per_dim) {
  constexpr double lo = -8.0, hi = 8.0;
  constexpr int per_panel = 8;
  const int panels = std::max(2, nodes_per_dim / per_panel);
  const auto gl = stats::gauss_legendre(per_panel);
  const double width = (hi - lo) / panels;
  stats::QuadratureRule rule;
  double mass = 0.0;
  for (int p = 0; p < panels; ++p) {
    double a = lo + p * width;
    for (int k = 0; k < per_panel; ++k) {
      double z = a + 0.5 * width * (gl.nodes[k] + 1.0);
      double w = 0.5 * width * gl.weights[k] *
                 std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
      rule.nodes.push_back(z);
      rule.weights.push_back(w);
      mass += w;
    }
  }
  for (double& w : rule.weights) w /= mass;
  return rule;
}

// Tensor sweep of a z-space rule whose weights already carry the normal
// density: calls visit(x, weight) on every node of the product rule with
// x = L z. x updates incrementally along dimension 0 and re-syncs exactly
// on every carry, so the loop body costs O(n) per node with no allocations.
template <typename Visit>
void tensor_rule_sweep(const Eigen::MatrixXd& L, const stats::QuadratureRule& rule,
                     Visit&& visit) {
  const int n = static_cast<int>(L.rows());
  const int m = static_cast<int>(rule.nodes.size());
  std::vector<int> idx(n, 0);
  Eigen::VectorXd t = Eigen::VectorXd::Constant(n, rule.nodes[0]);
  Eigen::VectorXd x = L * t;
  while (true) {
    double w = 1.0;
    for (int d = 0; d < n; ++d) w *= rule.weights[idx[d]];
    visit(x, w);
    int d = 0;
    while (d < n && ++idx[d] == m) idx[d++] = 0;
    if (d == n) break;
    if (d == 0) {
      x.noalias() += L.col(0) * (rule.nodes[idx[0]] - rule.nodes[idx[0] - 1]);
    } else {
      for (int k = 0; k < n; ++k) t(k) = rule.nodes[idx[k]];
      x.noalias() = L * t;
    }
  }
}

double expect_value_quadrature(const TestFunctional& F, const Eigen::MatrixXd& L,
                               const stats::QuadratureRule& rule) {
  double acc = 0.0;
  tensor_rule_sweep(L, rule, [&](const Eigen::VectorXd& x, double w) { acc += w * F.value(x); });
  return acc;
}

double expect_gap_hessian_quadrature(const TestFunctional& F, const Eigen::MatrixXd& gap,
                                     const Eigen::MatrixXd& L,
                                     const stats::QuadratureRule& rule) {
  double acc = 0.0;
  tensor_rule_sweep(L, rule, [&](const Eigen::VectorXd& x, double w) {
    acc += w * F.hessian_gap_sum(x, gap);
  });
  return acc;
}

double expect_value_mc(const TestFunctional& F, const Eigen::MatrixXd& L,
                       std::size_t samples, Rng& rng) {
  const Eigen::Index n = L.rows();
  Eigen::VectorXd g(n), x(n);
  double acc = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    for (Eigen::Index i = 0; i < n; ++i) g(i) = rng.gaussian();
    x.noalias() = L * g;
    acc += F.value(x);
  }
  return acc / static_cast<double>(samples);
}

double expect_gap_hessian_mc(const TestFunctional& F, const Eigen::MatrixXd& gap,
                             const Eigen::MatrixXd& L, std::size_t samples, Rng& rng) {
  const Eigen::Index n = L.rows();
  Eigen::VectorXd g(n), x(n);
  double acc = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    for (Eigen::Index i = 0; i < n; ++i) g(i) = rng.gaussian();
    x.noalias() = L * g;
    acc += F.hessian_gap_sum(x, gap);
  }
  return acc / static_cast<double>(samples);
}

}  // namespace

InterpolationCheck interpolation_identity_check(const InterpolationFamily& family,
                                                const TestFunctional& F,
                                                const InterpolationOptions& opt) {
  family.validate();
  if (opt.h_nodes < 2 || opt.quad_nodes < 2)
    fail(ErrorKind::invalid_parameters, "quadrature orders too small");
  const Eigen::Index n = family.cov0.rows();
  const bool quadrature = n <= 3;
  Eigen::MatrixXd gap = family.cov1 - family.cov0;

  InterpolationCheck check;
  check.used_quadrature = quadrature;

  Rng rng(opt.mc_seed);
  auto rule = normal_panel_rule(opt.quad_nodes);

  Eigen::MatrixXd l1 = covariance_sqrt(family.cov1);
  Eigen::MatrixXd l0 = covariance_sqrt(family.cov0);
  if (quadrature) {
    check.lhs = expect_value_quadrature(F, l1, rule) - expect_value_quadrature(F, l0, rule);
  } else {
    check.lhs = expect_value_mc(F, l1, opt.mc_samples, rng) -
                expect_value_mc(F, l0, opt.mc_samples, rng);
  }

  auto h_rule = stats::gauss_legendre(opt.h_nodes);
  double rhs = 0.0;
  for (std::size_t k = 0; k < h_rule.nodes.size(); ++k) {
    double h = 0.5 * (h_rule.nodes[k] + 1.0);
    double w = 0.5 * h_rule.weights[k];
    Eigen::MatrixXd lh = covariance_sqrt(family.at(h));
    double inner = quadrature
                       ? expect_gap_hessian_quadrature(F, gap, lh, rule)
                       : expect_gap_hessian_mc(F, gap, lh, opt.mc_samples, rng);
    rhs += w * inner;
  }
  check.rhs = 0.5 * rhs;
  check.abs_gap = std::abs(check.lhs - check.rhs);
  return check;
}

namespace {

constexpr std::uint32_t kProfileCap = 1u << 20;

struct SubtreeShape {
  std::uint32_t degree = 0;
  std::uint64_t n = 0;
  std::uint32_t last_depth = 0;            // D
  std::uint64_t last_layer_present = 0;    // m, first positions of layer D
  std::vector<std::uint64_t> layer;        // full sizes L_0..L_D
};

SubtreeShape subtree_shape(std::uint32_t n, std::uint32_t degree) {
  SubtreeShape s;
  s.degree = degree;
  s.n = n;
  s.layer.push_back(1);
  std::uint64_t seen = 1;
  while (seen < n) {
    std::uint64_t next = s.layer.size() == 1
                             ? degree
                             : s.layer.back() * (degree - 1);
    s.layer.push_back(next);
    std::uint64_t take = std::min<std::uint64_t>(next, n - seen);
    seen += take;
    if (seen >= n) s.last_layer_present = take;
  }
  s.last_depth = static_cast<std::uint32_t>(s.layer.size()) - 1;
  if (s.last_depth == 0) s.last_layer_present = 0;
  return s;
}

std::uint64_t pow_u64(std::uint64_t base, std::uint32_t e) {
  std::uint64_t v = 1;
  while (e--) v *= base;
  return v;
}

}  // namespace

PairDistanceProfile pair_profile_tree(std::uint32_t n, std::uint32_t degree) {
  if (degree < 3) fail(ErrorKind::invalid_parameters, "profile needs degree >= 3");
  if (n == 0 || n > kProfileCap)
    fail(ErrorKind::size_limit, "profile sizes capped at 2^20");

  SubtreeShape s = subtree_shape(n, degree);
  const std::uint32_t D = s.last_depth;
  const std::uint64_t m = s.last_layer_present;
  const std::uint64_t r1 = degree - 1;

  PairDistanceProfile out;
  out.n_vertices = n;
  out.degree = degree;
  out.counts.assign(2 * static_cast<std::size_t>(D) + 1, 0);
  auto& profile = out.counts;

  if (D > 0) {
    // Ancestor pairs: every vertex at depth t has one ancestor at depth t - k.
    for (std::uint32_t k = 1; k <= D; ++k) {
      for (std::uint32_t t = k; t < D; ++t) profile[k] += s.layer[t];
      profile[k] += m;
    }

    // Branching pairs below the last layer: lca at depth c, both legs full.
    for (std::uint32_t c = 0; c + 1 < D; ++c) {
      std::uint64_t branches = (c == 0) ? degree : degree - 1;
      std::uint64_t ordered = branches * (branches - 1);
      for (std::uint32_t a = c + 1; a < D; ++a) {
        for (std::uint32_t b = a; b < D; ++b) {
          std::uint64_t legs = pow_u64(r1, (a - c - 1) + (b - c - 1));
          std::uint64_t pairs = (a == b) ? s.layer[c] * (ordered / 2) * legs
                                         : s.layer[c] * ordered * legs;
          profile[a + b - 2 * c] += pairs;
        }
      }
    }

    // One leg in the partial last layer: each present deep vertex sees, through
    // its depth-c ancestor, the full depth-a population of the sibling branches.
    for (std::uint32_t c = 0; c < D; ++c) {
      std::uint64_t branches = (c == 0) ? degree : degree - 1;
      for (std::uint32_t a = c + 1; a < D; ++a)
        profile[a + D - 2 * c] += m * (branches - 1) * pow_u64(r1, a - c - 1);
    }

    // Both legs in the partial last layer: blocks of layer-D positions under a
    // depth-c vertex are contiguous, so pair counts telescope between levels.
    for (std::uint32_t c = 0; c < D; ++c) {
      std::uint64_t w = pow_u64(r1, D - c - 1);            // block per depth-(c+1) vertex
      std::uint64_t p = ((c == 0) ? degree : r1) * w;      // block per depth-c vertex
      std::uint64_t qp = m / p, sp = m % p;
      std::uint64_t qw = m / w, sw = m % w;
      std::uint64_t same_c = qp * p * p + sp * sp;
      std::uint64_t same_c1 = qw * w * w + sw * sw;
      profile[2 * (D - c)] += (same_c - same_c1) / 2;
    }
  }

  out.rhos.assign(profile.size(), 1.0);
  double rho1 = 1.0 / static_cast<double>(r1);
  for (std::size_t k = 1; k < profile.size(); ++k) out.rhos[k] = out.rhos[k - 1] * rho1;

  double nn = static_cast<double>(n);
  for (std::size_t k = 1; k < profile.size(); ++k) {
    if (profile[k] == 0) continue;
    double shell = static_cast<double>(degree) * std::pow(static_cast<double>(r1),
                                                          static_cast<double>(k) - 1.0);
    double cap = nn * std::min(shell, nn);
    out.envelope_constant =
        std::max(out.envelope_constant, static_cast<double>(profile[k]) / cap);
  }
  return out;
}

PairDistanceProfile pair_profile_tree(const gff::TreeSubtree& t) {
  return pair_profile_tree(t.n_vertices, t.degree);
}

std::vector<std::uint64_t> pair_profile_tree_exhaustive(const gff::TreeSubtree& t) {
  std::vector<std::uint64_t> profile(2 * t.max_depth + 1, 0);
  for (std::uint32_t x = 0; x < t.n_vertices; ++x)
    for (std::uint32_t y = x + 1; y < t.n_vertices; ++y)
      ++profile[gff::tree_distance(t, x, y)];
  return profile;
}

TreeComparisonSum comparison_sum_tree(const PairDistanceProfile& profile,
                                      const extremes::RescalingConstants& c) {
  if (profile.n_vertices != c.n || profile.degree != c.degree)
    fail(ErrorKind::invalid_parameters, "profile does not match rescaling constants");
  TreeComparisonSum sum;
  sum.n_vertices = profile.n_vertices;
  sum.degree = profile.degree;
  sum.a_n = c.a_n;
  sum.predicted_exponent = (2.0 - profile.degree) / static_cast<double>(profile.degree);

  double weighted = 0.0;
  for (std::size_t k = 1; k < profile.counts.size(); ++k) {
    if (profile.counts[k] == 0) continue;
    double rho = profile.rhos[k];
    double cnt = static_cast<double>(profile.counts[k]);
    sum.exact_sum += cnt * rho * h_function(rho, sum.a_n);
    weighted += cnt * rho;
  }
  double n = static_cast<double>(profile.n_vertices);
  sum.monotone_bound = h_function(profile.rhos[1], sum.a_n) * weighted;
  sum.c_tilde = weighted / (n * std::log(n));
  if (sum.exact_sum > 0.0) sum.fitted_exponent = std::log(sum.exact_sum) / std::log(n);
  return sum;
}

TreeComparisonSum comparison_sum_tree(std::uint32_t n, std::uint32_t degree) {
  return comparison_sum_tree(pair_profile_tree(n, degree),
                             extremes::rescaling_constants(n, degree));
}

GraphComparisonSum comparison_sum_graph(const graphgen::RegularGraph& g,
                                        const green::GreenOperator& G,
                                        const extremes::RescalingConstants& c, double k3,
                                        double delta) {
  const std::uint32_t n = g.n_vertices;
  if (G.n_vertices != n) fail(ErrorKind::invalid_parameters, "green does not match graph");
  if (c.n != n) fail(ErrorKind::invalid_parameters, "constants do not match graph");
  if (!(k3 > 0.0) || !(delta > 0.0))
    fail(ErrorKind::invalid_parameters, "k3 and delta must be positive");

  GraphComparisonSum sum;
  sum.n_vertices = n;
  sum.a_n = c.a_n;
  sum.k_star = static_cast<std::uint32_t>(
      std::ceil((k3 + delta) * std::log(static_cast<double>(n)) / std::log(g.degree - 1.0)));

  Eigen::VectorXd sd(n);
  for (std::uint32_t x = 0; x < n; ++x) {
    if (!(G.matrix(x, x) > 0.0))
      fail(ErrorKind::degenerate_operator, "green diagonal must be positive");
    sd(x) = std::sqrt(G.matrix(x, x));
  }

  for (std::uint32_t x = 0; x < n; ++x) {
    auto dist = graphgen::bfs_distances(g, x);
    for (std::uint32_t y = x + 1; y < n; ++y) {
      double rho = G.matrix(x, y) / (sd(x) * sd(y));
      if (rho > 1.0 + 1e-9)
        fail(ErrorKind::operator_quality, "pair correlation above one");
      double folded = std::min(std::abs(rho), 1.0 - 1e-12);
      double clamped = rho < 0.0 ? 0.0 : folded;
      if (rho < 0.0) ++sum.clamped_pairs;
      double term = clamped * h_function(clamped, sum.a_n);
      double term_abs = folded * h_function(folded, sum.a_n);
      if (dist[y] <= sum.k_star) {
        sum.near_sum += term;
        sum.near_sum_abs += term_abs;
      } else {
        sum.far_sum += term;
        sum.far_sum_abs += term_abs;
        sum.max_abs_far_rho = std::max(sum.max_abs_far_rho, folded);
      }
    }
  }
  sum.total = sum.near_sum + sum.far_sum;
  return sum;
}

GraphComparisonSum comparison_sum_graph(const graphgen::RegularGraph& g,
                                        const green::GreenOperator& G, double k3,
                                        double delta) {
  return comparison_sum_graph(g, G, extremes::rescaling_constants(g.n_vertices, g.degree),
                              k3, delta);
}

EqToZeroReport eq_tozero_sum(const InterpolationFamily& family,
                             const extremes::RescalingConstants& c,
                             const stats::Interval& S, const EqToZeroOptions& opt) {
  require_bounded_window(S);
  family.validate();
  const Eigen::Index n = family.cov0.rows();
  if (n > 64) fail(ErrorKind::size_limit, "discrepancy sum capped at dimension 64");
  if ((family.cov0.diagonal().array() - 1.0).abs().maxCoeff() > 1e-9)
    fail(ErrorKind::invalid_parameters, "discrepancy sum needs unit diagonals");
  if (opt.h_nodes < 2) fail(ErrorKind::invalid_parameters, "need at least 2 h nodes");

  // Both rescaled coordinates in S <=> raw coordinates in the window a + bS.
  stats::Interval window{c.b_n * S.lo, c.b_n * S.hi};
  double a = c.a_n;

  EqToZeroReport rep;
  rep.n_vertices = static_cast<std::size_t>(n);
  rep.window_dist = window_distance(a, window);

  Rng rng(opt.mc_seed);
  std::map<double, double> cache;
  auto prob = [&](double rho) {
    auto it = cache.find(rho);
    if (it != cache.end()) return it->second;
    double v = bivariate_prob(rho, a, window, opt.method, opt.budget, &rng).value;
    cache.emplace(rho, v);
    return v;
  };

  auto h_rule = stats::gauss_legendre(opt.h_nodes);
  double inv_b2 = 1.0 / (c.b_n * c.b_n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double gap = std::abs(family.cov1(i, j) - family.cov0(i, j));
      if (gap == 0.0) continue;
      double integral = 0.0;
      for (std::size_t k = 0; k < h_rule.nodes.size(); ++k) {
        double h = 0.5 * (h_rule.nodes[k] + 1.0);
        double w = 0.5 * h_rule.weights[k];
        double rho = (1.0 - h) * family.cov0(i, j) + h * family.cov1(i, j);
        integral += w * prob(rho);
      }
      // Ordered pairs count twice.
      rep.value += 2.0 * inv_b2 * gap * integral;
      double rho_star = std::max(std::abs(family.cov0(i, j)), std::abs(family.cov1(i, j)));
      rep.dominating_bound += 2.0 * inv_b2 * gap * bivariate_bound(rho_star, a, window);
    }
  }
  rep.dominated = rep.value <= rep.dominating_bound;
  return rep;
}

Eigen::MatrixXd tree_correlation_matrix(const gff::TreeSubtree& t) {
  double rho = 1.0 / (t.degree - 1.0);
  Eigen::MatrixXd C(t.n_vertices, t.n_vertices);
  for (std::uint32_t x = 0; x < t.n_vertices; ++x) {
    C(x, x) = 1.0;
    for (std::uint32_t y = x + 1; y < t.n_vertices; ++y) {
      double v = std::pow(rho, static_cast<double>(gff::tree_distance(t, x, y)));
      C(x, y) = v;
      C(y, x) = v;
    }
  }
  return C;
}

}  // namespace gffx::comparison
