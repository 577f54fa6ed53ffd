#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "gffx/extremes.hpp"
#include "gffx/gff.hpp"
#include "gffx/graphgen.hpp"
#include "gffx/green.hpp"
#include "gffx/rng.hpp"
#include "gffx/stats.hpp"

namespace gffx::comparison {

/// Two-point comparison kernel at level a:
/// H(rho) = (1 - rho^2)^{-1/2} exp(-a^2 / (1 + rho)), rho in [0, 1).
/// Increasing in rho, H(0) = e^{-a^2}.
double h_function(double rho, double a);

/// Distance from the origin to the shifted window u + S,
/// max(S.lo + u, -u - S.hi, 0). Scaling identity: dist(-u, bS) = b dist(-u/b, S).
double window_distance(double u, const stats::Interval& S);

/// Closed-form ceiling for the probability that two standard gaussians with
/// correlation rho both land in the window u + S:
/// |S|^2 / (2 pi sqrt(1-rho^2)) * exp(-d^2/(1+rho)), d = dist(-u, S).
/// Valid for rho in (-1, 1); negative rho is folded through |rho|.
double bivariate_bound(double rho, double u, const stats::Interval& S);

enum class ProbMethod { quadrature, mc };

struct ProbEstimate {
  double value = 0.0;
  double error = 0.0;   // refinement difference (quadrature) or std error (MC)
  bool flagged = false; // estimate not resolved above three times its error
};

/// P(X in u+S, Y in u+S) for standard bivariate gaussians with correlation
/// rho. Quadrature: tensor Gauss-Legendre over the square window with
/// `budget` nodes per axis, error from the half-order rule. Monte Carlo:
/// `budget` sample pairs from `rng` (required), binomial standard error.
ProbEstimate bivariate_prob(double rho, double u, const stats::Interval& S,
                            ProbMethod method = ProbMethod::quadrature,
                            std::size_t budget = 40, Rng* rng = nullptr);

/// Segment of centered Gaussian covariances C(h) = (1-h) cov0 + h cov1.
struct InterpolationFamily {
  Eigen::MatrixXd cov0;
  Eigen::MatrixXd cov1;
  Eigen::MatrixXd at(double h) const;
  /// Ends square, equal size, symmetric to 1e-12, eigenvalues >= -1e-9,
  /// diagonals equal to each other within 1e-9.
  void validate() const;
};

/// Smooth functionals with analytic second partials, the probes of the
/// interpolation identity.
class TestFunctional {
 public:
  enum class Kind { product_pair, ramp_product, exp_neg_sum };

  /// F(x) = x_0 x_1; the identity is exact for it (degree-2 polynomial).
  static TestFunctional product_pair();
  /// F(x) = prod_i step((x_i - threshold)/width), a smooth joint-exceedance proxy.
  static TestFunctional ramp_product(double threshold = 0.0, double width = 1.0);
  /// F(x) = exp(-rate sum_i x_i); E F has the closed form exp(rate^2 1'C1 / 2).
  static TestFunctional exp_neg_sum(double rate = 1.0);

  Kind kind() const { return kind_; }
  double value(const Eigen::VectorXd& x) const;
  double second_partial(const Eigen::VectorXd& x, int i, int j) const;
  /// sum_{ij} w(i,j) d2F/dx_i dx_j at x; agrees with looping second_partial
  /// over all pairs but evaluates the shared factors once per coordinate.
  double hessian_gap_sum(const Eigen::VectorXd& x, const Eigen::MatrixXd& w) const;

 private:
  TestFunctional(Kind kind, double p1, double p2) : kind_(kind), p1_(p1), p2_(p2) {}
  Kind kind_;
  double p1_, p2_;
};

struct InterpolationOptions {
  int h_nodes = 21;                   // Gauss-Legendre nodes on the h segment
  // Expectation nodes per dimension for n <= 3, spent on composite
  // Gauss-Legendre panels under the normal density. The ramp functional is
  // smooth but not analytic, which defeats a global Hermite rule; the panel
  // rule at these defaults holds the worst identity gap near 4e-5 over
  // random correlation ends, including nearly degenerate ones.
  int quad_nodes = 160;
  std::size_t mc_samples = 1000000;   // per expectation when n > 3
  std::uint64_t mc_seed = 1;
};

/// Both sides of the Gaussian interpolation identity
///   E F(Z_1) - E F(Z_0) = 1/2 int_0^1 sum_{ij} (cov1-cov0)_{ij} E[d2F (Z_h)] dh,
/// expectations by tensor Gauss-Hermite for dimension <= 3, Monte Carlo above.
struct InterpolationCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_gap = 0.0;
  bool used_quadrature = false;
};
InterpolationCheck interpolation_identity_check(const InterpolationFamily& family,
                                                const TestFunctional& F,
                                                const InterpolationOptions& opt = {});

/// Distance histogram of unordered vertex pairs in the n-vertex breadth-first
/// subtree of the r-regular tree, with the matching field correlations and
/// the smallest C such that counts[k] <= C n min(r (r-1)^{k-1}, n) for all
/// k >= 1. Closed form, O(depth^2); sizes capped at 2^20.
struct PairDistanceProfile {
  std::uint32_t n_vertices = 0;
  std::uint32_t degree = 0;
  std::vector<std::uint64_t> counts;  // counts[k] = pairs at distance k
  std::vector<double> rhos;           // rhos[k] = (r-1)^{-k}
  double envelope_constant = 0.0;
};
PairDistanceProfile pair_profile_tree(std::uint32_t n, std::uint32_t degree);
PairDistanceProfile pair_profile_tree(const gff::TreeSubtree& t);

/// The same histogram by explicit distance evaluation, O(n^2 depth). Oracle.
std::vector<std::uint64_t> pair_profile_tree_exhaustive(const gff::TreeSubtree& t);

/// Pair-correlation comparison sum of the tree field at level a_n and the
/// bound chain around it: exact_sum = sum_k n_k rho_k H(rho_k); since H is
/// increasing, exact_sum <= H(rho_1) sum_k n_k rho_k = monotone_bound, and
/// sum_k n_k rho_k <= c_tilde n ln n defines the pair-mass constant. The sum
/// decays like n^{(2-r)/r} up to logarithms.
struct TreeComparisonSum {
  std::uint32_t n_vertices = 0;
  std::uint32_t degree = 0;
  double a_n = 0.0;
  double exact_sum = 0.0;
  double monotone_bound = 0.0;
  double c_tilde = 0.0;             // sum_k n_k rho_k / (n ln n)
  double fitted_exponent = 0.0;     // ln(exact_sum) / ln(n)
  double predicted_exponent = 0.0;  // (2 - r) / r
};
TreeComparisonSum comparison_sum_tree(const PairDistanceProfile& profile,
                                      const extremes::RescalingConstants& c);
TreeComparisonSum comparison_sum_tree(std::uint32_t n, std::uint32_t degree);

/// Graph analogue over unordered pairs, rho_xy = G(x,y)/sqrt(G(x,x)G(y,y)),
/// split at k_star = ceil((k3 + delta) ln n / ln(r-1)) into near (d <= k_star)
/// and far (d > k_star) sums. Negative correlations are clamped to zero in
/// the primary sums and counted; the _abs variants fold them in by absolute
/// value instead. Correlations above 1 + 1e-9 report an operator-quality error.
struct GraphComparisonSum {
  std::uint32_t n_vertices = 0;
  double a_n = 0.0;
  std::uint32_t k_star = 0;
  double near_sum = 0.0;
  double far_sum = 0.0;
  double total = 0.0;
  double near_sum_abs = 0.0;
  double far_sum_abs = 0.0;
  std::size_t clamped_pairs = 0;
  double max_abs_far_rho = 0.0;
};
GraphComparisonSum comparison_sum_graph(const graphgen::RegularGraph& g,
                                        const green::GreenOperator& G,
                                        const extremes::RescalingConstants& c, double k3,
                                        double delta);
GraphComparisonSum comparison_sum_graph(const graphgen::RegularGraph& g,
                                        const green::GreenOperator& G, double k3,
                                        double delta);

struct EqToZeroOptions {
  int h_nodes = 21;                     // Gauss-Legendre nodes on the h segment
  ProbMethod method = ProbMethod::quadrature;
  std::size_t budget = 40;
  std::uint64_t mc_seed = 1;
};

/// Window-occupancy discrepancy along an interpolation family with unit
/// diagonals, both rescaled coordinates in S <=> raw coordinates in a + bS:
///   value = (1/b^2) sum_{i != j} |cov1_ij - cov0_ij| int_0^1 P_ij(h) dh,
/// P_ij(h) = P(both coordinates of the h-interpolant land in a + bS).
/// Cross-checked against the closed-form ceiling with rho*_ij = max end
/// correlation: (2/b^2) sum_{i<j} |gap_ij| bound(rho*_ij, a, bS). Dimension
/// capped at 64.
struct EqToZeroReport {
  std::size_t n_vertices = 0;
  double value = 0.0;
  double dominating_bound = 0.0;
  double window_dist = 0.0;  // dist(-a, bS)
  bool dominated = false;
};
EqToZeroReport eq_tozero_sum(const InterpolationFamily& family,
                             const extremes::RescalingConstants& c,
                             const stats::Interval& S,
                             const EqToZeroOptions& opt = {});

/// Correlation matrix rho^{d(x,y)} of the tree field on a subtree.
Eigen::MatrixXd tree_correlation_matrix(const gff::TreeSubtree& t);

}  // namespace gffx::comparison
