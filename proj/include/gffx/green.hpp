#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>

#include "gffx/graphgen.hpp"

namespace gffx::green {

/// Green function of the simple walk on the infinite r-regular tree:
/// g(d) = (r-1)/(r-2) * (r-1)^{-d}. Requires r >= 3. g(0) = sigma_r^2,
/// g(d+1)/g(d) = 1/(r-1).
double tree_green(std::uint32_t degree, std::uint32_t distance);

enum class BuildMethod { shift_invert, eigendecomposition };

/// Zero-average Green operator of the continuous-time walk with generator
/// A/r - I: G = (P + I - A/r)^{-1} - P where P is the projector onto
/// constants. Symmetric, zero row sums, PSD on the complement of constants.
struct GreenOperator {
  std::uint32_t n_vertices = 0;
  std::uint32_t degree = 0;
  BuildMethod build_method = BuildMethod::shift_invert;
  Eigen::MatrixXd matrix;

  struct InvariantReport {
    double max_asymmetry = 0.0;
    double max_abs_row_sum = 0.0;
    double min_eigenvalue = 0.0;
    int near_zero_modes = 0;
    bool ok() const {
      return max_asymmetry <= 1e-10 && max_abs_row_sum <= 1e-8 &&
             min_eigenvalue >= -1e-9 && near_zero_modes == 1;
    }
  };
  /// Dense (O(N^3) for the eigenvalue part); meant for desk-scale validation.
  InvariantReport check_invariants() const;
};

/// Dense construction. shift_invert: Cholesky solve of (P + I - A/r);
/// eigendecomposition: eigenvalues mu of I - A/r mapped to 1/mu off the
/// constant mode. Size cap 4096 (size-limit error beyond; see green_column_cg).
/// Disconnected graphs make the operator family singular: singular-operator error.
GreenOperator zero_average_green(const graphgen::RegularGraph& g,
                                 BuildMethod method = BuildMethod::shift_invert);

/// Single column of G by conjugate gradients on (P + I - A/r), residual <= tol.
/// Matrix-free, any size.
Eigen::VectorXd green_column_cg(const graphgen::RegularGraph& g, std::uint32_t column,
                                double tol = 1e-9);

/// Independent oracle: numerically integrates the heat-kernel deviation,
/// int_0^T (e^{t(A/r - I)} - P) dt with T = horizon/kappa, by composite
/// Gauss-Legendre panels and Pade-based matrix exponentials. Desk scale (N <= 64).
Eigen::MatrixXd green_time_quadrature(const graphgen::RegularGraph& g,
                                      double horizon = 60.0);

struct GreenTreeComparison {
  bool has_good_vertices = false;
  std::size_t n_good = 0;
  std::size_t pairs_checked = 0;
  double max_abs_error = 0.0;
  double fitted_exponent = 0.0;  // -log(max err)/log N
};

/// Compares G(x,y) against the tree values g(d(x,y)) over ell-good x and all y
/// within distance ell0 <= census.ell. Returns a no-good-vertices marker when
/// the census has no good vertex.
GreenTreeComparison green_vs_tree(const graphgen::RegularGraph& g, const GreenOperator& G,
                                  const graphgen::VertexCensus& census, std::uint32_t ell0);

struct HeatKernelDeviation {
  double deviation = 0.0;  // max_y |P_x(X_t = y) - 1/N|
  double bound = 0.0;      // e^{-kappa t}
  double kappa = 0.0;
  bool within_bound = false;
};

/// Continuous-time transition row from x at time t via eigendecomposition.
/// Size cap 512 (size-limit error beyond).
HeatKernelDeviation heat_kernel_deviation(const graphgen::RegularGraph& g, double t,
                                          std::uint32_t x);

/// Same deviation maximized over every starting vertex, one eigendecomposition.
HeatKernelDeviation heat_kernel_max_deviation(const graphgen::RegularGraph& g, double t);

struct GreenBoundCheck {
  bool ok = true;
  std::uint32_t worst_x = 0, worst_y = 0;
  double worst_value = 0.0, worst_bound = 0.0;
  double worst_excess = 0.0;  // value - bound at the worst pair
  double fitted_k3 = 0.0;     // largest k3 the far-field floor supports
};

/// Checks G(x,y) <= max(K1 * (r-1)^{-d(x,y)}, N^{-k3}) over all pairs including
/// the diagonal; K1 covers the on-diagonal variance, the floor covers far pairs.
GreenBoundCheck green_upper_bound(const graphgen::RegularGraph& g, const GreenOperator& G,
                                  double K1, double k3);

/// Binary format: magic "GAGF", u32 n, u32 reserved (zero), then n*n
/// little-endian doubles, row-major.
void write_green_binary(const GreenOperator& G, std::ostream& os);
GreenOperator read_green_binary(std::istream& is);

}  // namespace gffx::green
