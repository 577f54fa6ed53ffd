#include "gffx/green.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "gffx/error.hpp"
#include "gffx/stats.hpp"

namespace gffx::green {

double tree_green(std::uint32_t degree, std::uint32_t distance) {
  if (degree < 3) fail(ErrorKind::invalid_parameters, "tree_green: degree must be >= 3");
  double r = degree;
  return (r - 1.0) / (r - 2.0) * std::pow(1.0 / (r - 1.0), static_cast<double>(distance));
}

namespace {

Eigen::MatrixXd adjacency_dense(const graphgen::RegularGraph& g) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(g.n_vertices, g.n_vertices);
  for (std::uint32_t x = 0; x < g.n_vertices; ++x)
    for (std::uint32_t y : g.neighbors(x)) a(x, y) = 1.0;
  return a;
}

void require_connected(const graphgen::RegularGraph& g) {
  auto dist = graphgen::bfs_distances(g, 0);
  for (std::uint32_t d : dist)
    if (d == graphgen::kUnreachable)
      fail(ErrorKind::singular_operator, "graph is disconnected");
}

constexpr std::uint32_t kDenseCap = 4096;

}  // namespace

GreenOperator zero_average_green(const graphgen::RegularGraph& g, BuildMethod method) {
  const std::uint32_t n = g.n_vertices;
  if (n > kDenseCap)
    fail(ErrorKind::size_limit, "dense Green capped at n = " + std::to_string(kDenseCap) +
                                    "; use green_column_cg for larger graphs");
  require_connected(g);

  GreenOperator G;
  G.n_vertices = n;
  G.degree = g.degree;
  G.build_method = method;

  Eigen::MatrixXd walk_laplacian =
      Eigen::MatrixXd::Identity(n, n) - adjacency_dense(g) / g.degree;

  if (method == BuildMethod::shift_invert) {
    Eigen::MatrixXd shifted = walk_laplacian;
    shifted.array() += 1.0 / n;  // + projector onto constants
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() != Eigen::Success)
      fail(ErrorKind::singular_operator, "shifted operator not positive definite");
    G.matrix = llt.solve(Eigen::MatrixXd::Identity(n, n));
    G.matrix.array() -= 1.0 / n;
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(walk_laplacian);
    if (solver.info() != Eigen::Success)
      fail(ErrorKind::singular_operator, "eigendecomposition failed");
    const auto& mu = solver.eigenvalues();  // ascending, mu_0 ~ 0 on constants
    if (n >= 2 && mu(1) < 1e-12)
      fail(ErrorKind::singular_operator, "second walk eigenvalue vanishes");
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(n);
    for (std::uint32_t i = 1; i < n; ++i) inv(i) = 1.0 / mu(i);
    G.matrix = solver.eigenvectors() * inv.asDiagonal() * solver.eigenvectors().transpose();
  }
  return G;
}

GreenOperator::InvariantReport GreenOperator::check_invariants() const {
  InvariantReport rep;
  rep.max_asymmetry = (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
  rep.max_abs_row_sum = matrix.rowwise().sum().cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (matrix + matrix.transpose()),
                                                        Eigen::EigenvaluesOnly);
  rep.min_eigenvalue = solver.eigenvalues().minCoeff();
  for (std::uint32_t i = 0; i < n_vertices; ++i)
    if (std::abs(solver.eigenvalues()(i)) <= 1e-9) ++rep.near_zero_modes;
  return rep;
}

Eigen::VectorXd green_column_cg(const graphgen::RegularGraph& g, std::uint32_t column,
                                double tol) {
  const std::uint32_t n = g.n_vertices;
  if (column >= n) fail(ErrorKind::invalid_parameters, "column out of range");
  require_connected(g);

  auto apply = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd out(n);
    for (std::uint32_t u = 0; u < n; ++u) {
      double acc = 0.0;
      for (std::uint32_t w : g.neighbors(u)) acc += v(w);
      out(u) = v(u) - acc / g.degree;
    }
    out.array() += v.mean();
    return out;
  };

  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(column) = 1.0;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd residual = b;
  Eigen::VectorXd direction = residual;
  double rho = residual.squaredNorm();
  for (std::uint32_t iter = 0; iter < 20 * n + 100; ++iter) {
    if (std::sqrt(rho) <= tol) break;
    Eigen::VectorXd ad = apply(direction);
    double alpha = rho / direction.dot(ad);
    x += alpha * direction;
    residual -= alpha * ad;
    double rho_next = residual.squaredNorm();
    direction = residual + (rho_next / rho) * direction;
    rho = rho_next;
  }
  if (std::sqrt(rho) > tol)
    fail(ErrorKind::singular_operator, "conjugate gradients stalled above tolerance");
  x.array() -= 1.0 / n;
  return x;
}

Eigen::MatrixXd green_time_quadrature(const graphgen::RegularGraph& g, double horizon) {
  const std::uint32_t n = g.n_vertices;
  if (n > 64) fail(ErrorKind::size_limit, "time quadrature oracle capped at n = 64");
  require_connected(g);
  double kappa = graphgen::spectral_gap(g);

  Eigen::MatrixXd generator = adjacency_dense(g) / g.degree;
  generator -= Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd projector = Eigen::MatrixXd::Constant(n, n, 1.0 / n);

  double total_time = horizon / kappa;
  double width = std::min(0.5, 1.0 / kappa);
  int panels = static_cast<int>(std::ceil(total_time / width));
  auto rule = stats::gauss_legendre(10);

  Eigen::MatrixXd integral = Eigen::MatrixXd::Zero(n, n);
  for (int p = 0; p < panels; ++p) {
    double lo = p * total_time / panels;
    double hi = (p + 1) * total_time / panels;
    double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      double t = mid + half * rule.nodes[k];
      Eigen::MatrixXd heat = (t * generator).exp();
      integral += (half * rule.weights[k]) * (heat - projector);
    }
  }
  return integral;
}

GreenTreeComparison green_vs_tree(const graphgen::RegularGraph& g, const GreenOperator& G,
                                  const graphgen::VertexCensus& census, std::uint32_t ell0) {
  if (census.good_flags.size() != g.n_vertices)
    fail(ErrorKind::invalid_parameters, "census does not match graph");
  if (ell0 > census.ell)
    fail(ErrorKind::invalid_parameters, "ell0 exceeds census depth");

  GreenTreeComparison cmp;
  for (std::uint32_t x = 0; x < g.n_vertices; ++x) {
    if (!census.good_flags[x]) continue;
    ++cmp.n_good;
    auto dist = graphgen::bfs_distances(g, x);
    for (std::uint32_t y = 0; y < g.n_vertices; ++y) {
      if (dist[y] > ell0) continue;
      ++cmp.pairs_checked;
      double err = std::abs(G.matrix(x, y) - tree_green(g.degree, dist[y]));
      cmp.max_abs_error = std::max(cmp.max_abs_error, err);
    }
  }
  cmp.has_good_vertices = cmp.n_good > 0;
  if (cmp.has_good_vertices && cmp.max_abs_error > 0.0)
    cmp.fitted_exponent = -std::log(cmp.max_abs_error) / std::log(double(g.n_vertices));
  return cmp;
}

HeatKernelDeviation heat_kernel_deviation(const graphgen::RegularGraph& g, double t,
                                          std::uint32_t x) {
  const std::uint32_t n = g.n_vertices;
  if (n > 512) fail(ErrorKind::size_limit, "heat kernel row capped at n = 512");
  if (x >= n) fail(ErrorKind::invalid_parameters, "vertex out of range");
  if (t < 0.0) fail(ErrorKind::invalid_parameters, "time must be nonnegative");
  require_connected(g);

  Eigen::MatrixXd walk_laplacian =
      Eigen::MatrixXd::Identity(n, n) - adjacency_dense(g) / g.degree;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(walk_laplacian);
  const auto& mu = solver.eigenvalues();
  const auto& v = solver.eigenvectors();

  HeatKernelDeviation out;
  out.kappa = mu(1);
  out.bound = std::exp(-out.kappa * t);
  for (std::uint32_t y = 0; y < n; ++y) {
    double p = 0.0;
    for (std::uint32_t i = 0; i < n; ++i) p += std::exp(-mu(i) * t) * v(x, i) * v(y, i);
    out.deviation = std::max(out.deviation, std::abs(p - 1.0 / n));
  }
  out.within_bound = out.deviation <= out.bound;
  return out;
}

HeatKernelDeviation heat_kernel_max_deviation(const graphgen::RegularGraph& g, double t) {
  const std::uint32_t n = g.n_vertices;
  if (n > 512) fail(ErrorKind::size_limit, "heat kernel row capped at n = 512");
  if (t < 0.0) fail(ErrorKind::invalid_parameters, "time must be nonnegative");
  require_connected(g);

  Eigen::MatrixXd walk_laplacian =
      Eigen::MatrixXd::Identity(n, n) - adjacency_dense(g) / g.degree;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(walk_laplacian);
  Eigen::VectorXd decay = (-t * solver.eigenvalues().array()).exp();
  Eigen::MatrixXd kernel =
      solver.eigenvectors() * decay.asDiagonal() * solver.eigenvectors().transpose();

  HeatKernelDeviation out;
  out.kappa = solver.eigenvalues()(1);
  out.bound = std::exp(-out.kappa * t);
  out.deviation = (kernel.array() - 1.0 / n).abs().maxCoeff();
  out.within_bound = out.deviation <= out.bound;
  return out;
}

GreenBoundCheck green_upper_bound(const graphgen::RegularGraph& g, const GreenOperator& G,
                                  double K1, double k3) {
  GreenBoundCheck check;
  double n = static_cast<double>(g.n_vertices);
  double floor = std::pow(n, -k3);
  // Largest far-field value not already covered by the decay term fixes the
  // fitted k3; pairs under the decay envelope put no constraint on the floor.
  double worst_floor_demand = 0.0;
  for (std::uint32_t x = 0; x < g.n_vertices; ++x) {
    auto dist = graphgen::bfs_distances(g, x);
    for (std::uint32_t y = 0; y < g.n_vertices; ++y) {
      double decay = K1 * std::pow(static_cast<double>(g.degree - 1),
                                   -static_cast<double>(dist[y]));
      double bound = std::max(decay, floor);
      double value = G.matrix(x, y);
      double excess = value - bound;
      if (excess > check.worst_excess) {
        check.worst_excess = excess;
        check.worst_x = x;
        check.worst_y = y;
        check.worst_value = value;
        check.worst_bound = bound;
      }
      if (excess > 0.0) check.ok = false;
      if (value > decay) worst_floor_demand = std::max(worst_floor_demand, value);
    }
  }
  check.fitted_k3 = worst_floor_demand > 0.0
                        ? -std::log(worst_floor_demand) / std::log(n)
                        : std::numeric_limits<double>::infinity();
  return check;
}

void write_green_binary(const GreenOperator& G, std::ostream& os) {
  os.write("GAGF", 4);
  std::uint32_t n = G.n_vertices, reserved = 0;
  os.write(reinterpret_cast<const char*>(&n), 4);
  os.write(reinterpret_cast<const char*>(&reserved), 4);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < n; ++j) {
      double v = G.matrix(i, j);
      os.write(reinterpret_cast<const char*>(&v), 8);
    }
  if (!os) fail(ErrorKind::io_error, "green binary write failed");
}

GreenOperator read_green_binary(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "GAGF", 4) != 0)
    fail(ErrorKind::io_error, "green binary: bad magic");
  std::uint32_t n = 0, reserved = 0;
  is.read(reinterpret_cast<char*>(&n), 4);
  is.read(reinterpret_cast<char*>(&reserved), 4);
  if (!is || n == 0 || n > kDenseCap) fail(ErrorKind::io_error, "green binary: bad size");
  GreenOperator G;
  G.n_vertices = n;
  G.matrix.resize(n, n);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < n; ++j) {
      double v;
      is.read(reinterpret_cast<char*>(&v), 8);
      G.matrix(i, j) = v;
    }
  if (!is) fail(ErrorKind::io_error, "green binary: truncated");
  return G;
}

}  // namespace gffx::green
