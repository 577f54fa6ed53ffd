#include "gffx/gff.hpp"

#include <cmath>
#include <string>

#include "gffx/error.hpp"

namespace gffx::gff {

TreeSubtree build_subtree(std::uint32_t n, std::uint32_t degree) {
  if (degree < 3) fail(ErrorKind::invalid_parameters, "subtree: degree must be >= 3");
  if (n == 0) fail(ErrorKind::invalid_parameters, "subtree: need at least the root");

  TreeSubtree t;
  t.degree = degree;
  t.n_vertices = n;
  t.parent.assign(n, kNoParent);
  t.depth.assign(n, 0);

  std::uint32_t next = 1;
  for (std::uint32_t v = 0; v < n && next < n; ++v) {
    std::uint32_t budget = (v == 0) ? degree : degree - 1;
    for (std::uint32_t c = 0; c < budget && next < n; ++c) {
      t.parent[next] = v;
      t.depth[next] = t.depth[v] + 1;
      ++next;
    }
  }
  t.max_depth = t.depth[n - 1];
  return t;
}

std::uint32_t tree_distance(const TreeSubtree& t, std::uint32_t x, std::uint32_t y) {
  if (x >= t.n_vertices || y >= t.n_vertices)
    fail(ErrorKind::invalid_parameters, "tree_distance: vertex out of range");
  std::uint32_t d = 0;
  while (t.depth[x] > t.depth[y]) x = t.parent[x], ++d;
  while (t.depth[y] > t.depth[x]) y = t.parent[y], ++d;
  while (x != y) x = t.parent[x], y = t.parent[y], d += 2;
  return d;
}

std::string to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::tree: return "tree";
    case FieldKind::graph: return "graph";
    case FieldKind::iid: return "iid";
  }
  return "unknown";
}

FieldSample sample_tree_gff(const TreeSubtree& t, Rng& rng) {
  double r = t.degree;
  double rho = 1.0 / (r - 1.0);
  double noise = std::sqrt(1.0 - rho * rho);
  double sigma = std::sqrt((r - 1.0) / (r - 2.0));

  FieldSample s;
  s.kind = FieldKind::tree;
  s.rng_stream_id = rng.stream_id();
  s.values.resize(t.n_vertices);

  Eigen::VectorXd z(t.n_vertices);
  z(0) = rng.gaussian();
  for (std::uint32_t v = 1; v < t.n_vertices; ++v)
    z(v) = rho * z(t.parent[v]) + noise * rng.gaussian();
  s.values = sigma * z;
  return s;
}

FieldFactor factor_green(const green::GreenOperator& G) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(G.matrix);
  if (solver.info() != Eigen::Success)
    fail(ErrorKind::degenerate_operator, "covariance eigendecomposition failed");

  FieldFactor f;
  f.n_vertices = G.n_vertices;
  f.min_eigenvalue = solver.eigenvalues().minCoeff();
  if (f.min_eigenvalue < -1e-9)
    fail(ErrorKind::degenerate_operator, "covariance has a negative eigenvalue");

  Eigen::VectorXd roots(G.n_vertices);
  for (std::uint32_t i = 0; i < G.n_vertices; ++i) {
    double lambda = solver.eigenvalues()(i);
    if (std::abs(lambda) <= 1e-9) {
      ++f.zero_modes;
      roots(i) = 0.0;
    } else {
      roots(i) = std::sqrt(lambda);
    }
  }
  if (f.zero_modes != 1)
    fail(ErrorKind::degenerate_operator,
         "zero-average covariance must have exactly one zero mode, found " +
             std::to_string(f.zero_modes));
  f.factor = solver.eigenvectors() * roots.asDiagonal();
  return f;
}

FieldSample sample_graph_gff(const FieldFactor& f, Rng& rng) {
  FieldSample s;
  s.kind = FieldKind::graph;
  s.rng_stream_id = rng.stream_id();
  Eigen::VectorXd xi(f.n_vertices);
  for (std::uint32_t i = 0; i < f.n_vertices; ++i) xi(i) = rng.gaussian();
  s.values = f.factor * xi;
  return s;
}

FieldSample sample_iid_field(std::uint32_t n, Rng& rng) {
  FieldSample s;
  s.kind = FieldKind::iid;
  s.rng_stream_id = rng.stream_id();
  s.values.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) s.values(i) = rng.gaussian();
  return s;
}

}  // namespace gffx::gff
