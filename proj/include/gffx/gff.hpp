#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "gffx/green.hpp"
#include "gffx/rng.hpp"

namespace gffx::gff {

constexpr std::uint32_t kNoParent = 0xffffffffu;

/// First n vertices of the infinite r-regular tree in breadth-first order:
/// vertex 0 is the root with r children, every later vertex has r-1 children,
/// attached layer by layer until n vertices exist.
struct TreeSubtree {
  std::uint32_t degree = 0;
  std::uint32_t n_vertices = 0;
  std::uint32_t max_depth = 0;
  std::vector<std::uint32_t> parent;  // kNoParent at the root
  std::vector<std::uint32_t> depth;
};

TreeSubtree build_subtree(std::uint32_t n, std::uint32_t degree);

/// Graph distance inside the tree: climb to the common ancestor. O(depth).
std::uint32_t tree_distance(const TreeSubtree& t, std::uint32_t x, std::uint32_t y);

enum class FieldKind { tree, graph, iid };
std::string to_string(FieldKind kind);

struct FieldSample {
  FieldKind kind = FieldKind::iid;
  std::uint64_t rng_stream_id = 0;
  Eigen::VectorXd values;
};

/// Tree field psi = sigma_r Z where Z is the unit-variance Markov field with
/// per-edge correlation 1/(r-1): along any path correlations multiply, so
/// cov(psi_x, psi_y) = sigma_r^2 (r-1)^{-d(x,y)} = g(d(x,y)). One pass in
/// breadth-first order (parents precede children), n gaussian draws.
FieldSample sample_tree_gff(const TreeSubtree& t, Rng& rng);

/// Symmetric square root of a Green operator, G = F F^T.
struct FieldFactor {
  std::uint32_t n_vertices = 0;
  Eigen::MatrixXd factor;
  double min_eigenvalue = 0.0;  // before clamping
  int zero_modes = 0;           // eigenvalues within 1e-9 of zero
};

/// Eigendecomposition square root. Eigenvalues in [-1e-9, 0) are clamped to
/// zero (symmetric-solver noise on the constant mode); anything below -1e-9,
/// or more than one near-zero mode, is a degenerate-operator error because
/// the covariance then fails to be a zero-average Gaussian covariance.
FieldFactor factor_green(const green::GreenOperator& G);

/// values = F xi with xi iid standard gaussians, so cov = G exactly.
FieldSample sample_graph_gff(const FieldFactor& f, Rng& rng);

/// Independent standard gaussians (reference ensemble).
FieldSample sample_iid_field(std::uint32_t n, Rng& rng);

}  // namespace gffx::gff
