#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "gffx/rng.hpp"

namespace Eigen {
template <typename, int, int, int, int, int>
class Matrix;
}

namespace gffx::graphgen {

/// Simple r-regular graph. Adjacency is flat: row x holds the r distinct
/// neighbors of x. Invariants (checked by validate): no loops, every neighbor
/// list has r distinct entries, adjacency is symmetric.
struct RegularGraph {
  std::uint32_t n_vertices = 0;
  std::uint32_t degree = 0;
  std::uint64_t seed_provenance = 0;
  std::vector<std::uint32_t> adjacency;

  std::span<const std::uint32_t> neighbors(std::uint32_t x) const {
    return {adjacency.data() + static_cast<std::size_t>(x) * degree, degree};
  }
  void validate() const;
};

/// One uniform perfect matching on the n*r half-edges. Half-edge h belongs to
/// vertex h / degree. pairing is an involution with no fixed point.
struct MultiGraphDraw {
  std::uint32_t n_vertices = 0;
  std::uint32_t degree = 0;
  std::vector<std::uint32_t> pairing;

  std::uint32_t owner(std::uint32_t half_edge) const { return half_edge / degree; }
  /// Edge multiset (u <= v per edge), one entry per matched pair.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges() const;
  bool has_loop() const;
  bool has_multi_edge() const;
};

struct VertexCensus {
  std::uint32_t ell = 0;
  std::vector<std::uint8_t> good_flags;
  std::size_t bad_count = 0;
};

struct ExpansionProbe {
  int samples = 0;
  double h0 = 0.0;
  double min_ratio = 0.0;  // worst boundary-edges / set-size seen
  bool ok = false;
};

/// Finite-N structural health checks for a drawn graph, one flag per item:
/// (i) connectivity + positive gap + sampled small-set edge expansion,
/// (ii) at most one cycle in every radius-`ball_radius` ball,
/// (iii) spectral gap positive,
/// (iv) Green decay G(x,y) <= K1 * (r-1)^{-d(x,y)} or N^{-k3} (needs a Green matrix).
struct GraphRegularityReport {
  double spectral_gap = 0.0;
  std::uint32_t diameter = 0;
  std::uint32_t ball_radius = 0;
  std::uint32_t max_cycles_in_ball = 0;
  double K1 = 0.0;
  double k3 = 0.0;
  ExpansionProbe probe;
  bool check_expander = false;
  bool check_cycles = false;
  bool check_gap = false;
  std::optional<bool> check_green_bound;  // unset when no Green matrix was injected
  bool all_passed() const {
    return check_expander && check_cycles && check_gap && check_green_bound.value_or(true);
  }
};

/// Uniform matching on n*degree half-edges. Errors: n*degree odd, degree < 3,
/// or n too small for a simple graph to exist later (n <= degree is allowed
/// here; only simplicity conversion cares).
MultiGraphDraw generate_matching(std::uint32_t n, std::uint32_t degree, std::uint64_t seed);

/// Keeps the draw only if loop-free and multi-edge-free; the surviving law is
/// uniform over simple r-regular graphs (conditioning of the matching law).
std::optional<RegularGraph> to_simple_graph(const MultiGraphDraw& draw);

struct GenerationResult {
  RegularGraph graph;
  std::uint32_t attempts = 0;
};

/// Rejection-samples matchings until simple; attempt k uses the sub-seed
/// derive_stream(seed, k). Throws generation-failed after max_attempts.
GenerationResult generate_simple(std::uint32_t n, std::uint32_t degree, std::uint64_t seed,
                                 std::uint32_t max_attempts = 1000);

inline constexpr std::uint32_t kUnreachable = 0xffffffffu;

/// BFS distances from source; kUnreachable marks separate components.
std::vector<std::uint32_t> bfs_distances(const RegularGraph& g, std::uint32_t source);

/// Vertices of the depth-ell ball of the r-regular tree: 1 + r((r-1)^ell - 1)/(r-2).
std::size_t tree_ball_size(std::uint32_t degree, std::uint32_t ell);
/// Edges of that ball (= size - 1).
std::size_t tree_ball_edges(std::uint32_t degree, std::uint32_t ell);

/// x is ell-good iff the subgraph induced on {y : d(x,y) <= ell} is a tree with
/// the exact r-regular ball layer sizes. Equivalently: BFS to depth ell sees
/// every vertex exactly once and no extra edge among the ball's vertices.
VertexCensus vertex_census(const RegularGraph& g, std::uint32_t ell);

inline constexpr std::size_t kNoCollision = static_cast<std::size_t>(-1);

struct ExplorationResult {
  std::size_t collision_step = kNoCollision;  // 1-based step of first collision
  std::size_t steps = 0;                      // reveals actually performed
  std::size_t max_active = 0;
  bool active_bound_ok = false;  // |act_t| <= r + (r-1) t at every step
};

/// Breadth-first half-edge exploration from `root` on a matching draw: step t
/// reveals the partner of the frontier half-edge; a collision is a partner
/// that is itself active. Stops at the first collision or once the depth-ell_max
/// ball is fully revealed. Relation to the census (tested, both directions):
///   ell-good  =>  collision_step > tree_ball_edges(r, ell)
///   collision_step > tree_ball_edges(r, ell+1)  =>  ell-good.
ExplorationResult collision_time(const MultiGraphDraw& draw, std::uint32_t root,
                                 std::uint32_t ell_max);

struct BadTailReport {
  double mean_bad = 0.0;
  double fitted_k = 0.0;   // mean_bad / scale
  double scale = 0.0;      // r^2 (r-1)^{2 ell - 2}
  std::vector<double> z_values;
  std::vector<double> tail_probs;    // P(|bad| >= scale * z), Monte Carlo
  std::vector<double> tail_stderrs;
  double fitted_k2 = 0.0;  // max_z z * tail_prob(z)
};

/// Monte Carlo over `n_graphs` simple graphs: distribution of the ell-bad count
/// against the r^2(r-1)^{2 ell-2} scale and its z-tail.
BadTailReport bad_tail_check(std::uint32_t n, std::uint32_t degree, std::uint32_t ell,
                             const std::vector<double>& z_values, std::uint32_t n_graphs,
                             std::uint64_t seed);

/// Spectral gap of I - A/r: kappa = 1 - lambda_2(A)/r, in [0,2]. Dense solve for
/// n <= 4096, shifted deflated power iteration above (tolerance 1e-9).
/// Zero iff the graph is disconnected.
double spectral_gap(const RegularGraph& g);

struct StructuralCheckParams {
  double k1 = 0.4;   // ball radius floor(k1 ln N) for the cycle check
  double h0 = 0.1;   // required boundary/size ratio in the expansion probe
  double K1 = 3.0;   // Green decay prefactor; covers the diagonal sigma_r^2
  double k3 = 0.2;   // Green decay floor exponent
  int probe_samples = 100;
};

/// Runs checks (i)-(iii) always; (iv) when a Green matrix is supplied.
/// `green` must be the n x n zero-average Green matrix of g (or nullptr).
GraphRegularityReport structural_report(
    const RegularGraph& g, const StructuralCheckParams& params,
    const Eigen::Matrix<double, -1, -1, 0, -1, -1>* green, std::uint64_t probe_seed);

/// Text edge list: header "N r seed", then one "u v" line per edge with
/// u < v, sorted lexicographically.
void write_edge_list(const RegularGraph& g, std::ostream& os);
RegularGraph read_edge_list(std::istream& is);

/// The Kneser graph K(5,2): 10 vertices, 3-regular, girth 5, diameter 2.
RegularGraph petersen_graph();
/// Complete graph on 4 vertices, the unique simple 3-regular graph on 4 vertices.
RegularGraph complete_graph_k4();

}  // namespace gffx::graphgen
