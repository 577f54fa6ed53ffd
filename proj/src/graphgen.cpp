#include "gffx/graphgen.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <string>

#include "gffx/error.hpp"

namespace gffx::graphgen {

void RegularGraph::validate() const {
  if (degree < 3) fail(ErrorKind::invalid_parameters, "degree must be >= 3");
  if (adjacency.size() != static_cast<std::size_t>(n_vertices) * degree)
    fail(ErrorKind::invalid_parameters, "adjacency size mismatch");
  for (std::uint32_t x = 0; x < n_vertices; ++x) {
    auto nb = neighbors(x);
    std::set<std::uint32_t> distinct(nb.begin(), nb.end());
    if (distinct.size() != degree)
      fail(ErrorKind::invalid_parameters, "repeated neighbor at vertex " + std::to_string(x));
    if (distinct.count(x)) fail(ErrorKind::invalid_parameters, "self-loop at " + std::to_string(x));
    for (std::uint32_t y : nb) {
      if (y >= n_vertices) fail(ErrorKind::invalid_parameters, "neighbor out of range");
      auto back = neighbors(y);
      if (std::find(back.begin(), back.end(), x) == back.end())
        fail(ErrorKind::invalid_parameters, "asymmetric adjacency");
    }
  }
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> MultiGraphDraw::edges() const {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  out.reserve(pairing.size() / 2);
  for (std::uint32_t h = 0; h < pairing.size(); ++h) {
    std::uint32_t p = pairing[h];
    if (h < p) out.emplace_back(std::min(owner(h), owner(p)), std::max(owner(h), owner(p)));
  }
  return out;
}

bool MultiGraphDraw::has_loop() const {
  for (std::uint32_t h = 0; h < pairing.size(); ++h)
    if (owner(h) == owner(pairing[h])) return true;
  return false;
}

bool MultiGraphDraw::has_multi_edge() const {
  auto es = edges();
  std::sort(es.begin(), es.end());
  return std::adjacent_find(es.begin(), es.end()) != es.end();
}

MultiGraphDraw generate_matching(std::uint32_t n, std::uint32_t degree, std::uint64_t seed) {
  if (degree < 3) fail(ErrorKind::invalid_parameters, "degree must be >= 3");
  if (n < 1) fail(ErrorKind::invalid_parameters, "need at least one vertex");
  std::uint64_t half_edges = static_cast<std::uint64_t>(n) * degree;
  if (half_edges % 2 != 0)
    fail(ErrorKind::invalid_parameters, "n * degree must be even, got " +
                                            std::to_string(half_edges) + " half-edges");

  // A uniform permutation paired off consecutively is a uniform perfect matching.
  std::vector<std::uint32_t> order(half_edges);
  for (std::uint32_t h = 0; h < half_edges; ++h) order[h] = h;
  Rng rng(seed);
  rng.shuffle(order);

  MultiGraphDraw draw;
  draw.n_vertices = n;
  draw.degree = degree;
  draw.pairing.resize(half_edges);
  for (std::size_t i = 0; i < half_edges; i += 2) {
    draw.pairing[order[i]] = order[i + 1];
    draw.pairing[order[i + 1]] = order[i];
  }
  return draw;
}

std::optional<RegularGraph> to_simple_graph(const MultiGraphDraw& draw) {
  if (draw.has_loop() || draw.has_multi_edge()) return std::nullopt;
  RegularGraph g;
  g.n_vertices = draw.n_vertices;
  g.degree = draw.degree;
  g.adjacency.assign(static_cast<std::size_t>(draw.n_vertices) * draw.degree, 0);
  std::vector<std::uint32_t> fill(draw.n_vertices, 0);
  for (auto [u, v] : draw.edges()) {
    g.adjacency[static_cast<std::size_t>(u) * g.degree + fill[u]++] = v;
    g.adjacency[static_cast<std::size_t>(v) * g.degree + fill[v]++] = u;
  }
  for (std::uint32_t x = 0; x < g.n_vertices; ++x) {
    auto* row = g.adjacency.data() + static_cast<std::size_t>(x) * g.degree;
    std::sort(row, row + g.degree);
  }
  return g;
}

GenerationResult generate_simple(std::uint32_t n, std::uint32_t degree, std::uint64_t seed,
                                 std::uint32_t max_attempts) {
  if (n <= degree)
    fail(ErrorKind::invalid_parameters,
         "no simple " + std::to_string(degree) + "-regular graph on " + std::to_string(n) +
             " vertices");
  for (std::uint32_t attempt = 0; attempt < max_attempts; ++attempt) {
    auto draw = generate_matching(n, degree, derive_stream(seed, attempt));
    if (auto g = to_simple_graph(draw)) {
      g->seed_provenance = seed;
      return {std::move(*g), attempt + 1};
    }
  }
  fail(ErrorKind::generation_failed,
       "no simple graph in " + std::to_string(max_attempts) + " attempts");
}

std::vector<std::uint32_t> bfs_distances(const RegularGraph& g, std::uint32_t source) {
  if (source >= g.n_vertices) fail(ErrorKind::invalid_parameters, "source out of range");
  std::vector<std::uint32_t> dist(g.n_vertices, kUnreachable);
  std::vector<std::uint32_t> queue;
  queue.reserve(g.n_vertices);
  dist[source] = 0;
  queue.push_back(source);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    std::uint32_t u = queue[head];
    for (std::uint32_t v : g.neighbors(u)) {
      if (dist[v] == kUnreachable) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

std::size_t tree_ball_size(std::uint32_t degree, std::uint32_t ell) {
  std::size_t size = 1, layer = 1;
  for (std::uint32_t d = 1; d <= ell; ++d) {
    layer = (d == 1) ? degree : layer * (degree - 1);
    size += layer;
  }
  return size;
}

std::size_t tree_ball_edges(std::uint32_t degree, std::uint32_t ell) {
  return tree_ball_size(degree, ell) - 1;
}

namespace {

// Ball membership via version stamps so repeated censuses never clear O(N) state.
struct BallScratch {
  std::vector<std::uint32_t> stamp;
  std::vector<std::uint32_t> depth;
  std::vector<std::uint32_t> members;
  std::uint32_t epoch = 0;

  void reset(std::size_t n) {
    if (stamp.size() != n) {
      stamp.assign(n, 0);
      depth.assign(n, 0);
      epoch = 0;
    }
  }

  // Collects {y : d(x,y) <= ell}; returns the induced edge count.
  std::size_t collect(const RegularGraph& g, std::uint32_t x, std::uint32_t ell) {
    ++epoch;
    members.clear();
    members.push_back(x);
    stamp[x] = epoch;
    depth[x] = 0;
    for (std::size_t head = 0; head < members.size(); ++head) {
      std::uint32_t u = members[head];
      if (depth[u] == ell) break;  // BFS order: all later members are at depth >= ell
      for (std::uint32_t v : g.neighbors(u)) {
        if (stamp[v] != epoch) {
          stamp[v] = epoch;
          depth[v] = depth[u] + 1;
          members.push_back(v);
        }
      }
    }
    std::size_t edges = 0;
    for (std::uint32_t u : members)
      for (std::uint32_t v : g.neighbors(u))
        if (stamp[v] == epoch && v > u) ++edges;
    return edges;
  }
};

}  // namespace

VertexCensus vertex_census(const RegularGraph& g, std::uint32_t ell) {
  VertexCensus census;
  census.ell = ell;
  census.good_flags.assign(g.n_vertices, 1);
  if (ell == 0) return census;  // radius-0 ball is always a (trivial) tree

  std::size_t want_size = tree_ball_size(g.degree, ell);
  BallScratch scratch;
  scratch.reset(g.n_vertices);
  for (std::uint32_t x = 0; x < g.n_vertices; ++x) {
    std::size_t edges = scratch.collect(g, x, ell);
    bool good = scratch.members.size() == want_size && edges == want_size - 1;
    census.good_flags[x] = good ? 1 : 0;
    if (!good) ++census.bad_count;
  }
  return census;
}

ExplorationResult collision_time(const MultiGraphDraw& draw, std::uint32_t root,
                                 std::uint32_t ell_max) {
  if (root >= draw.n_vertices) fail(ErrorKind::invalid_parameters, "root out of range");
  if (ell_max == 0) fail(ErrorKind::invalid_parameters, "ell_max must be >= 1");
  const std::uint32_t r = draw.degree;

  std::vector<std::uint8_t> explored(draw.n_vertices, 0);
  std::vector<std::uint8_t> matched(draw.pairing.size(), 0);
  // Frontier of unmatched half-edges in breadth-first order, with owner depth.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> frontier;
  frontier.reserve(tree_ball_size(r, ell_max) * r);

  explored[root] = 1;
  for (std::uint32_t i = 0; i < r; ++i) frontier.emplace_back(root * r + i, 0);

  ExplorationResult result;
  std::size_t active = r;
  result.max_active = active;
  result.active_bound_ok = true;

  std::size_t head = 0;
  while (head < frontier.size()) {
    auto [h, depth] = frontier[head++];
    if (matched[h]) continue;           // consumed from the other side by a collision
    if (depth >= ell_max) break;        // depth-ell_max ball fully revealed
    std::uint32_t partner = draw.pairing[h];
    ++result.steps;
    matched[h] = 1;
    matched[partner] = 1;
    std::uint32_t v = draw.owner(partner);
    if (explored[v]) {
      // Partner was an active half-edge: the revealed edge closes a cycle.
      result.collision_step = result.steps;
      active -= 2;
      break;
    }
    explored[v] = 1;
    active -= 1;  // h left the active set; partner was never active
    for (std::uint32_t i = 0; i < r; ++i) {
      std::uint32_t hv = v * r + i;
      if (hv != partner) {
        frontier.emplace_back(hv, depth + 1);
        ++active;
      }
    }
    result.max_active = std::max(result.max_active, active);
    if (active > r + static_cast<std::size_t>(r - 1) * result.steps)
      result.active_bound_ok = false;
  }
  return result;
}

BadTailReport bad_tail_check(std::uint32_t n, std::uint32_t degree, std::uint32_t ell,
                             const std::vector<double>& z_values, std::uint32_t n_graphs,
                             std::uint64_t seed) {
  if (n_graphs == 0) fail(ErrorKind::invalid_parameters, "n_graphs must be positive");
  BadTailReport report;
  report.scale = static_cast<double>(degree) * degree *
                 std::pow(static_cast<double>(degree - 1), 2.0 * ell - 2.0);
  report.z_values = z_values;

  std::vector<std::size_t> bad_counts(n_graphs);
  double sum = 0.0;
  for (std::uint32_t i = 0; i < n_graphs; ++i) {
    auto gen = generate_simple(n, degree, derive_stream(seed, i));
    auto census = vertex_census(gen.graph, ell);
    bad_counts[i] = census.bad_count;
    sum += static_cast<double>(census.bad_count);
  }
  report.mean_bad = sum / n_graphs;
  report.fitted_k = report.mean_bad / report.scale;

  for (double z : z_values) {
    double threshold = report.scale * z;
    std::size_t hits = 0;
    for (std::size_t b : bad_counts)
      if (static_cast<double>(b) >= threshold) ++hits;
    double p = static_cast<double>(hits) / n_graphs;
    report.tail_probs.push_back(p);
    report.tail_stderrs.push_back(std::sqrt(p * (1.0 - p) / n_graphs));
    report.fitted_k2 = std::max(report.fitted_k2, z * p);
  }
  return report;
}

namespace {

double spectral_gap_dense(const RegularGraph& g) {
  const std::uint32_t n = g.n_vertices;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (std::uint32_t x = 0; x < n; ++x)
    for (std::uint32_t y : g.neighbors(x)) a(x, y) = 1.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  double lambda2 = solver.eigenvalues()(n - 2);
  return 1.0 - lambda2 / g.degree;
}

// Power iteration on (I + A/r)/2 with the constant mode projected out. The
// shift maps the spectrum into [0,1], so the iteration converges to the
// second-largest signed eigenvalue of A/r rather than the largest in modulus.
double spectral_gap_power(const RegularGraph& g) {
  const std::uint32_t n = g.n_vertices;
  Eigen::VectorXd x(n);
  Rng rng(0x5eedu ^ g.seed_provenance);
  for (std::uint32_t i = 0; i < n; ++i) x(i) = rng.gaussian();
  x.array() -= x.mean();
  x.normalize();
  double theta = 0.0;
  for (int iter = 0; iter < 200000; ++iter) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    for (std::uint32_t u = 0; u < n; ++u) {
      double acc = 0.0;
      for (std::uint32_t v : g.neighbors(u)) acc += x(v);
      y(u) = 0.5 * (x(u) + acc / g.degree);
    }
    y.array() -= y.mean();
    double norm = y.norm();
    if (norm < 1e-300) return 2.0;  // iterate annihilated: lambda_2/r = -1
    y /= norm;
    double theta_new = norm;  // Rayleigh quotient of the positive shifted operator
    if (std::abs(theta_new - theta) < 1e-9 * std::max(1.0, std::abs(theta_new)) &&
        iter > 10) {
      theta = theta_new;
      break;
    }
    theta = theta_new;
    x = std::move(y);
  }
  double lambda2_over_r = 2.0 * theta - 1.0;
  return 1.0 - lambda2_over_r;
}

}  // namespace

double spectral_gap(const RegularGraph& g) {
  if (g.n_vertices < 2) fail(ErrorKind::invalid_parameters, "graph too small");
  return g.n_vertices <= 4096 ? spectral_gap_dense(g) : spectral_gap_power(g);
}

GraphRegularityReport structural_report(const RegularGraph& g,
                                        const StructuralCheckParams& params,
                                        const Eigen::MatrixXd* green,
                                        std::uint64_t probe_seed) {
  GraphRegularityReport report;
  report.K1 = params.K1;
  report.k3 = params.k3;
  const std::uint32_t n = g.n_vertices;

  report.spectral_gap = spectral_gap(g);
  report.check_gap = report.spectral_gap > 0.0;

  // Diameter and, if injected, the Green decay check share one BFS sweep.
  bool connected = true;
  std::uint32_t diameter = 0;
  bool green_ok = green != nullptr;
  double n_floor = std::pow(static_cast<double>(n), -params.k3);
  for (std::uint32_t x = 0; x < n && connected; ++x) {
    auto dist = bfs_distances(g, x);
    for (std::uint32_t y = 0; y < n; ++y) {
      if (dist[y] == kUnreachable) {
        connected = false;
        break;
      }
      diameter = std::max(diameter, dist[y]);
      if (green != nullptr) {
        double decay = std::pow(static_cast<double>(g.degree - 1),
                                -static_cast<double>(dist[y]));
        if ((*green)(x, y) > std::max(params.K1 * decay, n_floor)) green_ok = false;
      }
    }
  }
  report.diameter = connected ? diameter : kUnreachable;
  if (green != nullptr) report.check_green_bound = green_ok;

  // Cycle check: first Betti number of every radius-floor(k1 ln N) ball.
  report.ball_radius =
      std::max<std::uint32_t>(1, static_cast<std::uint32_t>(params.k1 * std::log(n)));
  BallScratch scratch;
  scratch.reset(n);
  for (std::uint32_t x = 0; x < n; ++x) {
    std::size_t edges = scratch.collect(g, x, report.ball_radius);
    std::size_t cycles = edges + 1 - scratch.members.size();  // connected ball
    report.max_cycles_in_ball =
        std::max(report.max_cycles_in_ball, static_cast<std::uint32_t>(cycles));
  }
  report.check_cycles = report.max_cycles_in_ball <= 1;

  // Edge-expansion probe on BFS-grown connected sets of size <= N/2.
  report.probe.samples = params.probe_samples;
  report.probe.h0 = params.h0;
  report.probe.min_ratio = std::numeric_limits<double>::infinity();
  Rng rng(probe_seed);
  for (int s = 0; s < params.probe_samples; ++s) {
    std::uint32_t root = static_cast<std::uint32_t>(rng.uniform_below(n));
    std::size_t target = 1 + rng.uniform_below(std::max<std::uint64_t>(1, n / 2));
    scratch.collect(g, root, n);  // full BFS order from root
    std::size_t size = std::min(target, scratch.members.size());
    std::vector<std::uint8_t> in_set(n, 0);
    for (std::size_t i = 0; i < size; ++i) in_set[scratch.members[i]] = 1;
    std::size_t boundary = 0;
    for (std::size_t i = 0; i < size; ++i)
      for (std::uint32_t v : g.neighbors(scratch.members[i]))
        if (!in_set[v]) ++boundary;
    report.probe.min_ratio =
        std::min(report.probe.min_ratio, static_cast<double>(boundary) / size);
  }
  report.probe.ok = report.probe.min_ratio >= params.h0;
  report.check_expander = connected && report.check_gap && report.probe.ok;
  return report;
}

void write_edge_list(const RegularGraph& g, std::ostream& os) {
  os << g.n_vertices << ' ' << g.degree << ' ' << g.seed_provenance << '\n';
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  for (std::uint32_t x = 0; x < g.n_vertices; ++x)
    for (std::uint32_t y : g.neighbors(x))
      if (x < y) edges.emplace_back(x, y);
  std::sort(edges.begin(), edges.end());
  for (auto [u, v] : edges) os << u << ' ' << v << '\n';
}

RegularGraph read_edge_list(std::istream& is) {
  RegularGraph g;
  if (!(is >> g.n_vertices >> g.degree >> g.seed_provenance))
    fail(ErrorKind::io_error, "edge list: bad header");
  std::size_t n_edges = static_cast<std::size_t>(g.n_vertices) * g.degree / 2;
  g.adjacency.assign(static_cast<std::size_t>(g.n_vertices) * g.degree, 0);
  std::vector<std::uint32_t> fill(g.n_vertices, 0);
  for (std::size_t e = 0; e < n_edges; ++e) {
    std::uint32_t u, v;
    if (!(is >> u >> v)) fail(ErrorKind::io_error, "edge list: truncated");
    if (u >= g.n_vertices || v >= g.n_vertices)
      fail(ErrorKind::io_error, "edge list: vertex out of range");
    if (fill[u] >= g.degree || fill[v] >= g.degree)
      fail(ErrorKind::io_error, "edge list: degree overflow at edge " + std::to_string(e));
    g.adjacency[static_cast<std::size_t>(u) * g.degree + fill[u]++] = v;
    g.adjacency[static_cast<std::size_t>(v) * g.degree + fill[v]++] = u;
  }
  for (std::uint32_t x = 0; x < g.n_vertices; ++x) {
    auto* row = g.adjacency.data() + static_cast<std::size_t>(x) * g.degree;
    std::sort(row, row + g.degree);
  }
  g.validate();
  return g;
}

RegularGraph petersen_graph() {
  RegularGraph g;
  g.n_vertices = 10;
  g.degree = 3;
  g.adjacency.assign(30, 0);
  std::vector<std::uint32_t> fill(10, 0);
  auto add = [&](std::uint32_t u, std::uint32_t v) {
    g.adjacency[u * 3 + fill[u]++] = v;
    g.adjacency[v * 3 + fill[v]++] = u;
  };
  for (std::uint32_t i = 0; i < 5; ++i) {
    add(i, (i + 1) % 5);          // outer cycle
    add(i, i + 5);                // spoke
    add(i + 5, (i + 2) % 5 + 5);  // inner pentagram
  }
  for (std::uint32_t x = 0; x < 10; ++x)
    std::sort(g.adjacency.begin() + x * 3, g.adjacency.begin() + x * 3 + 3);
  return g;
}

RegularGraph complete_graph_k4() {
  RegularGraph g;
  g.n_vertices = 4;
  g.degree = 3;
  g.adjacency = {1, 2, 3, 0, 2, 3, 0, 1, 3, 0, 1, 2};
  return g;
}

}  // namespace gffx::graphgen
