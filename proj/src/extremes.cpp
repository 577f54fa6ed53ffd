#include "gffx/extremes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gffx/error.hpp"

namespace gffx::extremes {

double tree_scale(std::uint32_t degree) {
  if (degree < 3) fail(ErrorKind::invalid_parameters, "tree scale needs degree >= 3");
  return std::sqrt((degree - 1.0) / (degree - 2.0));
}

RescalingConstants rescaling_constants(std::uint64_t n, std::uint32_t degree) {
  if (n < 3) fail(ErrorKind::invalid_parameters, "rescaling needs n >= 3");
  RescalingConstants c;
  c.n = n;
  c.degree = degree;
  c.sigma_r = tree_scale(degree);
  double ln_n = std::log(static_cast<double>(n));
  double root = std::sqrt(2.0 * ln_n);
  c.a_n = root - (std::log(ln_n) + std::log(4.0 * M_PI)) / (2.0 * root);
  // Pick the representable reciprocal whose product with a_n rounds to 1.
  c.b_n = 1.0 / c.a_n;
  if (c.a_n * c.b_n != 1.0) {
    double towards = c.a_n * c.b_n > 1.0 ? 0.0 : 2.0;
    double nudged = std::nextafter(c.b_n, towards);
    if (c.a_n * nudged == 1.0) c.b_n = nudged;
  }
  return c;
}

ExtremalProcess extract_process(const gff::FieldSample& s, const RescalingConstants& c,
                                const Eigen::VectorXd* stddev,
                                const std::vector<std::uint8_t>* mask) {
  const std::size_t n = static_cast<std::size_t>(s.values.size());
  if (stddev != nullptr && static_cast<std::size_t>(stddev->size()) != n)
    fail(ErrorKind::invalid_parameters, "stddev vector does not match field size");
  if (mask != nullptr && mask->size() != n)
    fail(ErrorKind::invalid_parameters, "mask does not match field size");

  double kind_scale = s.kind == gff::FieldKind::iid ? 1.0 : c.sigma_r;
  ExtremalProcess p;
  p.constants = c;
  p.vertex_set = mask != nullptr ? ExtremalProcess::VertexSet::good_only
                                 : ExtremalProcess::VertexSet::all;
  p.points.reserve(n);
  for (std::size_t x = 0; x < n; ++x) {
    if (mask != nullptr && (*mask)[x] == 0) continue;
    double scale =
        stddev != nullptr ? (*stddev)(static_cast<Eigen::Index>(x)) : kind_scale;
    if (!(scale > 0.0)) fail(ErrorKind::invalid_parameters, "scale must be positive");
    p.points.push_back((s.values(static_cast<Eigen::Index>(x)) / scale - c.a_n) / c.b_n);
  }
  p.n_kept = p.points.size();
  std::sort(p.points.begin(), p.points.end(), std::greater<double>());
  p.max_point =
      p.points.empty() ? -std::numeric_limits<double>::infinity() : p.points.front();
  return p;
}

double gumbel_cdf(double x) { return std::exp(-std::exp(-x)); }

KsReport ks_gumbel(std::vector<double> maxima) {
  if (maxima.size() < 100)
    fail(ErrorKind::invalid_parameters, "ks test needs at least 100 replicas");
  std::sort(maxima.begin(), maxima.end());
  const std::size_t n = maxima.size();
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double f = gumbel_cdf(maxima[i]);
    d = std::max(d, (i + 1.0) / n - f);
    d = std::max(d, f - static_cast<double>(i) / n);
  }
  KsReport rep;
  rep.n = n;
  rep.statistic = d;
  rep.p_value = stats::kolmogorov_sf(std::sqrt(static_cast<double>(n)) * d);
  return rep;
}

std::size_t count_in(const ExtremalProcess& p, const stats::Interval& interval) {
  std::size_t c = 0;
  for (double x : p.points)
    if (interval.contains(x)) ++c;
  return c;
}

std::vector<stats::Interval> default_intervals() {
  double inf = std::numeric_limits<double>::infinity();
  return {stats::Interval{0.0, inf}, stats::Interval{-1.0, 0.0},
          stats::Interval{-2.0, -1.0}, stats::Interval{-3.0, -2.0}};
}

PppIntervalReport ppp_interval_test(const std::vector<std::size_t>& counts,
                                    const stats::Interval& interval) {
  if (counts.empty()) fail(ErrorKind::invalid_parameters, "interval test needs replicas");
  if (!std::isfinite(interval.lo) || !(interval.hi > interval.lo))
    fail(ErrorKind::invalid_parameters, "interval must be bounded below and nonempty");
  PppIntervalReport rep;
  rep.interval = interval;
  rep.n_replicas = counts.size();
  rep.expected_count = std::exp(-interval.lo) - (std::isfinite(interval.hi)
                                                     ? std::exp(-interval.hi)
                                                     : 0.0);

  double n = static_cast<double>(counts.size());
  std::size_t max_count = 0;
  for (std::size_t c : counts) {
    rep.mean_count += static_cast<double>(c);
    max_count = std::max(max_count, c);
  }
  rep.mean_count /= n;
  for (std::size_t c : counts) {
    double d = static_cast<double>(c) - rep.mean_count;
    rep.count_variance += d * d;
  }
  rep.count_variance /= std::max(1.0, n - 1.0);

  // Poisson goodness of fit with occupancy bins pooled to expectation >= 5.
  std::vector<double> observed(max_count + 1, 0.0);
  for (std::size_t c : counts) observed[c] += 1.0;

  std::vector<double> bin_obs, bin_exp;
  double acc_obs = 0.0, acc_exp = 0.0, cdf = 0.0;
  for (std::size_t k = 0; k <= max_count; ++k) {
    double pk = stats::poisson_pmf(static_cast<unsigned>(k), rep.expected_count);
    cdf += pk;
    acc_obs += observed[k];
    acc_exp += n * pk;
    if (acc_exp >= 5.0) {
      bin_obs.push_back(acc_obs);
      bin_exp.push_back(acc_exp);
      acc_obs = acc_exp = 0.0;
    }
  }
  acc_exp += n * std::max(0.0, 1.0 - cdf);  // everything beyond the largest count
  if (!bin_obs.empty()) {
    bin_obs.back() += acc_obs;
    bin_exp.back() += acc_exp;
  } else {
    bin_obs.push_back(acc_obs);
    bin_exp.push_back(acc_exp);
  }

  if (bin_obs.size() >= 2) {
    for (std::size_t b = 0; b < bin_obs.size(); ++b) {
      double d = bin_obs[b] - bin_exp[b];
      rep.chi_square += d * d / bin_exp[b];
    }
    rep.dof = static_cast<int>(bin_obs.size()) - 1;
    rep.p_value = stats::chi_square_sf(rep.chi_square, rep.dof);
  }
  return rep;
}

std::vector<PppIntervalReport> ppp_interval_test(
    const std::vector<ExtremalProcess>& processes,
    const std::vector<stats::Interval>& intervals) {
  if (processes.empty()) fail(ErrorKind::invalid_parameters, "interval test needs replicas");
  std::vector<PppIntervalReport> reports;
  reports.reserve(intervals.size());
  std::vector<std::size_t> counts(processes.size());
  for (const auto& interval : intervals) {
    for (std::size_t j = 0; j < processes.size(); ++j)
      counts[j] = count_in(processes[j], interval);
    reports.push_back(ppp_interval_test(counts, interval));
  }
  return reports;
}

TestFunction::TestFunction(double rise_lo, double rise_hi, double height)
    : lo_(rise_lo), hi_(rise_hi), height_(height) {
  if (!(hi_ > lo_)) fail(ErrorKind::invalid_parameters, "ramp rise must be nonempty");
  if (!(height > 0.0)) fail(ErrorKind::invalid_parameters, "ramp height must be positive");
}

double TestFunction::operator()(double x) const {
  return height_ * stats::smooth_step((x - lo_) / (hi_ - lo_));
}

double TestFunction::derivative(double x) const {
  return height_ / (hi_ - lo_) * stats::smooth_step_prime((x - lo_) / (hi_ - lo_));
}

TestFunction TestFunction::scaled(double factor) const {
  return TestFunction(lo_, hi_, height_ * factor);
}

TestFunction canonical_phi(int index) {
  switch (index) {
    case 0: return TestFunction(0.0, 1.0);
    case 1: return TestFunction(-1.0, 1.0);
    case 2: return TestFunction(-2.0, 0.0);
  }
  fail(ErrorKind::invalid_parameters, "canonical ramp index must be 0, 1, or 2");
}

double ppp_laplace_target(const TestFunction& phi) {
  auto integrand = [&phi](double x) { return (1.0 - std::exp(-phi(x))) * std::exp(-x); };
  double rise = stats::adaptive_simpson(integrand, phi.rise_lo(), phi.rise_hi(), 1e-12);
  double flat = (1.0 - std::exp(-phi.height())) * std::exp(-phi.rise_hi());
  return std::exp(-(rise + flat));
}

LaplaceReport laplace_functional(const std::vector<double>& inner_sums,
                                 const TestFunction& phi) {
  if (inner_sums.empty()) fail(ErrorKind::invalid_parameters, "laplace needs replicas");
  LaplaceReport rep;
  rep.n_replicas = inner_sums.size();
  rep.target = ppp_laplace_target(phi);
  std::vector<double> vals(inner_sums.size());
  for (std::size_t i = 0; i < inner_sums.size(); ++i) vals[i] = std::exp(-inner_sums[i]);
  auto m = stats::sample_moments(vals);
  rep.empirical = m.mean;
  rep.std_error = std::sqrt(m.variance / static_cast<double>(m.count));
  return rep;
}

LaplaceReport laplace_functional(const std::vector<ExtremalProcess>& processes,
                                 const TestFunction& phi) {
  std::vector<double> sums(processes.size());
  for (std::size_t j = 0; j < processes.size(); ++j)
    sums[j] = laplace_inner_sum(processes[j], phi);
  return laplace_functional(sums, phi);
}

double laplace_inner_sum(const ExtremalProcess& p, const TestFunction& phi) {
  double s = 0.0;
  for (double x : p.points) {
    if (x <= phi.rise_lo()) break;  // points are descending; phi vanishes below the rise
    s += phi(x);
  }
  return s;
}

}  // namespace gffx::extremes
