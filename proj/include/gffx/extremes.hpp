#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "gffx/gff.hpp"
#include "gffx/stats.hpp"

namespace gffx::extremes {

/// Standard-deviation scale of the tree field, sigma_r = sqrt((r-1)/(r-2)).
double tree_scale(std::uint32_t degree);

/// Centering and scaling of the maximum of n standard gaussians:
/// a_n = sqrt(2 ln n) - (ln ln n + ln 4 pi) / (2 sqrt(2 ln n)), b_n = 1/a_n
/// (b_n chosen so a_n * b_n rounds to exactly 1). Requires n >= 3 so both
/// logs are positive and degree >= 3 so sigma_r is finite.
struct RescalingConstants {
  std::uint64_t n = 0;
  std::uint32_t degree = 0;
  double sigma_r = 0.0;
  double a_n = 0.0;
  double b_n = 0.0;
};
RescalingConstants rescaling_constants(std::uint64_t n, std::uint32_t degree);

/// Rescaled exceedance process of one field sample: for every kept vertex x,
/// point (values(x)/scale_x - a_n)/b_n. The default scale_x comes from the
/// field kind (sigma_r for tree and graph fields, 1 for iid); a stddev vector
/// replaces it per vertex. Masking drops vertices from the point set but
/// never changes the rescaling constants.
struct ExtremalProcess {
  enum class VertexSet { all, good_only };
  RescalingConstants constants;
  VertexSet vertex_set = VertexSet::all;
  std::size_t n_kept = 0;
  double max_point = 0.0;           // equals points.front(); -inf when empty
  std::vector<double> points;       // descending
};

ExtremalProcess extract_process(const gff::FieldSample& s, const RescalingConstants& c,
                                const Eigen::VectorXd* stddev = nullptr,
                                const std::vector<std::uint8_t>* mask = nullptr);

/// Standard Gumbel law, F(x) = exp(-e^{-x}).
double gumbel_cdf(double x);

/// Two-sided Kolmogorov-Smirnov test of rescaled maxima against the Gumbel
/// law, asymptotic p-value from the Kolmogorov distribution of sqrt(n) D_n.
/// Requires at least 100 replicas for the asymptotic p-value to make sense.
struct KsReport {
  std::size_t n = 0;
  double statistic = 0.0;
  double p_value = 0.0;
};
KsReport ks_gumbel(std::vector<double> maxima);

/// Counts points of a process inside the open interval (lo, hi).
std::size_t count_in(const ExtremalProcess& p, const stats::Interval& interval);

/// The interval family used by the reports: (0, inf), (-1, 0), (-2, -1), (-3, -2).
std::vector<stats::Interval> default_intervals();

/// Interval occupancy versus the limiting Poisson process with intensity
/// e^{-x} dx: expected count e^{-lo} - e^{-hi}, goodness of fit by chi-square
/// over occupancy numbers with bins pooled to expectation >= 5. Intervals
/// must be bounded below; hi = +inf is allowed.
struct PppIntervalReport {
  stats::Interval interval;
  std::size_t n_replicas = 0;
  double mean_count = 0.0;
  double expected_count = 0.0;
  double count_variance = 0.0;
  double chi_square = 0.0;
  int dof = 0;
  double p_value = 1.0;
};
PppIntervalReport ppp_interval_test(const std::vector<std::size_t>& counts,
                                    const stats::Interval& interval);
std::vector<PppIntervalReport> ppp_interval_test(
    const std::vector<ExtremalProcess>& processes,
    const std::vector<stats::Interval>& intervals);

/// Smooth non-decreasing ramp: zero on (-inf, rise_lo], `height` on
/// [rise_hi, inf), C-infinity in between via the e^{-1/t} step. The
/// derivative is supported exactly on (rise_lo, rise_hi).
class TestFunction {
 public:
  TestFunction(double rise_lo, double rise_hi, double height = 1.0);
  double operator()(double x) const;
  double derivative(double x) const;
  double rise_lo() const { return lo_; }
  double rise_hi() const { return hi_; }
  double height() const { return height_; }
  TestFunction scaled(double factor) const;  // same ramp, height * factor

 private:
  double lo_, hi_, height_;
};

/// The ramp family used by the reports: derivative supported on (0,1),
/// (-1,1), (-2,0) for index 0, 1, 2; unit height.
TestFunction canonical_phi(int index);

/// Laplace functional of the limiting Poisson process,
/// exp(-int (1 - e^{-phi(x)}) e^{-x} dx): adaptive quadrature across the
/// rise plus the exact tail (1 - e^{-height}) e^{-rise_hi} where phi is flat.
double ppp_laplace_target(const TestFunction& phi);

/// Empirical Laplace functional from per-replica inner sums S_j = sum_i phi(x_i):
/// mean and standard error of exp(-S_j).
struct LaplaceReport {
  std::size_t n_replicas = 0;
  double empirical = 0.0;
  double std_error = 0.0;
  double target = 0.0;
};
LaplaceReport laplace_functional(const std::vector<double>& inner_sums,
                                 const TestFunction& phi);
LaplaceReport laplace_functional(const std::vector<ExtremalProcess>& processes,
                                 const TestFunction& phi);

/// Inner sum of one replica, sum over points of phi.
double laplace_inner_sum(const ExtremalProcess& p, const TestFunction& phi);

}  // namespace gffx::extremes
