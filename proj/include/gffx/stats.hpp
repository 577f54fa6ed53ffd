#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

namespace gffx::stats {

/// Bounded open interval (lo, hi); hi may be +infinity where a caller allows it.
struct Interval {
  double lo;
  double hi;
  double length() const { return hi - lo; }
  bool contains(double x) const { return x > lo && x < hi; }
};

/// P(Z > x) for standard normal, via erfc.
double normal_upper_tail(double x);
double normal_cdf(double x);

/// Kolmogorov asymptotic survival function Q(lambda) = 2 sum (-1)^{k-1} e^{-2 k^2 lambda^2},
/// truncated at 100 terms, clamped to [0,1].
double kolmogorov_sf(double lambda);

/// Regularized incomplete gamma P(a,x) and Q(a,x)=1-P(a,x); series for x < a+1,
/// continued fraction otherwise.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

/// Survival function of chi-square with k degrees of freedom.
double chi_square_sf(double x, double k);

double poisson_pmf(unsigned k, double mu);

/// Gauss-Legendre nodes/weights on [-1,1] (Newton on the Legendre recurrence).
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
QuadratureRule gauss_legendre(int n);

/// Gauss-Hermite rule for weight e^{-x^2} (physicists' convention),
/// by Golub-Welsch on the Jacobi matrix.
QuadratureRule gauss_hermite(int n);

/// Adaptive Simpson on [a,b] to absolute tolerance tol.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10);

/// C-infinity step: 0 for t <= 0, 1 for t >= 1, f(t)/(f(t)+f(1-t)) with
/// f(t) = e^{-1/t} in between. Derivatives vanish to all orders at 0 and 1.
double smooth_step(double t);
double smooth_step_prime(double t);
double smooth_step_second(double t);

/// Value and first two derivatives of smooth_step in one pass; shares the two
/// exponentials, so quadrature inner loops should prefer it over three calls.
struct StepDerivatives {
  double value;
  double first;
  double second;
};
StepDerivatives smooth_step_triple(double t);

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
  std::size_t count = 0;
};
Moments sample_moments(const std::vector<double>& xs);

}  // namespace gffx::stats
