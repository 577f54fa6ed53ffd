#include "gffx/stats.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "gffx/error.hpp"

namespace gffx::stats {

double normal_upper_tail(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // Dual theta series; the direct one needs O(1/lambda) terms here.
    double v = std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
    double cdf = 0.0;
    for (int k = 1; k <= 100; ++k) {
      double term = std::exp(-double(2 * k - 1) * (2 * k - 1) * v);
      cdf += term;
      if (term < 1e-18 * cdf) break;
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

// Series representation, valid and fast for x < a+1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 10000; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz continued fraction for Q(a,x), valid for x >= a+1.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    double an = -static_cast<double>(i) * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0) fail(ErrorKind::invalid_parameters, "gamma_p domain");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
  if (a <= 0.0 || x < 0.0) fail(ErrorKind::invalid_parameters, "gamma_q domain");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double chi_square_sf(double x, double k) {
  if (x <= 0.0) return 1.0;
  return gamma_q(k / 2.0, x / 2.0);
}

double poisson_pmf(unsigned k, double mu) {
  if (mu < 0.0) fail(ErrorKind::invalid_parameters, "poisson_pmf: mu < 0");
  if (mu == 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(k * std::log(mu) - mu - std::lgamma(static_cast<double>(k) + 1.0));
}

QuadratureRule gauss_legendre(int n) {
  if (n < 1) fail(ErrorKind::invalid_parameters, "gauss_legendre: n < 1");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Chebyshev-angle initial guess, then Newton on P_n.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
    rule.weights[n - 1 - i] = rule.weights[i];
  }
  return rule;
}

QuadratureRule gauss_hermite(int n) {
  if (n < 1) fail(ErrorKind::invalid_parameters, "gauss_hermite: n < 1");
  // Jacobi matrix for the (physicists') Hermite weight: zero diagonal,
  // off-diagonal sqrt(k/2). Eigenvalues are the nodes; weights are
  // sqrt(pi) * (first eigenvector component)^2.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    double b = std::sqrt(k / 2.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = solver.eigenvalues()(i);
    double v0 = solver.eigenvectors()(0, i);
    rule.weights[i] = sqrt_pi * v0 * v0;
  }
  return rule;
}

namespace {

double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                   double fm, double fb, double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol) {
  if (!(b > a)) return 0.0;
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 50);
}

namespace {

// e^{-1/t} extended by zero, with first and second derivatives.
double flat_exp(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
double flat_exp_d1(double t) { return t > 0.0 ? std::exp(-1.0 / t) / (t * t) : 0.0; }
double flat_exp_d2(double t) {
  return t > 0.0 ? std::exp(-1.0 / t) * (1.0 - 2.0 * t) / (t * t * t * t) : 0.0;
}

}  // namespace

double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  double f = flat_exp(t), g = flat_exp(1.0 - t);
  return f / (f + g);
}

double smooth_step_prime(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  double f = flat_exp(t), g = flat_exp(1.0 - t);
  double fp = flat_exp_d1(t), gp = -flat_exp_d1(1.0 - t);
  double s = f + g;
  return (fp * g - f * gp) / (s * s);
}

double smooth_step_second(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  double f = flat_exp(t), g = flat_exp(1.0 - t);
  double fp = flat_exp_d1(t), gp = -flat_exp_d1(1.0 - t);
  double fpp = flat_exp_d2(t), gpp = flat_exp_d2(1.0 - t);
  double s = f + g;
  double u = fp * g - f * gp;
  double up = fpp * g - f * gpp;
  return (up * s - 2.0 * u * (fp + gp)) / (s * s * s);
}

StepDerivatives smooth_step_triple(double t) {
  if (t <= 0.0) return {0.0, 0.0, 0.0};
  if (t >= 1.0) return {1.0, 0.0, 0.0};
  double f = flat_exp(t), g = flat_exp(1.0 - t);
  double t2 = t * t, r = 1.0 - t, r2 = r * r;
  double fp = f / t2, gp = -g / r2;
  double fpp = f * (1.0 - 2.0 * t) / (t2 * t2);
  double gpp = g * (2.0 * t - 1.0) / (r2 * r2);
  double s = f + g;
  double u = fp * g - f * gp;
  double up = fpp * g - f * gpp;
  return {f / s, u / (s * s), (up * s - 2.0 * u * (fp + gp)) / (s * s * s)};
}

Moments sample_moments(const std::vector<double>& xs) {
  Moments m;
  m.count = xs.size();
  if (xs.empty()) return m;
  double sum = 0.0;
  for (double x : xs) sum += x;
  m.mean = sum / xs.size();
  double ss = 0.0;
  for (double x : xs) ss += (x - m.mean) * (x - m.mean);
  m.variance = xs.size() > 1 ? ss / (xs.size() - 1) : 0.0;
  return m;
}

}  // namespace gffx::stats
