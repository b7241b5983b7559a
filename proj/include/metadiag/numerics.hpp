#ifndef METADIAG_NUMERICS_HPP
#define METADIAG_NUMERICS_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace metadiag::numerics {

inline constexpr double kLog2Pi = 1.8378770664093454836;

inline double logistic(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}
inline double logit(double p) { return std::log(p) - std::log1p(-p); }
/// log(1 + exp(x)) without overflow.
inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

/// log(1 + x) - x, accurate for small |x|. Requires x > -1.
double log1p_minus_x(double x);

/// Adaptive Gauss-Kronrod (61-point) integral over [a, b]; either limit may be
/// infinite. Throws std::runtime_error if the requested relative tolerance is
/// not reached.
double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-11,
                 double* error_estimate = nullptr);

/// Integral over [a, b] of a function with integrable singularities at one or
/// both finite endpoints (double-exponential substitution).
double integrate_singular(const std::function<double(double)>& f, double a, double b,
                          double rel_tol = 1e-11);

/// Bracketed root of a monotone or sign-changing function on [lo, hi].
/// Throws if f(lo) and f(hi) share a sign; the message reports both residuals.
double find_root(const std::function<double(double)>& f, double lo, double hi, double abs_tol = 1e-14,
                 int max_iter = 300);

/// Trapezoid rule on a (possibly non-uniform) grid.
double trapezoid(std::span<const double> x, std::span<const double> y);

/// Natural cubic spline through (x_i, y_i), x strictly increasing.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> x, std::vector<double> y);
  double operator()(double t) const;
  double front() const { return x_.front(); }
  double back() const { return x_.back(); }

 private:
  std::vector<double> x_, y_, m_;
};

/// Log of the binomial coefficient C(n, k).
inline double log_choose(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace metadiag::numerics

#endif  // METADIAG_NUMERICS_HPP
