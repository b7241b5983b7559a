// Independent reference computations for the unit tests. Nothing here calls
// into the library's numerics; each oracle follows the textbook definition.
#ifndef METADIAG_TESTS_ORACLES_HPP
#define METADIAG_TESTS_ORACLES_HPP

#include <Eigen/Dense>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

// KL divergence between zero-mean unit-variance bivariate normals with
// correlations rho (flexible) and rho0 (base), from the matrix formula.
inline double kld(double rho, double rho0) {
  Eigen::Matrix2d s, s0;
  s << 1.0, rho, rho, 1.0;
  s0 << 1.0, rho0, rho0, 1.0;
  const Eigen::Matrix2d m = s0.inverse() * s;
  return 0.5 * (m.trace() - 2.0 - std::log(s.determinant() / s0.determinant()));
}

inline double distance(double rho, double rho0) { return std::sqrt(2.0 * kld(rho, rho0)); }

// Integral over (a, b) with endpoint singularities allowed.
inline double integrate(const std::function<double(double)>& f, double a, double b) {
  boost::math::quadrature::tanh_sinh<double> ts;
  return ts.integrate(f, a, b);
}

// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

inline double log_binomial(double k, double n, double eta) {
  const double p = 1.0 / (1.0 + std::exp(-eta));
  return std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1) + k * std::log(p) +
         (n - k) * std::log1p(-p);
}

// log N(y; 0, K) by dense Cholesky.
inline double log_mvn(const Eigen::VectorXd& y, const Eigen::MatrixXd& k) {
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  const Eigen::VectorXd a = llt.matrixL().solve(y);
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < k.rows(); ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  return -0.5 * (a.squaredNorm() + logdet + static_cast<double>(y.size()) * std::log(2.0 * std::numbers::pi));
}

// Evidence of y_se,i = mu + phi_i + e, y_sp,i = nu + psi_i + e with
// (mu, nu) ~ N(0, tau I), (phi_i, psi_i) ~ N(0, sigma), e ~ N(0, v).
inline double gaussian_evidence(const std::vector<double>& y_se, const std::vector<double>& v_se,
                                const std::vector<double>& y_sp, const std::vector<double>& v_sp,
                                const Eigen::Matrix2d& sigma, double tau) {
  const std::size_t n = y_se.size();
  Eigen::VectorXd y(2 * n);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    y(2 * i) = y_se[i];
    y(2 * i + 1) = y_sp[i];
    for (std::size_t j = 0; j < n; ++j) {
      k(2 * i, 2 * j) += tau;
      k(2 * i + 1, 2 * j + 1) += tau;
    }
    k.block<2, 2>(2 * i, 2 * i) += sigma;
    k(2 * i, 2 * i) += v_se[i];
    k(2 * i + 1, 2 * i + 1) += v_sp[i];
  }
  return log_mvn(y, k);
}

// Type-7 sample quantile.
inline double quantile(std::vector<double> x, double p) {
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

}  // namespace oracle

#endif  // METADIAG_TESTS_ORACLES_HPP
