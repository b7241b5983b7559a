#include "metadiag/numerics.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <sstream>

namespace metadiag::numerics {

double log1p_minus_x(double x) {
  if (std::abs(x) < 1e-2) {
    // -x^2/2 + x^3/3 - x^4/4 + ...
    double term = x * x;
    double sum = 0.0;
    for (int k = 2; k < 14; ++k) {
      sum += (k % 2 == 0 ? -term : term) / k;
      term *= x;
    }
    return sum;
  }
  return std::log1p(x) - x;
}

double integrate(const std::function<double(double)>& f, double a, double b, double rel_tol,
                 double* error_estimate) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  double err = 0.0, l1 = 0.0;
  const double value = GK::integrate(f, a, b, 25, rel_tol, &err, &l1);
  if (error_estimate) *error_estimate = err;
  if (!std::isfinite(value) || err > 100.0 * rel_tol * std::max(l1, 1e-300) + 1e-300) {
    std::ostringstream os;
    os << "quadrature did not converge on [" << a << ", " << b << "]: estimate " << value << ", error "
       << err;
    throw std::runtime_error(os.str());
  }
  return value;
}

double integrate_singular(const std::function<double(double)>& f, double a, double b, double rel_tol) {
  boost::math::quadrature::tanh_sinh<double> ts;
  double err = 0.0, l1 = 0.0;
  const double value = ts.integrate(f, a, b, rel_tol, &err, &l1);
  if (!std::isfinite(value)) throw std::runtime_error("singular quadrature produced a non-finite value");
  return value;
}

double find_root(const std::function<double(double)>& f, double lo, double hi, double abs_tol, int max_iter) {
  const double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0)) {
    std::ostringstream os;
    os.precision(10);
    os << "root not bracketed on [" << lo << ", " << hi << "]: residuals " << flo << " and " << fhi;
    throw std::runtime_error(os.str());
  }
  boost::uintmax_t iters = static_cast<boost::uintmax_t>(max_iter);
  auto tol = [abs_tol](double x, double y) { return std::abs(x - y) <= abs_tol; };
  auto [l, h] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
  return 0.5 * (l + h);
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return s;
}

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) throw std::invalid_argument("spline needs >= 2 matching points");
  m_.assign(n, 0.0);
  if (n == 2) return;
  // Tridiagonal solve for second derivatives with natural end conditions.
  std::vector<double> c(n, 0.0), d(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x_[i] - x_[i - 1];
    const double h1 = x_[i + 1] - x_[i];
    const double a = h0 / 6.0, b = (h0 + h1) / 3.0, cc = h1 / 6.0;
    const double r = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
    const double denom = b - a * c[i - 1];
    c[i] = cc / denom;
    d[i] = (r - a * d[i - 1]) / denom;
  }
  for (std::size_t i = n - 2; i >= 1; --i) m_[i] = d[i] - c[i] * m_[i + 1];
}

double CubicSpline::operator()(double t) const {
  auto it = std::upper_bound(x_.begin(), x_.end(), t);
  std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
  i = std::min(i, x_.size() - 2);
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - t) / h;
  const double b = (t - x_[i]) / h;
  return a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
}

}  // namespace metadiag::numerics
