#include "metadiag/marginals.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "metadiag/numerics.hpp"

namespace metadiag {

namespace {

using numerics::kLog2Pi;

double quantile_from_cdf(std::span<const double> x, std::span<const double> d, const std::vector<double>& cdf,
                         double target) {
  const std::size_t n = x.size();
  if (target <= 0.0) return x.front();
  if (target >= cdf.back()) return x.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
  const std::size_t k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - cdf.begin())) - 1;
  if (k + 1 >= n) return x.back();
  // Mass over [x_k, x_k + u] with linear density: d0 u + a u^2.
  const double h = x[k + 1] - x[k];
  const double r = target - cdf[k];
  const double d0 = d[k];
  const double a = (d[k + 1] - d[k]) / (2.0 * h);
  const double disc = std::max(0.0, d0 * d0 + 4.0 * a * r);
  const double denom = d0 + std::sqrt(disc);
  const double u = denom > 0.0 ? 2.0 * r / denom : 0.0;
  return x[k] + std::clamp(u, 0.0, h);
}

std::vector<double> cumulative(std::span<const double> x, std::span<const double> d) {
  std::vector<double> c(x.size(), 0.0);
  for (std::size_t i = 1; i < x.size(); ++i) c[i] = c[i - 1] + 0.5 * (d[i] + d[i - 1]) * (x[i] - x[i - 1]);
  return c;
}

void check_density(std::span<const double> x, std::span<const double> d) {
  if (x.size() != d.size()) throw std::invalid_argument("density grid and values differ in length");
  if (x.size() < 30) throw std::invalid_argument("density grid needs at least 30 points");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(d[i])) throw std::invalid_argument("non-finite density value");
    if (d[i] < 0.0) throw std::invalid_argument("negative density value");
    if (i > 0 && !(x[i] > x[i - 1])) throw std::invalid_argument("density grid must be strictly increasing");
  }
}

// Summary of g(T) for T with density p on grid t; g increasing.
Summary summarize_transformed(std::span<const double> t, std::span<const double> p,
                              const std::function<double(double)>& g) {
  check_density(t, p);
  const auto cdf = cumulative(t, p);
  const double z = cdf.back();
  if (!(z > 0.0)) throw std::invalid_argument("density has zero mass");
  std::vector<double> gt(t.size()), prod(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    gt[i] = g(t[i]);
    prod[i] = gt[i] * p[i];
  }
  Summary s;
  s.mean = numerics::trapezoid(t, prod) / z;
  for (std::size_t i = 0; i < t.size(); ++i) prod[i] = (gt[i] - s.mean) * (gt[i] - s.mean) * p[i];
  s.sd = std::sqrt(numerics::trapezoid(t, prod) / z);
  s.q025 = g(quantile_from_cdf(t, p, cdf, 0.025 * z));
  s.q50 = g(quantile_from_cdf(t, p, cdf, 0.5 * z));
  s.q975 = g(quantile_from_cdf(t, p, cdf, 0.975 * z));
  return s;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return v;
}

// Marginal of g(T) tabulated on the external scale and renormalized there.
Marginal transformed_marginal(std::string name, const std::vector<double>& t, const std::vector<double>& p,
                              const std::function<double(double)>& g, const std::function<double(double)>& dg) {
  Marginal m;
  m.name = std::move(name);
  m.summary = summarize_transformed(t, p, g);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double x = g(t[i]);
    if (!m.x.empty() && !(x > m.x.back())) continue;  // saturated in double precision
    m.x.push_back(x);
    m.density.push_back(p[i] / dg(t[i]));
  }
  const double z = numerics::trapezoid(m.x, m.density);
  if (z > 0.0)
    for (auto& d : m.density) d /= z;
  return m;
}

// One grid point's marginal for a fixed effect: Gaussian, or a spline of the
// pinned log density in standardized units t = (x - centre) / scale.
struct Component {
  double weight = 0.0;
  double centre = 0.0;
  double scale = 1.0;
  bool laplace = false;
  numerics::CubicSpline log_density;  // relative, in t
  double edge = 0.0;
  double log_norm = 0.5 * kLog2Pi;
  double mean_shift = 0.0;  // component mean minus centre

  double log_t(double t) const {
    if (!laplace) return -0.5 * t * t;
    if (t < -edge) return log_density(-edge) - 0.5 * (t * t - edge * edge);
    if (t > edge) return log_density(edge) - 0.5 * (t * t - edge * edge);
    return log_density(t);
  }
  double pdf(double x) const {
    const double t = (x - centre) / scale;
    return std::exp(log_t(t) - log_norm) / scale;
  }
};

// Fills comp.log_density from pinned Laplace evaluations; false on failure.
bool build_laplace_component(Component& comp, const LatentModel& model, const GridPoint& p, double fixed_variance,
                             std::size_t j, int n_points) {
  const int half = std::max(2, n_points / 2);
  const double edge = 5.0;
  std::vector<double> t(static_cast<std::size_t>(2 * half + 1)), lp(t.size());
  try {
    Eigen::VectorXd centre_mode;
    const double l0 = pinned_log_density(model, p.hyper, fixed_variance, j, comp.centre, p.approx.mode, &centre_mode);
    t[static_cast<std::size_t>(half)] = 0.0;
    lp[static_cast<std::size_t>(half)] = 0.0;
    for (int dir : {-1, 1}) {
      Eigen::VectorXd start = centre_mode;
      for (int k = 1; k <= half; ++k) {
        const double tk = dir * edge * k / half;
        Eigen::VectorXd mode;
        const double v =
            pinned_log_density(model, p.hyper, fixed_variance, j, comp.centre + comp.scale * tk, start, &mode);
        const auto idx = static_cast<std::size_t>(half + dir * k);
        t[idx] = tk;
        lp[idx] = v - l0;
        start = std::move(mode);
      }
    }
  } catch (const InferenceError&) {
    return false;
  }
  for (double v : lp)
    if (!std::isfinite(v)) return false;
  comp.laplace = true;
  comp.edge = edge;
  comp.log_density = numerics::CubicSpline(t, lp);
  const auto fine = linspace(-9.0, 9.0, 721);
  std::vector<double> dens(fine.size()), first(fine.size());
  for (std::size_t i = 0; i < fine.size(); ++i) {
    dens[i] = std::exp(comp.log_t(fine[i]));
    first[i] = fine[i] * dens[i];
  }
  const double z = numerics::trapezoid(fine, dens);
  comp.log_norm = std::log(z);
  comp.mean_shift = comp.scale * numerics::trapezoid(fine, first) / z;
  return true;
}

std::string fixed_name(const LatentLayout& l, std::size_t j) {
  if (j == LatentLayout::mu) return "mu";
  if (j == LatentLayout::nu) return "nu";
  if (j < 2 + l.p_se) return "alpha[" + std::to_string(j - 2) + "]";
  return "beta[" + std::to_string(j - 2 - l.p_se) + "]";
}

}  // namespace

Summary summarize(std::span<const double> x, std::span<const double> density) {
  return summarize_transformed(x, density, [](double v) { return v; });
}

bool PosteriorSummary::has(const std::string& name) const {
  return std::any_of(marginals.begin(), marginals.end(), [&](const Marginal& m) { return m.name == name; });
}

const Marginal& PosteriorSummary::at(const std::string& name) const {
  for (const auto& m : marginals)
    if (m.name == name) return m;
  throw std::out_of_range("no marginal named " + name);
}

PosteriorSummary posterior_marginals(const HyperGrid& grid, const LatentModel& model, const PriorBundle& priors,
                                     const InferenceConfig& config) {
  if (grid.points.empty()) throw InferenceError("hyperparameter grid is empty");
  PosteriorSummary out;
  out.grid_points = grid.points.size();
  out.marginal_log_likelihood = grid.log_marginal_likelihood;
  out.warnings = grid.warnings;
  if (grid.space.correlation_fixed()) out.fixed_rho = grid.space.fixed_rho();

  const auto& layout = model.layout();
  const std::size_t n_fixed = layout.n_fixed();
  double w_max = 0.0;
  for (const auto& p : grid.points) w_max = std::max(w_max, p.weight);

  std::vector<std::vector<Component>> comps(n_fixed);
  std::size_t laplace_failures = 0;
  for (std::size_t j = 0; j < n_fixed; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    for (const auto& p : grid.points) {
      Component c;
      c.weight = p.weight;
      c.centre = p.approx.mode(jj);
      c.scale = std::sqrt(p.approx.fixed_covariance(jj, jj));
      if (config.latent == LatentStrategy::full_laplace && p.weight >= config.full_laplace_relative_weight * w_max) {
        if (!build_laplace_component(c, model, p, priors.intercept_prior_variance, j, config.pinned_points)) {
          ++laplace_failures;
          c.laplace = false;
          c.log_norm = 0.5 * kLog2Pi;
          c.mean_shift = 0.0;
        }
      }
      comps[j].push_back(std::move(c));
    }
  }
  if (laplace_failures > 0)
    out.warnings.push_back(std::to_string(laplace_failures) + " pinned Laplace evaluations fell back to Gaussian");

  for (std::size_t j = 0; j < n_fixed; ++j) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& c : comps[j]) {
      if (c.weight < 1e-9 * w_max) continue;
      lo = std::min(lo, c.centre - 7.0 * c.scale);
      hi = std::max(hi, c.centre + 7.0 * c.scale);
    }
    const auto x = linspace(lo, hi, config.density_points);
    std::vector<double> d(x.size(), 0.0);
    for (const auto& c : comps[j])
      for (std::size_t i = 0; i < x.size(); ++i) d[i] += c.weight * c.pdf(x[i]);
    const std::string name = fixed_name(layout, j);
    Marginal m = transformed_marginal(name, x, d, [](double v) { return v; }, [](double) { return 1.0; });
    out.marginals.push_back(std::move(m));
    if (j == LatentLayout::mu || j == LatentLayout::nu) {
      auto dg = [](double v) {
        const double s = numerics::logistic(v);
        return s * (1.0 - s);
      };
      out.marginals.push_back(
          transformed_marginal(j == LatentLayout::mu ? "se" : "sp", x, d, numerics::logistic, dg));
    }
  }
  // Keep a stable order: mu, nu, covariate effects, se, sp.
  std::stable_partition(out.marginals.begin(), out.marginals.end(),
                        [](const Marginal& m) { return m.name != "se" && m.name != "sp"; });

  // Correlation of (mu, nu) under the mixture, with component means shifted
  // by the full-Laplace corrections.
  {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    std::vector<Eigen::Vector2d> means;
    for (std::size_t k = 0; k < grid.points.size(); ++k) {
      const Eigen::Vector2d m(comps[0][k].centre + comps[0][k].mean_shift, comps[1][k].centre + comps[1][k].mean_shift);
      means.push_back(m);
      mean += grid.points[k].weight * m;
    }
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (std::size_t k = 0; k < grid.points.size(); ++k) {
      const Eigen::Vector2d dm = means[k] - mean;
      cov += grid.points[k].weight * (grid.points[k].approx.fixed_covariance.topLeftCorner<2, 2>() + dm * dm.transpose());
    }
    out.mu_nu_correlation = cov(0, 1) / std::sqrt(cov(0, 0) * cov(1, 1));
  }

  // Hyperparameters: Gaussian kernel smoothing per internal coordinate; the
  // kernel variance is that of a uniform cell of the lattice.
  const int dim = grid.space.dim();
  const char* names[] = {"var_phi", "var_psi", "rho"};
  auto cell_scale = [&](const GridPoint& p, int m) {
    const double z = p.z(m);
    return z > 0.0 ? grid.scale_pos(m) : z < 0.0 ? grid.scale_neg(m) : grid.mean_scale()(m);
  };
  for (int k = 0; k < dim; ++k) {
    std::vector<double> bws;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, bw_max = 0.0;
    for (const auto& p : grid.points) {
      double v = 0.0;
      for (int m = 0; m < dim; ++m) v += std::pow(grid.z_to_theta(k, m) * cell_scale(p, m), 2);
      bws.push_back(std::sqrt(grid.step * grid.step / 12.0 * v));
      bw_max = std::max(bw_max, bws.back());
      lo = std::min(lo, p.theta(k));
      hi = std::max(hi, p.theta(k));
    }
    const auto t = linspace(lo - 5.0 * bw_max, hi + 5.0 * bw_max, config.density_points);
    std::vector<double> d(t.size(), 0.0);
    for (std::size_t j = 0; j < grid.points.size(); ++j) {
      const auto& p = grid.points[j];
      for (std::size_t i = 0; i < t.size(); ++i) {
        const double u = (t[i] - p.theta(k)) / bws[j];
        d[i] += p.weight * std::exp(-0.5 * u * u - 0.5 * kLog2Pi) / bws[j];
      }
    }
    if (k < 2) {
      auto e = [](double v) { return std::exp(v); };
      out.marginals.push_back(transformed_marginal(names[k], t, d, e, e));
    } else {
      auto dg = [](double v) {
        const double c = std::cosh(0.5 * v);
        return 0.5 / (c * c);
      };
      out.marginals.push_back(transformed_marginal(names[k], t, d, inverse_fisher_z, dg));
    }
  }
  return out;
}

LaplaceFit fit_laplace(const Dataset& data, const PriorBundle& priors, const InferenceConfig& config) {
  using clock = std::chrono::steady_clock;
  const LatentModel model(data);
  LaplaceFit fit;
  const auto t0 = clock::now();
  fit.grid = explore_hyperposterior(model, priors, config.grid);
  const auto t1 = clock::now();
  fit.summary = posterior_marginals(fit.grid, model, priors, config);
  const auto t2 = clock::now();
  fit.seconds_grid = std::chrono::duration<double>(t1 - t0).count();
  fit.seconds_marginals = std::chrono::duration<double>(t2 - t1).count();
  return fit;
}

}  // namespace metadiag
