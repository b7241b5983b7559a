#include "metadiag/hyper_grid.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <map>
#include <sstream>

namespace metadiag {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Log posterior with a warm-started inner fit; remembers the last mode.
class Objective {
 public:
  Objective(const LatentModel& model, const PriorBundle& priors) : model_(model), priors_(priors) {}

  double operator()(const Eigen::VectorXd& theta) {
    GaussianApprox a;
    const double v = log_hyperposterior(model_, priors_, theta, &a, last_.size() ? &last_ : nullptr);
    if (std::isfinite(v)) last_ = a.mode;
    return v;
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& theta, double h) {
    Eigen::VectorXd g(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      Eigen::VectorXd tp = theta, tm = theta;
      tp(i) += h;
      tm(i) -= h;
      g(i) = ((*this)(tp) - (*this)(tm)) / (2.0 * h);
    }
    return g;
  }

  Eigen::MatrixXd negative_hessian(const Eigen::VectorXd& theta, double f0, double h) {
    const Eigen::Index n = theta.size();
    Eigen::MatrixXd hess(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd tp = theta, tm = theta;
      tp(i) += h;
      tm(i) -= h;
      hess(i, i) = -((*this)(tp) - 2.0 * f0 + (*this)(tm)) / (h * h);
      for (Eigen::Index j = 0; j < i; ++j) {
        Eigen::VectorXd pp = theta, pm = theta, mp = theta, mm = theta;
        pp(i) += h, pp(j) += h;
        pm(i) += h, pm(j) -= h;
        mp(i) -= h, mp(j) += h;
        mm(i) -= h, mm(j) -= h;
        hess(i, j) = hess(j, i) = -((*this)(pp) - (*this)(pm) - (*this)(mp) + (*this)(mm)) / (4.0 * h * h);
      }
    }
    return hess;
  }

 private:
  const LatentModel& model_;
  const PriorBundle& priors_;
  Eigen::VectorXd last_;
};

struct ModeResult {
  Eigen::VectorXd theta;
  double value;
  int iterations;
};

// Derivative-free ascent along the coordinate axes; the step halves whenever
// no axis move improves f. x and fx are updated in place.
void compass_search(Objective& f, Eigen::VectorXd& x, double& fx) {
  for (double h = 0.1; h > 1e-6;) {
    bool moved = false;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      for (double sgn : {1.0, -1.0}) {
        Eigen::VectorXd xt = x;
        xt(i) += sgn * h;
        const double ft = f(xt);
        if (std::isfinite(ft) && ft > fx) {
          x = xt;
          fx = ft;
          moved = true;
          break;
        }
      }
    }
    if (!moved) h *= 0.5;
  }
}

// BFGS on -f with backtracking (Armijo) line search.
ModeResult find_mode(Objective& f, Eigen::VectorXd x, const GridConfig& cfg) {
  const Eigen::Index n = x.size();
  double fx = f(x);
  if (!std::isfinite(fx)) throw InferenceError("hyperposterior is not finite at the starting point");
  Eigen::VectorXd g = f.gradient(x, cfg.fd_step);
  Eigen::MatrixXd inv_h = Eigen::MatrixXd::Identity(n, n);
  for (int it = 0; it < cfg.max_bfgs_iterations; ++it) {
    if (g.lpNorm<Eigen::Infinity>() < 1e-4) return {x, fx, it};
    Eigen::VectorXd dir = inv_h * g;  // ascent direction
    if (dir.dot(g) <= 0.0) {
      inv_h.setIdentity();
      dir = g;
    }
    const double max_move = dir.lpNorm<Eigen::Infinity>();
    if (max_move > 2.0) dir *= 2.0 / max_move;
    double t = 1.0, ft = kNegInf;
    Eigen::VectorXd xt;
    for (int k = 0; k < 40; ++k, t *= 0.5) {
      xt = x + t * dir;
      ft = f(xt);
      if (std::isfinite(ft) && ft >= fx + 1e-4 * t * dir.dot(g)) break;
    }
    if (!(std::isfinite(ft) && ft >= fx)) {
      // Gradient noise floor: no further ascent possible.
      if (g.lpNorm<Eigen::Infinity>() < 1e-2) return {x, fx, it};
      // A kink in the hyperprior (e.g. at the base correlation) defeats the
      // difference gradient; fall back to a compass search.
      const double before = fx;
      compass_search(f, x, fx);
      if (!(fx > before + 1e-9)) return {x, fx, it};
      g = f.gradient(x, cfg.fd_step);
      inv_h.setIdentity();
      continue;
    }
    const Eigen::VectorXd gt = f.gradient(xt, cfg.fd_step);
    const Eigen::VectorXd s = xt - x;
    const Eigen::VectorXd y = g - gt;  // gradient of the minimized -f
    const double sy = s.dot(y);
    if (sy > 1e-12) {
      const double r = 1.0 / sy;
      const Eigen::MatrixXd i_n = Eigen::MatrixXd::Identity(n, n);
      inv_h = (i_n - r * s * y.transpose()) * inv_h * (i_n - r * y * s.transpose()) + r * s * s.transpose();
    }
    const double change = std::abs(ft - fx);
    x = xt;
    fx = ft;
    g = gt;
    if (change < 1e-10 * std::max(1.0, std::abs(fx)) && g.lpNorm<Eigen::Infinity>() < 1e-2) return {x, fx, it + 1};
  }
  std::ostringstream os;
  os << "hyper-mode search did not converge in " << cfg.max_bfgs_iterations << " iterations; gradient max-norm "
     << g.lpNorm<Eigen::Infinity>();
  throw InferenceError(os.str());
}

}  // namespace

double log_hyperposterior(const LatentModel& model, const PriorBundle& priors, const Eigen::VectorXd& theta,
                          GaussianApprox* approx, const Eigen::VectorXd* start) {
  if (!theta.allFinite()) return kNegInf;
  const Hyperparameters h = priors.space().from_internal(theta);
  if (!(h.var_phi > 0.0 && h.var_psi > 0.0 && std::isfinite(h.var_phi) && std::isfinite(h.var_psi)) ||
      !(std::abs(h.rho) < 1.0))
    return kNegInf;
  try {
    GaussianApprox a = laplace_fit(model, h, priors.intercept_prior_variance, start);
    const double v = a.log_unnormalized_evidence + priors.log_hyperprior(theta);
    if (approx) *approx = std::move(a);
    return std::isfinite(v) ? v : kNegInf;
  } catch (const InferenceError&) {
    return kNegInf;
  }
}

Eigen::VectorXd HyperGrid::theta_at(const Eigen::VectorXd& z) const {
  Eigen::VectorXd scaled(z.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) scaled(k) = z(k) * (z(k) >= 0.0 ? scale_pos(k) : scale_neg(k));
  return mode_theta + z_to_theta * scaled;
}

HyperGrid explore_hyperposterior(const Dataset& data, const PriorBundle& priors, const GridConfig& config) {
  return explore_hyperposterior(LatentModel(data), priors, config);
}

HyperGrid explore_hyperposterior(const LatentModel& model, const PriorBundle& priors, const GridConfig& config) {
  HyperGrid grid;
  grid.space = priors.space();
  grid.step = config.step;
  const int dim = grid.space.dim();
  Objective f(model, priors);

  const auto mode = find_mode(f, Eigen::VectorXd::Zero(dim), config);
  grid.mode_theta = mode.theta;
  grid.mode_hyper = grid.space.from_internal(mode.theta);
  grid.mode_iterations = mode.iterations;
  grid.hessian_hyper = f.negative_hessian(mode.theta, mode.value, config.fd_hessian_step);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(grid.hessian_hyper);
  Eigen::VectorXd lambda = eig.eigenvalues();
  const double floor = 1e-3 * std::max(1.0, lambda.maxCoeff());
  if (lambda.minCoeff() <= floor) {
    grid.warnings.push_back("hyperposterior Hessian not positive definite at the mode; eigenvalues floored");
    lambda = lambda.cwiseMax(floor);
  }
  grid.z_to_theta = eig.eigenvectors() * lambda.cwiseInverse().cwiseSqrt().asDiagonal();

  // Per-side scale corrections: along each direction the Gaussian predicts a
  // drop of 1/2 at one standard unit. A cusp or skewness breaks that, so the
  // unit is rescaled until the observed drop matches.
  grid.scale_pos = Eigen::VectorXd::Ones(dim);
  grid.scale_neg = Eigen::VectorXd::Ones(dim);
  for (int k = 0; k < dim; ++k) {
    for (int sgn : {1, -1}) {
      double c = 1.0;
      for (int iter = 0; iter < 6; ++iter) {
        const Eigen::VectorXd theta = grid.mode_theta + sgn * c * grid.z_to_theta.col(k);
        const double drop = mode.value - f(theta);
        if (!std::isfinite(drop)) {
          c *= 0.5;
          continue;
        }
        if (drop <= 0.0) break;  // mode search noise; keep the Gaussian unit
        const double factor = std::sqrt(0.5 / drop);
        c = std::clamp(c * factor, 1e-3, 1e3);
        if (std::abs(factor - 1.0) < 0.1) break;
      }
      (sgn > 0 ? grid.scale_pos : grid.scale_neg)(k) = c;
    }
  }
  const double log_det = std::log(std::abs(grid.z_to_theta.determinant()));

  // Flood fill over the integer lattice, keeping points above the running cutoff.
  using Key = std::vector<int>;
  std::map<Key, bool> visited;
  struct Pending {
    Key key;
    Eigen::VectorXd start;
  };
  std::deque<Pending> queue;
  const Key origin(static_cast<std::size_t>(dim), 0);
  queue.push_back({origin, Eigen::VectorXd()});
  visited[origin] = true;
  double best = mode.value;
  std::size_t evaluated = 0;
  while (!queue.empty()) {
    Pending cur = std::move(queue.front());
    queue.pop_front();
    Eigen::VectorXd z(dim);
    for (int i = 0; i < dim; ++i) z(i) = config.step * cur.key[static_cast<std::size_t>(i)];
    const Eigen::VectorXd theta = grid.theta_at(z);
    GaussianApprox approx;
    const double lp = log_hyperposterior(model, priors, theta, &approx, cur.start.size() ? &cur.start : nullptr);
    ++evaluated;
    if (!std::isfinite(lp)) {
      ++grid.failed_fits;
      continue;
    }
    if (lp < best - config.log_drop) continue;
    best = std::max(best, lp);
    GridPoint p;
    p.hyper = grid.space.from_internal(theta);
    p.theta = theta;
    p.z = z;
    p.log_posterior = lp;
    p.log_cell = dim * std::log(config.step) + log_det;
    for (int k = 0; k < dim; ++k) {
      const double c = z(k) > 0.0 ? grid.scale_pos(k) : z(k) < 0.0 ? grid.scale_neg(k) : grid.mean_scale()(k);
      p.log_cell += std::log(c);
    }
    p.approx = std::move(approx);
    const Eigen::VectorXd start = p.approx.mode;
    grid.points.push_back(std::move(p));
    if (grid.points.size() >= config.max_points) {
      grid.warnings.push_back("grid point cap reached");
      break;
    }
    for (int i = 0; i < dim; ++i) {
      for (int sgn : {-1, 1}) {
        Key next = cur.key;
        next[static_cast<std::size_t>(i)] += sgn;
        if (std::abs(next[static_cast<std::size_t>(i)]) > config.max_steps) continue;
        if (visited.emplace(next, true).second) queue.push_back({std::move(next), start});
      }
    }
  }

  // Final cutoff against the overall best, then normalize.
  std::erase_if(grid.points, [&](const GridPoint& p) { return p.log_posterior < best - config.log_drop; });
  double top = kNegInf;
  for (const auto& p : grid.points) top = std::max(top, p.log_posterior + p.log_cell);
  double total = 0.0;
  for (const auto& p : grid.points) total += std::exp(p.log_posterior + p.log_cell - top);
  for (auto& p : grid.points) p.weight = std::exp(p.log_posterior + p.log_cell - top) / total;
  grid.log_marginal_likelihood = top + std::log(total);

  if (grid.failed_fits > 0) {
    std::ostringstream os;
    os << grid.failed_fits << " of " << evaluated << " grid fits failed and were skipped";
    grid.warnings.push_back(os.str());
  }
  if (grid.points.size() < 7) grid.warnings.push_back("fewer than 7 grid points retained; posterior may be degenerate");
  return grid;
}

}  // namespace metadiag
