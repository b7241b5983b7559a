#include "metadiag/laplace.hpp"

#include <cmath>
#include <sstream>

#include "metadiag/numerics.hpp"

namespace metadiag {

namespace {

struct NewtonResult {
  Eigen::VectorXd x;
  ArrowheadMatrix hessian;
  double value;
  double max_gradient;
  int iterations;
};

// Maximise log_conditional with coordinate `pinned` (if any) held fixed.
NewtonResult newton(const LatentModel& model, const Hyperparameters& hyper, double fixed_variance,
                    Eigen::VectorXd x, std::optional<std::size_t> pinned, const NewtonOptions& options) {
  double f = model.log_conditional(x, hyper, fixed_variance);
  if (!std::isfinite(f)) {
    x.setZero();
    if (pinned) x(static_cast<Eigen::Index>(*pinned)) = 0.0;
    f = model.log_conditional(x, hyper, fixed_variance);
  }
  for (int it = 0; it <= options.max_iterations; ++it) {
    Eigen::VectorXd g = model.gradient(x, hyper, fixed_variance);
    ArrowheadMatrix h = model.negative_hessian(x, hyper, fixed_variance);
    if (pinned) {
      g(static_cast<Eigen::Index>(*pinned)) = 0.0;
      h.pin_corner(static_cast<Eigen::Index>(*pinned));
    }
    const double gmax = g.lpNorm<Eigen::Infinity>();
    ArrowheadCholesky chol(h);
    if (!chol.ok()) throw InferenceError("latent Hessian is not positive definite");
    const Eigen::VectorXd step = chol.solve(g);
    const double decrement = g.dot(step);
    if (gmax < options.gradient_tol || decrement < options.decrement_tol)
      return {std::move(x), std::move(h), f, gmax, it};
    if (it == options.max_iterations) break;

    // Near the optimum the full step is safe and function values are within
    // rounding noise, so only guard large steps.
    if (decrement < 1e-6) {
      x += step;
      f = model.log_conditional(x, hyper, fixed_variance);
      continue;
    }
    double t = 1.0;
    bool moved = false;
    for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
      Eigen::VectorXd trial = x + t * step;
      const double ft = model.log_conditional(trial, hyper, fixed_variance);
      if (std::isfinite(ft) && ft >= f - 1e-12 * std::abs(f)) {
        x = std::move(trial);
        f = ft;
        moved = true;
        break;
      }
    }
    if (!moved && decrement < 1e4 * options.decrement_tol) return {std::move(x), std::move(h), f, gmax, it};
    if (!moved) {
      std::ostringstream os;
      os << "Newton line search failed; gradient max-norm " << gmax;
      throw InferenceError(os.str());
    }
  }
  std::ostringstream os;
  os << "Newton did not converge in " << options.max_iterations << " iterations; gradient max-norm "
     << model.gradient(x, hyper, fixed_variance).lpNorm<Eigen::Infinity>();
  throw InferenceError(os.str());
}

}  // namespace

GaussianApprox laplace_fit(const LatentModel& model, const Hyperparameters& hyper, double fixed_variance,
                           const Eigen::VectorXd* start, const NewtonOptions& options) {
  const auto n = static_cast<Eigen::Index>(model.layout().dim());
  Eigen::VectorXd x0 = start && start->size() == n ? *start : Eigen::VectorXd::Zero(n);
  auto r = newton(model, hyper, fixed_variance, std::move(x0), std::nullopt, options);
  ArrowheadCholesky chol(r.hessian);
  if (!chol.ok()) throw InferenceError("precision factorization failed at the mode");
  GaussianApprox out;
  out.log_det_precision = chol.log_det();
  out.log_unnormalized_evidence =
      r.value - 0.5 * out.log_det_precision + 0.5 * static_cast<double>(n) * numerics::kLog2Pi;
  out.fixed_covariance = chol.corner_inverse();
  out.mode = std::move(r.x);
  out.precision = std::move(r.hessian);
  out.max_gradient = r.max_gradient;
  out.iterations = r.iterations;
  return out;
}

GaussianApprox laplace_fit(const Dataset& data, const Hyperparameters& hyper, const PriorBundle& priors) {
  const LatentModel model(data);
  return laplace_fit(model, hyper, priors.intercept_prior_variance);
}

double pinned_log_density(const LatentModel& model, const Hyperparameters& hyper, double fixed_variance,
                          std::size_t j, double value, const Eigen::VectorXd& start, Eigen::VectorXd* mode_out,
                          const NewtonOptions& options) {
  Eigen::VectorXd x0 = start;
  x0(static_cast<Eigen::Index>(j)) = value;
  auto r = newton(model, hyper, fixed_variance, std::move(x0), j, options);
  ArrowheadCholesky chol(r.hessian);
  if (!chol.ok()) throw InferenceError("pinned precision factorization failed");
  const double n_free = static_cast<double>(model.layout().dim() - 1);
  if (mode_out) *mode_out = r.x;
  return r.value - 0.5 * chol.log_det() + 0.5 * n_free * numerics::kLog2Pi;
}

}  // namespace metadiag
