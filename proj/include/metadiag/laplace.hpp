#ifndef METADIAG_LAPLACE_HPP
#define METADIAG_LAPLACE_HPP

#include <optional>
#include <stdexcept>

#include "metadiag/latent_model.hpp"

namespace metadiag {

class InferenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NewtonOptions {
  double gradient_tol = 1e-8;
  /// Also converged when g' H^-1 g falls below this: with near-singular
  /// correlation the gradient's rounding floor exceeds gradient_tol.
  double decrement_tol = 1e-12;
  int max_iterations = 100;
};

/// Gaussian approximation of the latent field given hyperparameters.
struct GaussianApprox {
  Eigen::VectorXd mode;
  ArrowheadMatrix precision;  // negative Hessian at the mode
  double log_det_precision = 0.0;
  /// Laplace estimate of log p(y | hyper): log_conditional(mode) - 0.5 log det(precision / 2 pi).
  double log_unnormalized_evidence = 0.0;
  double max_gradient = 0.0;
  int iterations = 0;
  /// Covariance of the fixed effects (mu, nu, alpha, beta).
  Eigen::MatrixXd fixed_covariance;

  LatentField mode_field(const LatentLayout& layout) const { return LatentField::from_vector(layout, mode); }
};

/// Newton maximisation of the latent-conditional log joint with step halving.
/// Throws InferenceError on non-convergence or a failed factorization.
GaussianApprox laplace_fit(const LatentModel& model, const Hyperparameters& hyper, double fixed_variance,
                           const Eigen::VectorXd* start = nullptr, const NewtonOptions& options = {});

GaussianApprox laplace_fit(const Dataset& data, const Hyperparameters& hyper, const PriorBundle& priors);

/// Laplace approximation of log p(x_j = value, y | hyper) for fixed-effect
/// coordinate j: the remaining latent coordinates are maximised and
/// integrated out with a Gaussian. Up to a constant in `value` this is the
/// log marginal density of x_j given hyper.
double pinned_log_density(const LatentModel& model, const Hyperparameters& hyper, double fixed_variance,
                          std::size_t j, double value, const Eigen::VectorXd& start,
                          Eigen::VectorXd* mode_out = nullptr, const NewtonOptions& options = {});

}  // namespace metadiag

#endif  // METADIAG_LAPLACE_HPP
