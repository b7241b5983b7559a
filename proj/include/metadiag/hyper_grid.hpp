#ifndef METADIAG_HYPER_GRID_HPP
#define METADIAG_HYPER_GRID_HPP

#include <cmath>
#include <string>
#include <vector>

#include "metadiag/laplace.hpp"

namespace metadiag {

struct GridConfig {
  double step = 0.75;                 // lattice spacing in standardized coordinates
  double log_drop = std::log(1000.0);  // keep points within this of the best log posterior
  double fd_step = 1e-4;              // central-difference step for the mode search gradient
  double fd_hessian_step = 1e-3;
  int max_steps = 12;                 // lattice radius cap per axis
  std::size_t max_points = 20000;
  int max_bfgs_iterations = 200;
};

struct GridPoint {
  Hyperparameters hyper;
  Eigen::VectorXd theta;  // internal scale
  Eigen::VectorXd z;       // standardized lattice coordinates
  double log_posterior = 0.0;  // Laplace evidence + hyperprior, unnormalized
  double log_cell = 0.0;       // log volume of the lattice cell on the internal scale
  double weight = 0.0;         // proportional to exp(log_posterior + log_cell)
  GaussianApprox approx;
};

struct HyperGrid {
  std::vector<GridPoint> points;
  HyperSpace space;
  Hyperparameters mode_hyper;
  Eigen::VectorXd mode_theta;
  /// Negative Hessian of the log hyperposterior at the mode (internal scale).
  Eigen::MatrixXd hessian_hyper;
  /// theta = mode_theta + z_to_theta * diag(scale(z)) * z for standardized z,
  /// where scale picks scale_pos or scale_neg by the sign of each z_k. The
  /// per-side scales make the log posterior drop by 1/2 at |z_k| = 1.
  Eigen::MatrixXd z_to_theta;
  Eigen::VectorXd scale_pos;
  Eigen::VectorXd scale_neg;
  double step = 0.75;
  /// log p(y): lattice sum of exp(log_posterior) times the cell volume.
  double log_marginal_likelihood = 0.0;

  Eigen::VectorXd theta_at(const Eigen::VectorXd& z) const;
  /// Mean absolute scale per standardized direction.
  Eigen::VectorXd mean_scale() const { return 0.5 * (scale_pos + scale_neg); }
  int mode_iterations = 0;
  std::size_t failed_fits = 0;
  std::vector<std::string> warnings;
};

/// Log posterior of the internal hyperparameters up to a constant, via the
/// Laplace evidence. Returns -inf if the inner fit fails.
double log_hyperposterior(const LatentModel& model, const PriorBundle& priors, const Eigen::VectorXd& theta,
                          GaussianApprox* approx = nullptr, const Eigen::VectorXd* start = nullptr);

/// Quasi-Newton mode search followed by a flood-filled lattice in the
/// eigen-standardized coordinates of the hyperposterior Hessian.
/// Throws InferenceError if the mode search fails.
HyperGrid explore_hyperposterior(const LatentModel& model, const PriorBundle& priors, const GridConfig& config = {});
HyperGrid explore_hyperposterior(const Dataset& data, const PriorBundle& priors, const GridConfig& config = {});

}  // namespace metadiag

#endif  // METADIAG_HYPER_GRID_HPP
