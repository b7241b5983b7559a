#ifndef METADIAG_MARGINALS_HPP
#define METADIAG_MARGINALS_HPP

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "metadiag/hyper_grid.hpp"

namespace metadiag {

enum class LatentStrategy {
  gaussian,      // mixture of the Gaussian approximations over the grid
  full_laplace,  // fixed effects re-integrated per grid point with the coordinate pinned
};

struct InferenceConfig {
  GridConfig grid;
  LatentStrategy latent = LatentStrategy::full_laplace;
  /// Grid points with weight below this fraction of the largest use the
  /// Gaussian marginal even under full_laplace.
  double full_laplace_relative_weight = 1e-3;
  int pinned_points = 21;  // evaluations per fixed effect per grid point, over +-5 sd
  int density_points = 401;
};

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q50 = 0.0;
  double q975 = 0.0;
};

/// Moments and quantiles of a density tabulated on an increasing grid
/// (at least 30 points); the density is renormalized by the trapezoid rule
/// and treated as piecewise linear for the quantiles.
Summary summarize(std::span<const double> x, std::span<const double> density);

struct Marginal {
  std::string name;
  std::vector<double> x;
  std::vector<double> density;
  Summary summary;
};

struct PosteriorSummary {
  /// Named marginals: mu, nu, alpha[j], beta[j], se, sp, var_phi, var_psi and
  /// rho (absent when the correlation is fixed).
  std::vector<Marginal> marginals;
  std::optional<double> fixed_rho;
  double marginal_log_likelihood = 0.0;
  /// Posterior correlation of (mu, nu) under the grid mixture.
  double mu_nu_correlation = 0.0;
  std::size_t grid_points = 0;
  std::vector<std::string> warnings;

  bool has(const std::string& name) const;
  /// Throws std::out_of_range for an unknown name.
  const Marginal& at(const std::string& name) const;
  const Summary& operator[](const std::string& name) const { return at(name).summary; }
};

PosteriorSummary posterior_marginals(const HyperGrid& grid, const LatentModel& model, const PriorBundle& priors,
                                     const InferenceConfig& config = {});

struct LaplaceFit {
  HyperGrid grid;
  PosteriorSummary summary;
  double seconds_grid = 0.0;
  double seconds_marginals = 0.0;
};

LaplaceFit fit_laplace(const Dataset& data, const PriorBundle& priors, const InferenceConfig& config = {});

inline PosteriorSummary posterior_marginals(const Dataset& data, const PriorBundle& priors,
                                            const InferenceConfig& config = {}) {
  return fit_laplace(data, priors, config).summary;
}

}  // namespace metadiag

#endif  // METADIAG_MARGINALS_HPP
