#ifndef METADIAG_MCMC_HPP
#define METADIAG_MCMC_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "metadiag/marginals.hpp"

namespace metadiag {

inline constexpr std::uint64_t kDefaultSeed = 20150901;

struct McmcConfig {
  std::size_t iterations = 200000;  // including burn-in
  std::size_t burn_in = 20000;
  std::size_t thin = 10;
  std::uint64_t seed = kDefaultSeed;
};

struct McmcResult {
  /// Column names of `samples`: mu, nu, alpha[j], beta[j], se, sp, var_phi,
  /// var_psi and rho (always present; constant when fixed).
  std::vector<std::string> names;
  Eigen::MatrixXd samples;  // one row per kept draw
  PosteriorSummary summary;
  std::vector<double> ess;  // per column
  std::vector<std::string> block_names;
  std::vector<double> acceptance;  // post-burn-in, per block
  std::vector<std::string> warnings;

  Eigen::Index column(const std::string& name) const;
};

/// Adaptive random-walk Metropolis-within-Gibbs on the internal scale:
/// per-study (phi_i, psi_i) pairs, each fixed effect singly, hyperparameters
/// jointly. Proposal scales adapt during burn-in only. Deterministic in the seed.
McmcResult mcmc_oracle(const LatentModel& model, const PriorBundle& priors, const McmcConfig& config = {});
McmcResult mcmc_oracle(const Dataset& data, const PriorBundle& priors, const McmcConfig& config = {});

/// Initial-positive-sequence effective sample size.
double effective_sample_size(const Eigen::Ref<const Eigen::VectorXd>& chain);

/// Summary from draws: moments, type-7 quantiles and a Gaussian-kernel
/// density on `points` grid points.
Marginal sample_marginal(std::string name, const Eigen::Ref<const Eigen::VectorXd>& draws, int points = 201);

}  // namespace metadiag

#endif  // METADIAG_MCMC_HPP
