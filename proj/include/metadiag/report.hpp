#ifndef METADIAG_REPORT_HPP
#define METADIAG_REPORT_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "metadiag/marginals.hpp"

namespace metadiag {

struct Timings {
  double grid = 0.0;
  double marginals = 0.0;
  double mcmc = 0.0;
  double total = 0.0;
};

nlohmann::json summary_json(const Summary& s);

/// Top-level keys: fixed_effects, hyperparameters, accuracy, mlik, timings,
/// config_echo, plus mu_nu_correlation and warnings. A fixed correlation is
/// reported as {"fixed": value} instead of a summary.
nlohmann::json posterior_json(const PosteriorSummary& summary, const Timings& timings,
                              const nlohmann::json& config_echo);

/// Columns: engine, parameter, x, density. Rows follow the marginal order.
void write_marginals_csv(std::ostream& out, const PosteriorSummary& summary, const std::string& engine);

struct ComparisonRow {
  std::string parameter;
  Summary laplace;
  Summary mcmc;
  /// (mean_laplace - mean_mcmc) / sd_mcmc
  double mean_delta_sd = 0.0;
  /// sd_laplace / sd_mcmc - 1
  double sd_ratio_delta = 0.0;
};

/// Rows for the parameters both summaries share, in the order of `laplace`.
std::vector<ComparisonRow> compare_engines(const PosteriorSummary& laplace, const PosteriorSummary& mcmc);

/// Columns: parameter, laplace_mean, mcmc_mean, laplace_sd, mcmc_sd,
/// mean_delta_sd, sd_ratio_delta.
void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows);

/// Quadrature checks of a correlation PC prior: probabilities integrated on
/// the Fisher-z scale, split at the base model.
struct PcPriorCheck {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double omega1 = 0.0;
  double total_mass = 0.0;
  double mass_below_rho0 = 0.0;
  std::optional<double> mass_below_umin;  // P(rho <= u_min), when u_min is a contrast
  std::optional<double> mass_above_umax;  // P(rho > u_max), when u_max is a contrast
  double continuity_gap = 0.0;            // omega1 lambda1 - omega2 lambda2
};
PcPriorCheck check_pc_prior(const CorrelationPCPrior& prior);

/// Fixed-width table resembling a printed model summary.
std::string format_summary_table(const PosteriorSummary& summary);

}  // namespace metadiag

#endif  // METADIAG_REPORT_HPP
