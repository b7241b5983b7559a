#ifndef METADIAG_SIMULATION_HPP
#define METADIAG_SIMULATION_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "metadiag/mcmc.hpp"

namespace metadiag {

/// Study size n = round(shift + Gamma(shape, rate)), floored at shift; the
/// diseased arm gets round(n * diseased_fraction) subjects.
struct SizeDistribution {
  double shape = 1.2;
  double rate = 0.03;
  double shift = 30.0;
  double diseased_fraction = 0.5;
};

struct Scenario {
  int id = 0;
  std::size_t n_studies = 10;
  double true_se = 0.8;
  double true_sp = 0.7;
  double var_phi = 1.0;
  double var_psi = 1.0;
  double rho = 0.0;
  SizeDistribution size;

  double mu() const;
  double nu() const;
  Hyperparameters hyper() const { return {var_phi, var_psi, rho}; }
};

/// The 81 scenarios: Se/Sp pairs (0.8, 0.7), (0.9, 0.9), (0.95, 0.3) by
/// I = 10, 25, 50 by rho = -0.95, -0.8, -0.6, -0.4, -0.2, 0, 0.2, 0.4, 0.6,
/// numbered 1..81 in that nesting order.
std::vector<Scenario> builtin_scenarios();

/// "1-9,12,20-22" -> sorted unique ids; throws std::invalid_argument naming
/// the bad token for malformed or out-of-range selectors.
std::vector<int> parse_scenario_selection(const std::string& text, int max_id = 81);

struct SimulatedData {
  Dataset data;
  std::vector<double> logit_se;  // mu + phi_i
  std::vector<double> logit_sp;  // nu + psi_i
};

SimulatedData simulate(const Scenario& scenario, std::uint64_t seed);
inline Dataset generate_dataset(const Scenario& scenario, std::uint64_t seed) { return simulate(scenario, seed).data; }

struct PriorConfig {
  std::string label;
  PriorBundle priors;
};

enum class Engine {
  laplace,
  mcmc,
  truth,  // degenerate posterior at the generating values (harness self-test)
};

struct ReplicateRecord {
  std::size_t replicate = 0;
  std::string parameter;
  double truth = 0.0;
  double median = 0.0;
  double lower95 = 0.0;
  double upper95 = 0.0;
  double error = 0.0;
  bool covered = false;
};

struct ParameterMetrics {
  std::string parameter;
  double truth = 0.0;
  std::vector<double> medians;
  std::vector<double> errors;  // median - truth
  double bias = 0.0;
  double mse = 0.0;  // bias^2 + population variance of the medians
  double coverage95 = 0.0;
};

/// Metrics from per-replicate medians and 95% intervals.
ParameterMetrics compute_metrics(std::string parameter, double truth, const std::vector<double>& medians,
                                 const std::vector<double>& lower, const std::vector<double>& upper);

struct ScenarioMetrics {
  int scenario_id = 0;
  std::string prior_label;
  std::size_t n_replicates = 0;
  std::size_t n_failures = 0;
  std::vector<ParameterMetrics> parameters;
  std::vector<ReplicateRecord> records;
  std::vector<std::string> failure_messages;

  const ParameterMetrics& at(const std::string& parameter) const;
};

struct SimulationConfig {
  Engine engine = Engine::laplace;
  InferenceConfig inference = gaussian_latent();
  McmcConfig mcmc = {20000, 5000, 5, kDefaultSeed};
  unsigned threads = 0;  // 0: hardware concurrency

  static InferenceConfig gaussian_latent() {
    InferenceConfig c;
    c.latent = LatentStrategy::gaussian;
    return c;
  }
};

/// Fits every prior configuration to each replicate dataset (replicate r uses
/// seed ^ r; all priors see the same data) and accumulates metrics for mu,
/// nu, se, sp, var_phi, var_psi and rho (rho omitted for fixed-correlation
/// priors). Replicate failures are counted and excluded.
std::vector<ScenarioMetrics> run_scenario(const Scenario& scenario, const std::vector<PriorConfig>& priors,
                                          std::size_t n_replicates, std::uint64_t seed,
                                          const SimulationConfig& config = {});

/// Columns: replicate, parameter, truth, median, lower95, upper95, error, covered.
void write_replicates_csv(std::ostream& out, const ScenarioMetrics& metrics);
/// Columns: scenario, prior, parameter, truth, n_replicates, n_failures, bias, mse, coverage95.
void write_metrics_csv(std::ostream& out, const std::vector<ScenarioMetrics>& metrics);

}  // namespace metadiag

#endif  // METADIAG_SIMULATION_HPP
