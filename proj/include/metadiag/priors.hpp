#ifndef METADIAG_PRIORS_HPP
#define METADIAG_PRIORS_HPP

#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>

namespace metadiag {

/// Argument outside the support of a prior or divergence.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A correlation together with log(1 - rho^2). Points produced from the
/// Fisher-z scale keep the log term exact even when rho rounds to +-1.
struct CorrelationPoint {
  double rho;
  double log_one_minus_rho2;

  static CorrelationPoint from_rho(double rho);
  /// theta = logit((rho + 1) / 2), the unconstrained correlation scale.
  static CorrelationPoint from_z(double theta);
};

double fisher_z(double rho);
double inverse_fisher_z(double theta);

/// Kullback-Leibler divergence of N(0, R(rho)) from the base model N(0, R(rho0)),
/// both unit-variance bivariate normals.
double kld_correlation(double rho, double rho0);
double kld_correlation(const CorrelationPoint& p, double rho0);

/// Distance sqrt(2 KLD) from the base model.
double distance_correlation(double rho, double rho0);
double distance_correlation(const CorrelationPoint& p, double rho0);

/// |d d(rho) / d rho|. At rho = rho0 returns the one-sided limit
/// sqrt(1 + rho0^2) / (1 - rho0^2).
double distance_jacobian(const CorrelationPoint& p, double rho0);

// ---------------------------------------------------------------------------
// Two-rate PC prior for the correlation.

enum class PcStrategy {
  left_tail = 1,   // P(rho <= u_min) = alpha1 and P(rho <= rho0) = omega1
  right_tail = 2,  // P(rho > u_max) = alpha2 and P(rho <= rho0) = omega1
  both_tails = 3,  // P(rho <= u_min) = alpha1 and P(rho > u_max) = alpha2
};

struct PcContrasts {
  std::optional<double> omega1;
  std::optional<double> u_min;
  std::optional<double> alpha1;
  std::optional<double> u_max;
  std::optional<double> alpha2;
};

struct PcRates {
  double lambda1;  // decay rate left of rho0
  double lambda2;  // decay rate right of rho0
  double omega1;   // P(rho <= rho0)
};

/// Solve for (lambda1, lambda2, omega1) from the user contrasts; enforces
/// omega1 * lambda1 = (1 - omega1) * lambda2. Throws std::invalid_argument
/// on ordering violations and std::runtime_error if the strategy-3 root is
/// not bracketed.
PcRates solve_rates(PcStrategy strategy, double rho0, const PcContrasts& contrasts);

class CorrelationPCPrior {
 public:
  CorrelationPCPrior(PcStrategy strategy, double rho0, PcContrasts contrasts);

  static CorrelationPCPrior left_tail(double rho0, double omega1, double u_min, double alpha1);
  static CorrelationPCPrior right_tail(double rho0, double omega1, double u_max, double alpha2);
  static CorrelationPCPrior both_tails(double rho0, double u_min, double alpha1, double u_max, double alpha2);

  double rho0() const noexcept { return rho0_; }
  double lambda1() const noexcept { return rates_.lambda1; }
  double lambda2() const noexcept { return rates_.lambda2; }
  double omega1() const noexcept { return rates_.omega1; }
  double omega2() const noexcept { return 1.0 - rates_.omega1; }
  PcStrategy strategy() const noexcept { return strategy_; }
  const PcContrasts& inputs() const noexcept { return inputs_; }

  double density(double rho) const;
  double log_density(const CorrelationPoint& p) const;
  /// Log density of theta = fisher_z(rho).
  double log_density_z(double theta) const;
  /// Closed-form CDF: omega1 exp(-lambda1 d) on the left, 1 - omega2 exp(-lambda2 d) on the right.
  double cdf(double rho) const;

  /// Inverse-CDF draw on the Fisher-z scale (never saturates).
  double sample_z(std::mt19937_64& rng) const;
  /// Inverse-CDF draw; always strictly inside (-1, 1).
  double sample(std::mt19937_64& rng) const;
  /// Quantile on the Fisher-z scale.
  double quantile_z(double p) const;

 private:
  double invert_distance_z(double distance, bool left) const;

  PcStrategy strategy_;
  double rho0_;
  PcContrasts inputs_;
  PcRates rates_;
};

/// The four correlation PC priors used throughout the simulation study.
CorrelationPCPrior pc0_prior();  // rho0 = 0,    omega1 = 0.5, u_min = -0.9,  alpha1 = 0.1
CorrelationPCPrior pc1_prior();  // rho0 = -0.2, omega1 = 0.4, u_min = -0.95, alpha1 = 0.05
CorrelationPCPrior pc2_prior();  // rho0 = -0.2, u_min = -0.9, alpha1 = 0.05, u_max = 0.8, alpha2 = 0.05
CorrelationPCPrior pc3_prior();  // rho0 = -0.2, omega1 = 0.6, u_max = 0.4,  alpha2 = 0.05

// ---------------------------------------------------------------------------
// PC prior for a variance: exponential with rate lambda on the standard deviation.

double variance_pc_rate(double u, double a);
double variance_pc_density(double v, double lambda);

struct VariancePCPrior {
  double u;
  double a;
  double lambda;

  VariancePCPrior(double u, double a);
  double density(double v) const { return variance_pc_density(v, lambda); }
  double log_density(double v) const;
  /// P(sigma > s).
  double sd_survival(double s) const;
};

// ---------------------------------------------------------------------------
// Comparison priors: normal on the Fisher-z correlation, inverse gamma on a variance.

struct ComparisonPrior {
  enum class Kind { normal_on_z, inverse_gamma };
  Kind kind;
  double first;   // mean of theta, or shape
  double second;  // variance of theta, or rate

  static ComparisonPrior normal_on_z(double mean, double variance);
  static ComparisonPrior inverse_gamma(double shape, double rate);
  /// Normal on theta centred at fisher_z(rho0).
  static ComparisonPrior shifted_normal_on_z(double rho0, double variance);

  double density(double x) const;
  double log_density(double x) const;
};

double comparison_prior_density(double x, const ComparisonPrior& prior);

/// Correlation held at a known value (2-D hyperparameter space).
struct FixedCorrelation {
  double rho;
};

using VariancePrior = std::variant<VariancePCPrior, ComparisonPrior>;
using CorrelationPrior = std::variant<CorrelationPCPrior, ComparisonPrior, FixedCorrelation>;

/// Log density of log(v) when v follows the given variance prior.
double log_density_log_variance(const VariancePrior& prior, double log_v);
/// Log density of theta = fisher_z(rho). Throws for a fixed correlation.
double log_density_fisher_z(const CorrelationPrior& prior, double theta);
/// Density on the correlation scale.
double correlation_prior_density(const CorrelationPrior& prior, double rho);
double variance_prior_density(const VariancePrior& prior, double v);

bool is_fixed(const CorrelationPrior& prior);
std::string describe(const VariancePrior& prior);
std::string describe(const CorrelationPrior& prior);

}  // namespace metadiag

#endif  // METADIAG_PRIORS_HPP
