#ifndef METADIAG_LATENT_MODEL_HPP
#define METADIAG_LATENT_MODEL_HPP

#include <Eigen/Dense>
#include <vector>

#include "metadiag/arrowhead.hpp"
#include "metadiag/dataset.hpp"
#include "metadiag/priors.hpp"

namespace metadiag {

/// Between-study variances and correlation of the logit-sensitivity and
/// logit-specificity random effects.
struct Hyperparameters {
  double var_phi = 1.0;
  double var_psi = 1.0;
  double rho = 0.0;
};

/// [[var_phi, rho sd_phi sd_psi], [rho sd_phi sd_psi, var_psi]]
Eigen::Matrix2d assemble_covariance(const Hyperparameters& hyper);

/// The unconstrained hyperparameter scale: (log var_phi, log var_psi,
/// fisher_z(rho)). With a pinned correlation the third coordinate is absent.
class HyperSpace {
 public:
  HyperSpace() = default;
  explicit HyperSpace(const CorrelationPrior& cor_prior);

  int dim() const noexcept { return fixed_rho_ ? 2 : 3; }
  bool correlation_fixed() const noexcept { return fixed_rho_; }
  double fixed_rho() const noexcept { return rho_; }

  Eigen::VectorXd to_internal(const Hyperparameters& h) const;
  Hyperparameters from_internal(const Eigen::VectorXd& theta) const;

 private:
  bool fixed_rho_ = false;
  double rho_ = 0.0;
};

struct PriorBundle {
  VariancePrior var_phi_prior = VariancePCPrior(3.0, 0.05);
  VariancePrior var_psi_prior = VariancePCPrior(3.0, 0.05);
  CorrelationPrior cor_prior = pc1_prior();
  /// Variance of the zero-mean normal prior on mu, nu and covariate effects.
  double intercept_prior_variance = 1000.0;

  HyperSpace space() const { return HyperSpace(cor_prior); }
  /// Hyperprior log density of the internal coordinates (Jacobians included).
  double log_hyperprior(const Eigen::VectorXd& theta) const;
};

/// Index map of the latent vector (mu, nu, alpha, beta, phi_1, psi_1, ...).
struct LatentLayout {
  std::size_t p_se = 0;
  std::size_t p_sp = 0;
  std::size_t n_studies = 0;

  std::size_t n_fixed() const noexcept { return 2 + p_se + p_sp; }
  std::size_t dim() const noexcept { return n_fixed() + 2 * n_studies; }
  static constexpr std::size_t mu = 0;
  static constexpr std::size_t nu = 1;
  std::size_t alpha(std::size_t j) const noexcept { return 2 + j; }
  std::size_t beta(std::size_t j) const noexcept { return 2 + p_se + j; }
  std::size_t phi(std::size_t i) const noexcept { return n_fixed() + 2 * i; }
  std::size_t psi(std::size_t i) const noexcept { return n_fixed() + 2 * i + 1; }
};

struct LatentField {
  double mu = 0.0;
  double nu = 0.0;
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
  Eigen::VectorXd phi;
  Eigen::VectorXd psi;

  static LatentField zeros(const LatentLayout& layout);
  static LatentField from_vector(const LatentLayout& layout, const Eigen::VectorXd& x);
  Eigen::VectorXd to_vector() const;
};

/// The likelihood and latent Gaussian prior of the bivariate model, with
/// derivatives in the latent vector. Each study contributes one observation
/// per arm on the linear predictors
///   eta_se,i = mu + U_i alpha + phi_i,   eta_sp,i = nu + V_i beta + psi_i.
class LatentModel {
 public:
  enum class Observation { binomial_logit, gaussian_identity };

  explicit LatentModel(const Dataset& data);

  /// Gaussian pseudo-observations y ~ N(eta, variance) per arm; used to check
  /// the Laplace evidence against closed form.
  static LatentModel gaussian(std::vector<double> y_se, std::vector<double> var_se, std::vector<double> y_sp,
                              std::vector<double> var_sp);

  const LatentLayout& layout() const noexcept { return layout_; }
  std::size_t n_studies() const noexcept { return layout_.n_studies; }
  Observation observation() const noexcept { return obs_; }

  /// Drop the likelihood (prior-only runs).
  void set_likelihood_enabled(bool enabled) noexcept { likelihood_enabled_ = enabled; }
  bool likelihood_enabled() const noexcept { return likelihood_enabled_; }

  double eta_se(const Eigen::VectorXd& x, std::size_t i) const;
  double eta_sp(const Eigen::VectorXd& x, std::size_t i) const;

  /// Log-likelihood of one arm of study i at linear predictor eta
  /// (arm 0 = diseased / sensitivity, arm 1 = non-diseased / specificity).
  double arm_log_likelihood(std::size_t i, int arm, double eta) const;

  double log_likelihood(const Eigen::VectorXd& x) const;

  /// Log density of the latent vector given hyperparameters, plus the
  /// log-likelihood: the latent-conditional log joint.
  double log_conditional(const Eigen::VectorXd& x, const Hyperparameters& hyper, double fixed_variance) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x, const Hyperparameters& hyper, double fixed_variance) const;
  /// Negative Hessian of log_conditional.
  ArrowheadMatrix negative_hessian(const Eigen::VectorXd& x, const Hyperparameters& hyper,
                                   double fixed_variance) const;

 private:
  LatentModel() = default;

  LatentLayout layout_;
  Observation obs_ = Observation::binomial_logit;
  bool likelihood_enabled_ = true;
  // Per study and arm: successes/trials for binomial, value/variance for Gaussian.
  std::vector<double> y_se_, n_se_, y_sp_, n_sp_;
  std::vector<double> log_choose_;
  std::vector<Eigen::VectorXd> u_, v_;  // covariate rows
};

double log_likelihood(const Dataset& data, const LatentField& latent);
/// log_likelihood + random-effect and fixed-effect priors + hyperprior on the
/// internal scale.
double log_joint(const Dataset& data, const LatentField& latent, const Hyperparameters& hyper,
                 const PriorBundle& priors);

}  // namespace metadiag

#endif  // METADIAG_LATENT_MODEL_HPP
