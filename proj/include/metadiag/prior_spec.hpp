#ifndef METADIAG_PRIOR_SPEC_HPP
#define METADIAG_PRIOR_SPEC_HPP

#include <stdexcept>
#include <string>
#include <string_view>

#include "metadiag/priors.hpp"

namespace metadiag {

/// Malformed prior specification; token() is the offending fragment.
class PriorSpecError : public std::invalid_argument {
 public:
  PriorSpecError(const std::string& message, std::string token)
      : std::invalid_argument(message + ": '" + token + "'"), token_(std::move(token)) {}
  const std::string& token() const noexcept { return token_; }

 private:
  std::string token_;
};

/// Correlation priors:
///   pc-cor(strategy=1, rho0=-0.2, omega1=0.4, umin=-0.95, alpha1=0.05)
///   pc-cor(strategy=2, rho0=, omega1=, umax=, alpha2=)
///   pc-cor(strategy=3, rho0=, umin=, alpha1=, umax=, alpha2=)
///   normal-z(mean=0, var=5)
///   fixed(rho=-0.2)
/// and the aliases pc0 pc1 pc2 pc3, paul (normal-z(0, 5)), shifted
/// (normal-z centred at fisher_z(-0.2), var 5), zero (fixed(rho=0)).
CorrelationPrior parse_correlation_prior(std::string_view text);

/// Variance priors: pc-var(u=3, a=0.05), invgamma(shape=0.25, rate=0.025);
/// aliases pc (pc-var(3, 0.05)) and ig (invgamma(0.25, 0.025)).
VariancePrior parse_variance_prior(std::string_view text);

}  // namespace metadiag

#endif  // METADIAG_PRIOR_SPEC_HPP
