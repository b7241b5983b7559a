#include "metadiag/priors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "metadiag/numerics.hpp"

namespace metadiag {

namespace {

using numerics::kLog2Pi;

// Below this |rho - rho0| the distance and its Jacobian use the second/third
// order Taylor expansion of KLD about rho0.
constexpr double kSeriesRadius = 1e-6;

void check_open_unit(double r, const char* what) {
  if (!(r > -1.0 && r < 1.0))
    throw DomainError(std::string(what) + " must lie strictly inside (-1, 1), got " + std::to_string(r));
}

// KLD'' and KLD''' at rho0.
double curvature(double rho0) {
  const double c = 1.0 - rho0 * rho0;
  return (1.0 + rho0 * rho0) / (c * c);
}
double third_derivative(double rho0) {
  const double c = 1.0 - rho0 * rho0;
  return (6.0 * rho0 + 2.0 * rho0 * rho0 * rho0) / (c * c * c);
}

double log_jacobian(const CorrelationPoint& p, double rho0, double distance) {
  const double h = p.rho - rho0;
  if (std::abs(h) < kSeriesRadius) {
    const double a = curvature(rho0);
    return 0.5 * std::log(a) + std::log1p(third_derivative(rho0) * h / (3.0 * a));
  }
  const double c = 1.0 - rho0 * rho0;
  return std::log(std::abs(h)) + std::log1p(p.rho * rho0) - p.log_one_minus_rho2 - std::log(c) -
         std::log(distance);
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

}  // namespace

CorrelationPoint CorrelationPoint::from_rho(double rho) {
  check_open_unit(rho, "correlation");
  return {rho, std::log1p(-rho) + std::log1p(rho)};
}

CorrelationPoint CorrelationPoint::from_z(double theta) {
  if (!std::isfinite(theta)) throw DomainError("Fisher-z value must be finite");
  // 1 - rho^2 = 4 s (1 - s) with s = logistic(theta)
  const double log_term = std::log(4.0) - numerics::softplus(theta) - numerics::softplus(-theta);
  return {std::tanh(0.5 * theta), log_term};
}

double fisher_z(double rho) {
  check_open_unit(rho, "correlation");
  return std::log1p(rho) - std::log1p(-rho);
}

double inverse_fisher_z(double theta) { return std::tanh(0.5 * theta); }

double kld_correlation(const CorrelationPoint& p, double rho0) {
  check_open_unit(rho0, "rho0");
  const double c = 1.0 - rho0 * rho0;
  const double h = p.rho - rho0;
  const double t = h * (p.rho + rho0) / c;  // 1 - t = (1 - rho^2) / (1 - rho0^2)
  const double r = std::abs(t) < 0.5 ? numerics::log1p_minus_x(-t) : (p.log_one_minus_rho2 - std::log(c)) + t;
  const double kld = h * h / (2.0 * c) - 0.5 * r;
  return kld > 0.0 ? kld : 0.0;
}

double kld_correlation(double rho, double rho0) {
  return kld_correlation(CorrelationPoint::from_rho(rho), rho0);
}

double distance_correlation(const CorrelationPoint& p, double rho0) {
  const double h = p.rho - rho0;
  if (std::abs(h) < kSeriesRadius) {
    check_open_unit(rho0, "rho0");
    const double a = curvature(rho0);
    return std::sqrt(a) * std::abs(h) * (1.0 + third_derivative(rho0) * h / (6.0 * a));
  }
  return std::sqrt(2.0 * kld_correlation(p, rho0));
}

double distance_correlation(double rho, double rho0) {
  return distance_correlation(CorrelationPoint::from_rho(rho), rho0);
}

double distance_jacobian(const CorrelationPoint& p, double rho0) {
  return std::exp(log_jacobian(p, rho0, distance_correlation(p, rho0)));
}

PcRates solve_rates(PcStrategy strategy, double rho0, const PcContrasts& in) {
  if (!(rho0 > -1.0 && rho0 < 1.0)) throw std::invalid_argument("rho0 must lie in (-1, 1)");
  auto need = [](const std::optional<double>& v, const char* name) {
    if (!v) throw std::invalid_argument(std::string("missing contrast '") + name + "'");
    return *v;
  };
  auto check_left = [&](double u_min, double alpha1) {
    if (!(u_min > -1.0 && u_min < rho0)) throw std::invalid_argument("need -1 < umin < rho0");
    if (!(alpha1 > 0.0 && alpha1 < 1.0)) throw std::invalid_argument("need 0 < alpha1 < 1");
  };
  auto check_right = [&](double u_max, double alpha2) {
    if (!(u_max > rho0 && u_max < 1.0)) throw std::invalid_argument("need rho0 < umax < 1");
    if (!(alpha2 > 0.0 && alpha2 < 1.0)) throw std::invalid_argument("need 0 < alpha2 < 1");
  };

  switch (strategy) {
    case PcStrategy::left_tail: {
      const double w = need(in.omega1, "omega1");
      const double u = need(in.u_min, "umin");
      const double a = need(in.alpha1, "alpha1");
      check_left(u, a);
      if (!(a < w && w < 1.0)) throw std::invalid_argument("need 0 < alpha1 < omega1 < 1");
      const double l1 = (std::log(w) - std::log(a)) / distance_correlation(u, rho0);
      return {l1, w * l1 / (1.0 - w), w};
    }
    case PcStrategy::right_tail: {
      const double w = need(in.omega1, "omega1");
      const double u = need(in.u_max, "umax");
      const double a = need(in.alpha2, "alpha2");
      check_right(u, a);
      if (!(w > 0.0 && a < 1.0 - w)) throw std::invalid_argument("need 0 < alpha2 < 1 - omega1 < 1");
      const double l2 = (std::log1p(-w) - std::log(a)) / distance_correlation(u, rho0);
      return {(1.0 - w) * l2 / w, l2, w};
    }
    case PcStrategy::both_tails: {
      const double u1 = need(in.u_min, "umin");
      const double a1 = need(in.alpha1, "alpha1");
      const double u2 = need(in.u_max, "umax");
      const double a2 = need(in.alpha2, "alpha2");
      check_left(u1, a1);
      check_right(u2, a2);
      if (!(a1 + a2 < 1.0)) throw std::invalid_argument("need alpha1 + alpha2 < 1");
      const double d1 = distance_correlation(u1, rho0);
      const double d2 = distance_correlation(u2, rho0);
      auto lambda1 = [&](double w) { return (std::log(w) - std::log(a1)) / d1; };
      auto lambda2 = [&](double w) { return (std::log1p(-w) - std::log(a2)) / d2; };
      auto residual = [&](double w) { return w * lambda1(w) - (1.0 - w) * lambda2(w); };
      const double w = numerics::find_root(residual, a1, 1.0 - a2, 1e-15);
      return {lambda1(w), lambda2(w), w};
    }
  }
  throw std::invalid_argument("unknown PC strategy");
}

CorrelationPCPrior::CorrelationPCPrior(PcStrategy strategy, double rho0, PcContrasts contrasts)
    : strategy_(strategy), rho0_(rho0), inputs_(contrasts), rates_(solve_rates(strategy, rho0, contrasts)) {}

CorrelationPCPrior CorrelationPCPrior::left_tail(double rho0, double omega1, double u_min, double alpha1) {
  return {PcStrategy::left_tail, rho0, PcContrasts{omega1, u_min, alpha1, std::nullopt, std::nullopt}};
}

CorrelationPCPrior CorrelationPCPrior::right_tail(double rho0, double omega1, double u_max, double alpha2) {
  return {PcStrategy::right_tail, rho0, PcContrasts{omega1, std::nullopt, std::nullopt, u_max, alpha2}};
}

CorrelationPCPrior CorrelationPCPrior::both_tails(double rho0, double u_min, double alpha1, double u_max,
                                                  double alpha2) {
  return {PcStrategy::both_tails, rho0, PcContrasts{std::nullopt, u_min, alpha1, u_max, alpha2}};
}

double CorrelationPCPrior::log_density(const CorrelationPoint& p) const {
  const double d = distance_correlation(p, rho0_);
  const double lj = log_jacobian(p, rho0_, d);
  if (p.rho <= rho0_) return std::log(omega1() * lambda1()) - lambda1() * d + lj;
  return std::log(omega2() * lambda2()) - lambda2() * d + lj;
}

double CorrelationPCPrior::density(double rho) const {
  return std::exp(log_density(CorrelationPoint::from_rho(rho)));
}

double CorrelationPCPrior::log_density_z(double theta) const {
  const auto p = CorrelationPoint::from_z(theta);
  return log_density(p) + p.log_one_minus_rho2 - std::log(2.0);
}

double CorrelationPCPrior::cdf(double rho) const {
  if (rho <= -1.0) return 0.0;
  if (rho >= 1.0) return 1.0;
  const double d = distance_correlation(rho, rho0_);
  if (rho <= rho0_) return omega1() * std::exp(-lambda1() * d);
  return 1.0 - omega2() * std::exp(-lambda2() * d);
}

double CorrelationPCPrior::invert_distance_z(double distance, bool left) const {
  const double z0 = fisher_z(rho0_);
  if (distance <= 0.0) return z0;
  auto residual = [&](double z) { return distance_correlation(CorrelationPoint::from_z(z), rho0_) - distance; };
  double step = 1.0;
  double inner = z0;
  double outer = left ? z0 - step : z0 + step;
  while (residual(outer) < 0.0) {
    inner = outer;
    step *= 2.0;
    outer = left ? z0 - step : z0 + step;
    if (step > 1e12) throw std::runtime_error("distance inversion failed to bracket");
  }
  const double lo = std::min(inner, outer);
  const double hi = std::max(inner, outer);
  return numerics::find_root(residual, lo, hi, 1e-13 * std::max(1.0, std::abs(outer)));
}

double CorrelationPCPrior::quantile_z(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile probability must be in (0, 1)");
  if (p <= omega1()) return invert_distance_z(-std::log(p / omega1()) / lambda1(), true);
  return invert_distance_z(-std::log((1.0 - p) / omega2()) / lambda2(), false);
}

double CorrelationPCPrior::sample_z(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const bool left = unif(rng) < omega1();
  double u = unif(rng);
  if (u <= 0.0) u = std::numeric_limits<double>::min();
  const double e = -std::log(u);  // Exponential(1)
  const double d = left ? e / lambda1() : e / lambda2();
  return invert_distance_z(d, left);
}

double CorrelationPCPrior::sample(std::mt19937_64& rng) const {
  const double rho = inverse_fisher_z(sample_z(rng));
  const double edge = std::nextafter(1.0, 0.0);
  return std::clamp(rho, -edge, edge);
}

CorrelationPCPrior pc0_prior() { return CorrelationPCPrior::left_tail(0.0, 0.5, -0.9, 0.1); }
CorrelationPCPrior pc1_prior() { return CorrelationPCPrior::left_tail(-0.2, 0.4, -0.95, 0.05); }
CorrelationPCPrior pc2_prior() { return CorrelationPCPrior::both_tails(-0.2, -0.9, 0.05, 0.8, 0.05); }
CorrelationPCPrior pc3_prior() { return CorrelationPCPrior::right_tail(-0.2, 0.6, 0.4, 0.05); }

double variance_pc_rate(double u, double a) {
  if (!(u > 0.0)) throw DomainError("pc-var: u must be positive");
  if (!(a > 0.0 && a < 1.0)) throw DomainError("pc-var: a must be in (0, 1)");
  return -std::log(a) / u;
}

double variance_pc_density(double v, double lambda) {
  if (!(v > 0.0)) throw DomainError("variance must be positive");
  const double s = std::sqrt(v);
  return lambda / (2.0 * s) * std::exp(-lambda * s);
}

VariancePCPrior::VariancePCPrior(double u_, double a_) : u(u_), a(a_), lambda(variance_pc_rate(u_, a_)) {}

double VariancePCPrior::log_density(double v) const {
  if (!(v > 0.0)) throw DomainError("variance must be positive");
  return std::log(0.5 * lambda) - 0.5 * std::log(v) - lambda * std::sqrt(v);
}

double VariancePCPrior::sd_survival(double s) const { return s <= 0.0 ? 1.0 : std::exp(-lambda * s); }

ComparisonPrior ComparisonPrior::normal_on_z(double mean, double variance) {
  if (!(variance > 0.0)) throw DomainError("normal-z: variance must be positive");
  return {Kind::normal_on_z, mean, variance};
}

ComparisonPrior ComparisonPrior::inverse_gamma(double shape, double rate) {
  if (!(shape > 0.0 && rate > 0.0)) throw DomainError("invgamma: shape and rate must be positive");
  return {Kind::inverse_gamma, shape, rate};
}

ComparisonPrior ComparisonPrior::shifted_normal_on_z(double rho0, double variance) {
  return normal_on_z(fisher_z(rho0), variance);
}

double ComparisonPrior::log_density(double x) const {
  switch (kind) {
    case Kind::normal_on_z: {
      const auto p = CorrelationPoint::from_rho(x);
      const double theta = fisher_z(x);
      const double z = theta - first;
      return -0.5 * (kLog2Pi + std::log(second)) - 0.5 * z * z / second + std::log(2.0) - p.log_one_minus_rho2;
    }
    case Kind::inverse_gamma:
      if (!(x > 0.0)) throw DomainError("variance must be positive");
      return first * std::log(second) - std::lgamma(first) - (first + 1.0) * std::log(x) - second / x;
  }
  return 0.0;
}

double ComparisonPrior::density(double x) const { return std::exp(log_density(x)); }

double comparison_prior_density(double x, const ComparisonPrior& prior) { return prior.density(x); }

double log_density_log_variance(const VariancePrior& prior, double log_v) {
  if (auto pc = std::get_if<VariancePCPrior>(&prior))
    return std::log(0.5 * pc->lambda) + 0.5 * log_v - pc->lambda * std::exp(0.5 * log_v);
  const auto& cmp = std::get<ComparisonPrior>(prior);
  if (cmp.kind != ComparisonPrior::Kind::inverse_gamma)
    throw std::invalid_argument("variance prior must be pc-var or invgamma");
  return cmp.first * std::log(cmp.second) - std::lgamma(cmp.first) - cmp.first * log_v -
         cmp.second * std::exp(-log_v);
}

double log_density_fisher_z(const CorrelationPrior& prior, double theta) {
  if (auto pc = std::get_if<CorrelationPCPrior>(&prior)) return pc->log_density_z(theta);
  if (auto cmp = std::get_if<ComparisonPrior>(&prior)) {
    if (cmp->kind != ComparisonPrior::Kind::normal_on_z)
      throw std::invalid_argument("correlation prior must be pc-cor, normal-z or fixed");
    const double z = theta - cmp->first;
    return -0.5 * (kLog2Pi + std::log(cmp->second)) - 0.5 * z * z / cmp->second;
  }
  throw std::invalid_argument("fixed correlation has no density");
}

double correlation_prior_density(const CorrelationPrior& prior, double rho) {
  if (auto pc = std::get_if<CorrelationPCPrior>(&prior)) return pc->density(rho);
  if (auto cmp = std::get_if<ComparisonPrior>(&prior)) return cmp->density(rho);
  throw std::invalid_argument("fixed correlation has no density");
}

double variance_prior_density(const VariancePrior& prior, double v) {
  if (auto pc = std::get_if<VariancePCPrior>(&prior)) return pc->density(v);
  return std::get<ComparisonPrior>(prior).density(v);
}

bool is_fixed(const CorrelationPrior& prior) { return std::holds_alternative<FixedCorrelation>(prior); }

std::string describe(const VariancePrior& prior) {
  if (auto pc = std::get_if<VariancePCPrior>(&prior)) return "pc-var(u=" + fmt(pc->u) + ", a=" + fmt(pc->a) + ")";
  const auto& c = std::get<ComparisonPrior>(prior);
  return "invgamma(shape=" + fmt(c.first) + ", rate=" + fmt(c.second) + ")";
}

std::string describe(const CorrelationPrior& prior) {
  if (auto pc = std::get_if<CorrelationPCPrior>(&prior)) {
    const auto& in = pc->inputs();
    std::string s = "pc-cor(strategy=" + std::to_string(static_cast<int>(pc->strategy())) + ", rho0=" + fmt(pc->rho0());
    if (in.omega1) s += ", omega1=" + fmt(*in.omega1);
    if (in.u_min) s += ", umin=" + fmt(*in.u_min);
    if (in.alpha1) s += ", alpha1=" + fmt(*in.alpha1);
    if (in.u_max) s += ", umax=" + fmt(*in.u_max);
    if (in.alpha2) s += ", alpha2=" + fmt(*in.alpha2);
    return s + ")";
  }
  if (auto c = std::get_if<ComparisonPrior>(&prior))
    return "normal-z(mean=" + fmt(c->first) + ", var=" + fmt(c->second) + ")";
  return "fixed(rho=" + fmt(std::get<FixedCorrelation>(prior).rho) + ")";
}

}  // namespace metadiag
