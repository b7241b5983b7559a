#include "metadiag/latent_model.hpp"

#include <cmath>
#include <stdexcept>

#include "metadiag/numerics.hpp"

namespace metadiag {

using numerics::kLog2Pi;

Eigen::Matrix2d assemble_covariance(const Hyperparameters& h) {
  const double off = h.rho * std::sqrt(h.var_phi * h.var_psi);
  Eigen::Matrix2d s;
  s << h.var_phi, off, off, h.var_psi;
  return s;
}

namespace {

struct RandomEffectPrior {
  Eigen::Matrix2d precision;
  double log_norm;  // -log(2 pi) - 0.5 log det(Sigma)
};

RandomEffectPrior random_effect_prior(const Hyperparameters& h) {
  const double one_minus = (1.0 - h.rho) * (1.0 + h.rho);
  const double det = h.var_phi * h.var_psi * one_minus;
  const double off = -h.rho * std::sqrt(h.var_phi * h.var_psi);
  RandomEffectPrior p;
  p.precision << h.var_psi, off, off, h.var_phi;
  p.precision /= det;
  p.log_norm = -kLog2Pi - 0.5 * std::log(det);
  return p;
}

}  // namespace

HyperSpace::HyperSpace(const CorrelationPrior& cor_prior) {
  if (auto f = std::get_if<FixedCorrelation>(&cor_prior)) {
    if (!(f->rho > -1.0 && f->rho < 1.0)) throw DomainError("fixed correlation must lie in (-1, 1)");
    fixed_rho_ = true;
    rho_ = f->rho;
  }
}

Eigen::VectorXd HyperSpace::to_internal(const Hyperparameters& h) const {
  Eigen::VectorXd t(dim());
  t(0) = std::log(h.var_phi);
  t(1) = std::log(h.var_psi);
  if (!fixed_rho_) t(2) = fisher_z(h.rho);
  return t;
}

Hyperparameters HyperSpace::from_internal(const Eigen::VectorXd& t) const {
  return {std::exp(t(0)), std::exp(t(1)), fixed_rho_ ? rho_ : inverse_fisher_z(t(2))};
}

double PriorBundle::log_hyperprior(const Eigen::VectorXd& theta) const {
  double lp = log_density_log_variance(var_phi_prior, theta(0)) + log_density_log_variance(var_psi_prior, theta(1));
  if (!is_fixed(cor_prior)) lp += log_density_fisher_z(cor_prior, theta(2));
  return lp;
}

LatentField LatentField::zeros(const LatentLayout& l) {
  LatentField f;
  f.alpha = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(l.p_se));
  f.beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(l.p_sp));
  f.phi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(l.n_studies));
  f.psi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(l.n_studies));
  return f;
}

LatentField LatentField::from_vector(const LatentLayout& l, const Eigen::VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != l.dim()) throw std::invalid_argument("latent vector has wrong size");
  LatentField f = zeros(l);
  f.mu = x(LatentLayout::mu);
  f.nu = x(LatentLayout::nu);
  for (std::size_t j = 0; j < l.p_se; ++j) f.alpha(j) = x(l.alpha(j));
  for (std::size_t j = 0; j < l.p_sp; ++j) f.beta(j) = x(l.beta(j));
  for (std::size_t i = 0; i < l.n_studies; ++i) {
    f.phi(i) = x(l.phi(i));
    f.psi(i) = x(l.psi(i));
  }
  return f;
}

Eigen::VectorXd LatentField::to_vector() const {
  const auto p_se = alpha.size(), p_sp = beta.size(), n = phi.size();
  if (psi.size() != n) throw std::invalid_argument("phi and psi lengths differ");
  Eigen::VectorXd x(2 + p_se + p_sp + 2 * n);
  x(0) = mu;
  x(1) = nu;
  x.segment(2, p_se) = alpha;
  x.segment(2 + p_se, p_sp) = beta;
  for (Eigen::Index i = 0; i < n; ++i) {
    x(2 + p_se + p_sp + 2 * i) = phi(i);
    x(2 + p_se + p_sp + 2 * i + 1) = psi(i);
  }
  return x;
}

LatentModel::LatentModel(const Dataset& data) {
  layout_ = {data.n_covariates_se(), data.n_covariates_sp(), data.size()};
  for (const auto& s : data.studies()) {
    y_se_.push_back(static_cast<double>(s.tp));
    n_se_.push_back(static_cast<double>(s.diseased()));
    y_sp_.push_back(static_cast<double>(s.tn));
    n_sp_.push_back(static_cast<double>(s.non_diseased()));
    log_choose_.push_back(numerics::log_choose(n_se_.back(), y_se_.back()) +
                          numerics::log_choose(n_sp_.back(), y_sp_.back()));
    u_.push_back(Eigen::Map<const Eigen::VectorXd>(s.covariates_se.data(),
                                                   static_cast<Eigen::Index>(s.covariates_se.size())));
    v_.push_back(Eigen::Map<const Eigen::VectorXd>(s.covariates_sp.data(),
                                                   static_cast<Eigen::Index>(s.covariates_sp.size())));
  }
}

LatentModel LatentModel::gaussian(std::vector<double> y_se, std::vector<double> var_se, std::vector<double> y_sp,
                                  std::vector<double> var_sp) {
  const auto n = y_se.size();
  if (var_se.size() != n || y_sp.size() != n || var_sp.size() != n)
    throw std::invalid_argument("pseudo-observation vectors differ in length");
  LatentModel m;
  m.layout_ = {0, 0, n};
  m.obs_ = Observation::gaussian_identity;
  m.y_se_ = std::move(y_se);
  m.n_se_ = std::move(var_se);
  m.y_sp_ = std::move(y_sp);
  m.n_sp_ = std::move(var_sp);
  m.log_choose_.assign(n, 0.0);
  m.u_.assign(n, Eigen::VectorXd());
  m.v_.assign(n, Eigen::VectorXd());
  return m;
}

double LatentModel::eta_se(const Eigen::VectorXd& x, std::size_t i) const {
  double e = x(LatentLayout::mu) + x(layout_.phi(i));
  for (std::size_t j = 0; j < layout_.p_se; ++j) e += u_[i](j) * x(layout_.alpha(j));
  return e;
}

double LatentModel::eta_sp(const Eigen::VectorXd& x, std::size_t i) const {
  double e = x(LatentLayout::nu) + x(layout_.psi(i));
  for (std::size_t j = 0; j < layout_.p_sp; ++j) e += v_[i](j) * x(layout_.beta(j));
  return e;
}

namespace {

// Value, first and second derivative of one arm's log-likelihood in eta.
struct ArmTerms {
  double value, score, info;
};

ArmTerms binomial_terms(double y, double n, double eta) {
  const double p = numerics::logistic(eta);
  return {y * eta - n * numerics::softplus(eta), y - n * p, n * p * (1.0 - p)};
}

ArmTerms gaussian_terms(double y, double var, double eta) {
  const double r = y - eta;
  return {-0.5 * (kLog2Pi + std::log(var)) - 0.5 * r * r / var, r / var, 1.0 / var};
}

}  // namespace

double LatentModel::arm_log_likelihood(std::size_t i, int arm, double eta) const {
  if (!likelihood_enabled_) return 0.0;
  const double y = arm == 0 ? y_se_[i] : y_sp_[i];
  const double n = arm == 0 ? n_se_[i] : n_sp_[i];
  return obs_ == Observation::binomial_logit ? binomial_terms(y, n, eta).value : gaussian_terms(y, n, eta).value;
}

double LatentModel::log_likelihood(const Eigen::VectorXd& x) const {
  if (!likelihood_enabled_) return 0.0;
  double ll = 0.0;
  for (std::size_t i = 0; i < layout_.n_studies; ++i)
    ll += log_choose_[i] + arm_log_likelihood(i, 0, eta_se(x, i)) + arm_log_likelihood(i, 1, eta_sp(x, i));
  return ll;
}

double LatentModel::log_conditional(const Eigen::VectorXd& x, const Hyperparameters& hyper,
                                    double fixed_variance) const {
  const auto re = random_effect_prior(hyper);
  double lp = log_likelihood(x);
  for (std::size_t i = 0; i < layout_.n_studies; ++i) {
    const Eigen::Vector2d r(x(layout_.phi(i)), x(layout_.psi(i)));
    lp += re.log_norm - 0.5 * r.dot(re.precision * r);
  }
  const auto k = static_cast<Eigen::Index>(layout_.n_fixed());
  lp += -0.5 * static_cast<double>(k) * (kLog2Pi + std::log(fixed_variance)) -
        0.5 * x.head(k).squaredNorm() / fixed_variance;
  return lp;
}

Eigen::VectorXd LatentModel::gradient(const Eigen::VectorXd& x, const Hyperparameters& hyper,
                                      double fixed_variance) const {
  const auto re = random_effect_prior(hyper);
  const auto k = static_cast<Eigen::Index>(layout_.n_fixed());
  Eigen::VectorXd g(x.size());
  g.head(k) = -x.head(k) / fixed_variance;
  for (std::size_t i = 0; i < layout_.n_studies; ++i) {
    double s1 = 0.0, s2 = 0.0;
    if (likelihood_enabled_) {
      const bool bin = obs_ == Observation::binomial_logit;
      const double e1 = eta_se(x, i), e2 = eta_sp(x, i);
      s1 = bin ? binomial_terms(y_se_[i], n_se_[i], e1).score : gaussian_terms(y_se_[i], n_se_[i], e1).score;
      s2 = bin ? binomial_terms(y_sp_[i], n_sp_[i], e2).score : gaussian_terms(y_sp_[i], n_sp_[i], e2).score;
    }
    const Eigen::Vector2d r(x(layout_.phi(i)), x(layout_.psi(i)));
    const Eigen::Vector2d pr = re.precision * r;
    g(layout_.phi(i)) = s1 - pr(0);
    g(layout_.psi(i)) = s2 - pr(1);
    g(LatentLayout::mu) += s1;
    g(LatentLayout::nu) += s2;
    for (std::size_t j = 0; j < layout_.p_se; ++j) g(layout_.alpha(j)) += s1 * u_[i](j);
    for (std::size_t j = 0; j < layout_.p_sp; ++j) g(layout_.beta(j)) += s2 * v_[i](j);
  }
  return g;
}

ArrowheadMatrix LatentModel::negative_hessian(const Eigen::VectorXd& x, const Hyperparameters& hyper,
                                              double fixed_variance) const {
  const auto re = random_effect_prior(hyper);
  const auto k = static_cast<Eigen::Index>(layout_.n_fixed());
  ArrowheadMatrix h(k, layout_.n_studies);
  h.corner.diagonal().setConstant(1.0 / fixed_variance);
  Eigen::VectorXd a(k), b(k);
  for (std::size_t i = 0; i < layout_.n_studies; ++i) {
    double w1 = 0.0, w2 = 0.0;
    if (likelihood_enabled_) {
      const bool bin = obs_ == Observation::binomial_logit;
      const double e1 = eta_se(x, i), e2 = eta_sp(x, i);
      w1 = bin ? binomial_terms(y_se_[i], n_se_[i], e1).info : gaussian_terms(y_se_[i], n_se_[i], e1).info;
      w2 = bin ? binomial_terms(y_sp_[i], n_sp_[i], e2).info : gaussian_terms(y_sp_[i], n_sp_[i], e2).info;
    }
    a.setZero();
    b.setZero();
    a(LatentLayout::mu) = 1.0;
    b(LatentLayout::nu) = 1.0;
    for (std::size_t j = 0; j < layout_.p_se; ++j) a(layout_.alpha(j)) = u_[i](j);
    for (std::size_t j = 0; j < layout_.p_sp; ++j) b(layout_.beta(j)) = v_[i](j);
    h.corner.noalias() += w1 * a * a.transpose() + w2 * b * b.transpose();
    h.border[i].col(0) = w1 * a;
    h.border[i].col(1) = w2 * b;
    h.blocks[i] = re.precision;
    h.blocks[i](0, 0) += w1;
    h.blocks[i](1, 1) += w2;
  }
  return h;
}

double log_likelihood(const Dataset& data, const LatentField& latent) {
  return LatentModel(data).log_likelihood(latent.to_vector());
}

double log_joint(const Dataset& data, const LatentField& latent, const Hyperparameters& hyper,
                 const PriorBundle& priors) {
  const LatentModel model(data);
  return model.log_conditional(latent.to_vector(), hyper, priors.intercept_prior_variance) +
         priors.log_hyperprior(priors.space().to_internal(hyper));
}

}  // namespace metadiag
