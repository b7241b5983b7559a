#include "metadiag/mcmc.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "metadiag/numerics.hpp"

namespace metadiag {

namespace {

struct RePrior {
  Eigen::Matrix2d precision;
  double log_norm;
};

RePrior re_prior(const Hyperparameters& h) {
  const double det = h.var_phi * h.var_psi * (1.0 - h.rho) * (1.0 + h.rho);
  const double off = -h.rho * std::sqrt(h.var_phi * h.var_psi);
  RePrior p;
  p.precision << h.var_psi, off, off, h.var_phi;
  p.precision /= det;
  p.log_norm = -numerics::kLog2Pi - 0.5 * std::log(det);
  return p;
}

// Random-walk block with a learned proposal shape and an adapted scale.
struct Block {
  std::string name;
  int dim;
  double target;
  Eigen::MatrixXd shape;
  double log_scale;
  // Welford accumulators for the shape, filled during the first half of burn-in.
  std::size_t n_seen = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd m2;
  std::size_t batch_accepted = 0, batch_total = 0, batches = 0;
  std::size_t accepted = 0, total = 0;  // post burn-in

  Block(std::string n, int d, double t)
      : name(std::move(n)), dim(d), target(t), shape(Eigen::MatrixXd::Identity(d, d)),
        log_scale(std::log(2.38 / std::sqrt(static_cast<double>(d)) * 0.5)), mean(Eigen::VectorXd::Zero(d)),
        m2(Eigen::MatrixXd::Zero(d, d)) {}

  Eigen::VectorXd propose(const Eigen::VectorXd& cur, std::mt19937_64& rng) const {
    std::normal_distribution<double> norm;
    Eigen::VectorXd z(dim);
    for (int i = 0; i < dim; ++i) z(i) = norm(rng);
    return cur + std::exp(log_scale) * (shape * z);
  }

  void record(bool accept, bool burning) {
    if (burning) {
      batch_accepted += accept;
      if (++batch_total == 50) {
        const double rate = static_cast<double>(batch_accepted) / 50.0;
        const double delta = std::min(0.05, 1.0 / std::sqrt(static_cast<double>(++batches)));
        log_scale += rate > target ? delta : -delta;
        batch_accepted = batch_total = 0;
      }
    } else {
      accepted += accept;
      ++total;
    }
  }

  void learn(const Eigen::VectorXd& v) {
    ++n_seen;
    const Eigen::VectorXd d = v - mean;
    mean += d / static_cast<double>(n_seen);
    m2 += d * (v - mean).transpose();
  }

  void adopt_learned_shape() {
    if (n_seen < 100) return;
    Eigen::MatrixXd cov = m2 / static_cast<double>(n_seen - 1);
    cov.diagonal().array() += 1e-10;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) return;
    shape = llt.matrixL();
    log_scale = std::log(2.38 / std::sqrt(static_cast<double>(dim)));
  }
};

double type7_quantile(std::vector<double>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

Eigen::Index McmcResult::column(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::out_of_range("no sample column named " + name);
  return it - names.begin();
}

double effective_sample_size(const Eigen::Ref<const Eigen::VectorXd>& chain) {
  const Eigen::Index n = chain.size();
  if (n < 4) return static_cast<double>(n);
  const Eigen::VectorXd c = chain.array() - chain.mean();
  const double c0 = c.squaredNorm() / static_cast<double>(n);
  if (!(c0 > 0.0)) return static_cast<double>(n);
  auto rho = [&](Eigen::Index lag) {
    return c.head(n - lag).dot(c.tail(n - lag)) / static_cast<double>(n) / c0;
  };
  // Geyer: sum consecutive pairs while positive.
  double sum = -1.0;
  for (Eigen::Index k = 0; 2 * k + 1 < n; ++k) {
    const double pair = (k == 0 ? 1.0 : rho(2 * k)) + rho(2 * k + 1);
    if (pair <= 0.0) break;
    sum += 2.0 * pair;
  }
  return static_cast<double>(n) / std::max(sum, 1e-12);
}

Marginal sample_marginal(std::string name, const Eigen::Ref<const Eigen::VectorXd>& draws, int points) {
  Marginal m;
  m.name = std::move(name);
  const auto n = static_cast<double>(draws.size());
  std::vector<double> v(draws.data(), draws.data() + draws.size());
  std::sort(v.begin(), v.end());
  m.summary.mean = draws.mean();
  m.summary.sd = std::sqrt((draws.array() - m.summary.mean).square().sum() / std::max(1.0, n - 1.0));
  m.summary.q025 = type7_quantile(v, 0.025);
  m.summary.q50 = type7_quantile(v, 0.5);
  m.summary.q975 = type7_quantile(v, 0.975);
  const double iqr = type7_quantile(v, 0.75) - type7_quantile(v, 0.25);
  double spread = std::min(m.summary.sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = m.summary.sd > 0.0 ? m.summary.sd : 1e-6;
  const double bw = 0.9 * spread * std::pow(n, -0.2);
  const double lo = v.front() - 3.0 * bw, hi = v.back() + 3.0 * bw;
  m.x.resize(static_cast<std::size_t>(points));
  m.density.assign(m.x.size(), 0.0);
  for (int i = 0; i < points; ++i) m.x[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (points - 1);
  const double norm = 1.0 / (n * bw * std::sqrt(2.0 * M_PI));
  // Draws are sorted, so only a window of them touches each grid point.
  for (std::size_t i = 0; i < m.x.size(); ++i) {
    auto first = std::lower_bound(v.begin(), v.end(), m.x[i] - 8.0 * bw);
    auto last = std::upper_bound(first, v.end(), m.x[i] + 8.0 * bw);
    double s = 0.0;
    for (auto it = first; it != last; ++it) {
      const double u = (m.x[i] - *it) / bw;
      s += std::exp(-0.5 * u * u);
    }
    m.density[i] = s * norm;
  }
  return m;
}

McmcResult mcmc_oracle(const Dataset& data, const PriorBundle& priors, const McmcConfig& config) {
  return mcmc_oracle(LatentModel(data), priors, config);
}

McmcResult mcmc_oracle(const LatentModel& model, const PriorBundle& priors, const McmcConfig& config) {
  if (config.iterations <= config.burn_in) throw std::invalid_argument("iterations must exceed burn-in");
  if (config.thin == 0) throw std::invalid_argument("thinning must be positive");
  const auto& layout = model.layout();
  const std::size_t n_studies = layout.n_studies;
  const std::size_t n_fixed = layout.n_fixed();
  const HyperSpace space = priors.space();
  const double fixed_var = priors.intercept_prior_variance;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.dim()));
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(space.dim());
  Hyperparameters hyper = space.from_internal(theta);
  RePrior rp = re_prior(hyper);

  std::vector<Block> blocks;
  for (std::size_t i = 0; i < n_studies; ++i) blocks.emplace_back("study[" + std::to_string(i) + "]", 2, 0.23);
  for (std::size_t j = 0; j < n_fixed; ++j) blocks.emplace_back("fixed[" + std::to_string(j) + "]", 1, 0.44);
  blocks.emplace_back("hyper", space.dim(), space.dim() == 1 ? 0.44 : 0.23);
  Block& hyper_block = blocks.back();

  // Which arms a fixed effect enters, with its coefficient per study.
  auto fixed_coef = [&](std::size_t j, std::size_t i, int& arm) -> double {
    if (j == LatentLayout::mu) return arm = 0, 1.0;
    if (j == LatentLayout::nu) return arm = 1, 1.0;
    Eigen::VectorXd e = Eigen::VectorXd::Zero(x.size());
    e(static_cast<Eigen::Index>(j)) = 1.0;
    if (j < 2 + layout.p_se) {
      arm = 0;
      return model.eta_se(e, i) - model.eta_se(Eigen::VectorXd::Zero(x.size()), i);
    }
    arm = 1;
    return model.eta_sp(e, i) - model.eta_sp(Eigen::VectorXd::Zero(x.size()), i);
  };
  std::vector<std::vector<double>> coef(n_fixed, std::vector<double>(n_studies));
  std::vector<int> fixed_arm(n_fixed);
  for (std::size_t j = 0; j < n_fixed; ++j)
    for (std::size_t i = 0; i < n_studies; ++i) coef[j][i] = fixed_coef(j, i, fixed_arm[j]);

  auto study_log_target = [&](std::size_t i, const Eigen::VectorXd& xv, const Eigen::Vector2d& r) {
    return model.arm_log_likelihood(i, 0, model.eta_se(xv, i)) + model.arm_log_likelihood(i, 1, model.eta_sp(xv, i)) -
           0.5 * r.dot(rp.precision * r);
  };
  auto hyper_log_target = [&](const Eigen::VectorXd& t, RePrior& out) {
    const Hyperparameters h = space.from_internal(t);
    if (!(h.var_phi > 0.0 && h.var_psi > 0.0 && std::isfinite(h.var_phi) && std::isfinite(h.var_psi) &&
          std::abs(h.rho) < 1.0))
      return -std::numeric_limits<double>::infinity();
    out = re_prior(h);
    double lp = priors.log_hyperprior(t) + static_cast<double>(n_studies) * out.log_norm;
    for (std::size_t i = 0; i < n_studies; ++i) {
      const Eigen::Vector2d r(x(static_cast<Eigen::Index>(layout.phi(i))), x(static_cast<Eigen::Index>(layout.psi(i))));
      lp -= 0.5 * r.dot(out.precision * r);
    }
    return lp;
  };

  const std::size_t n_keep = (config.iterations - config.burn_in) / config.thin;
  McmcResult res;
  for (std::size_t j = 0; j < n_fixed; ++j) {
    if (j == LatentLayout::mu) res.names.push_back("mu");
    else if (j == LatentLayout::nu) res.names.push_back("nu");
    else if (j < 2 + layout.p_se) res.names.push_back("alpha[" + std::to_string(j - 2) + "]");
    else res.names.push_back("beta[" + std::to_string(j - 2 - layout.p_se) + "]");
  }
  for (const char* n : {"se", "sp", "var_phi", "var_psi", "rho"}) res.names.emplace_back(n);
  res.samples.resize(static_cast<Eigen::Index>(n_keep), static_cast<Eigen::Index>(res.names.size()));

  double hyper_lp = hyper_log_target(theta, rp);
  std::size_t kept = 0;
  for (std::size_t iter = 0; iter < config.iterations; ++iter) {
    const bool burning = iter < config.burn_in;
    const bool learning = iter < config.burn_in / 2;

    for (std::size_t i = 0; i < n_studies; ++i) {
      Block& b = blocks[i];
      const auto ip = static_cast<Eigen::Index>(layout.phi(i)), is = static_cast<Eigen::Index>(layout.psi(i));
      const Eigen::Vector2d cur(x(ip), x(is));
      const double lp0 = study_log_target(i, x, cur);
      const Eigen::Vector2d prop = b.propose(cur, rng);
      x(ip) = prop(0);
      x(is) = prop(1);
      const double lp1 = study_log_target(i, x, prop);
      const bool accept = std::log(unif(rng)) < lp1 - lp0;
      if (!accept) {
        x(ip) = cur(0);
        x(is) = cur(1);
      }
      b.record(accept, burning);
      if (learning) b.learn(accept ? Eigen::VectorXd(prop) : Eigen::VectorXd(cur));
    }

    for (std::size_t j = 0; j < n_fixed; ++j) {
      Block& b = blocks[n_studies + j];
      const auto jj = static_cast<Eigen::Index>(j);
      const double cur = x(jj);
      const double prop = b.propose(Eigen::VectorXd::Constant(1, cur), rng)(0);
      const double delta = prop - cur;
      double diff = -0.5 * (prop * prop - cur * cur) / fixed_var;
      for (std::size_t i = 0; i < n_studies; ++i) {
        if (coef[j][i] == 0.0) continue;
        const double eta = fixed_arm[j] == 0 ? model.eta_se(x, i) : model.eta_sp(x, i);
        diff += model.arm_log_likelihood(i, fixed_arm[j], eta + coef[j][i] * delta) -
                model.arm_log_likelihood(i, fixed_arm[j], eta);
      }
      const bool accept = std::log(unif(rng)) < diff;
      if (accept) x(jj) = prop;
      b.record(accept, burning);
      if (learning) b.learn(Eigen::VectorXd::Constant(1, x(jj)));
    }

    {
      // The latent move changed the random effects; refresh the current value.
      hyper_lp = hyper_log_target(theta, rp);
      const Eigen::VectorXd prop = hyper_block.propose(theta, rng);
      RePrior rp_prop;
      const double lp1 = hyper_log_target(prop, rp_prop);
      const bool accept = std::isfinite(lp1) && std::log(unif(rng)) < lp1 - hyper_lp;
      if (accept) {
        theta = prop;
        hyper_lp = lp1;
        rp = rp_prop;
        hyper = space.from_internal(theta);
      }
      hyper_block.record(accept, burning);
      if (learning) hyper_block.learn(theta);
    }

    if (iter + 1 == config.burn_in / 2)
      for (auto& b : blocks) b.adopt_learned_shape();

    if (!burning && (iter - config.burn_in) % config.thin == 0 && kept < n_keep) {
      auto row = res.samples.row(static_cast<Eigen::Index>(kept++));
      for (std::size_t j = 0; j < n_fixed; ++j) row(static_cast<Eigen::Index>(j)) = x(static_cast<Eigen::Index>(j));
      const auto k = static_cast<Eigen::Index>(n_fixed);
      row(k) = numerics::logistic(x(LatentLayout::mu));
      row(k + 1) = numerics::logistic(x(LatentLayout::nu));
      row(k + 2) = hyper.var_phi;
      row(k + 3) = hyper.var_psi;
      row(k + 4) = hyper.rho;
    }
  }
  res.samples.conservativeResize(static_cast<Eigen::Index>(kept), Eigen::NoChange);

  for (const auto& b : blocks) {
    const double rate = b.total ? static_cast<double>(b.accepted) / static_cast<double>(b.total) : 0.0;
    res.block_names.push_back(b.name);
    res.acceptance.push_back(rate);
    if (rate < 0.05 || rate > 0.8) {
      std::ostringstream os;
      os << "acceptance rate " << rate << " for block " << b.name << " outside [0.05, 0.8]";
      res.warnings.push_back(os.str());
    }
  }
  const bool fixed_rho = space.correlation_fixed();
  for (Eigen::Index c = 0; c < res.samples.cols(); ++c) {
    const std::string& name = res.names[static_cast<std::size_t>(c)];
    const bool constant = fixed_rho && name == "rho";
    const double ess = constant ? static_cast<double>(kept) : effective_sample_size(res.samples.col(c));
    res.ess.push_back(ess);
    if (!constant && ess < 200.0) {
      std::ostringstream os;
      os << "effective sample size " << ess << " for " << name << " below 200";
      res.warnings.push_back(os.str());
    }
    if (!constant) res.summary.marginals.push_back(sample_marginal(name, res.samples.col(c)));
  }
  if (fixed_rho) res.summary.fixed_rho = space.fixed_rho();
  res.summary.marginal_log_likelihood = std::numeric_limits<double>::quiet_NaN();
  {
    const Eigen::VectorXd a = res.samples.col(0).array() - res.samples.col(0).mean();
    const Eigen::VectorXd b = res.samples.col(1).array() - res.samples.col(1).mean();
    res.summary.mu_nu_correlation = a.dot(b) / std::sqrt(a.squaredNorm() * b.squaredNorm());
  }
  res.summary.warnings = res.warnings;
  return res;
}

}  // namespace metadiag
