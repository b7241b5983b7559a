#include "metadiag/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <random>
#include <set>
#include <thread>

#include "metadiag/numerics.hpp"

namespace metadiag {

double Scenario::mu() const { return numerics::logit(true_se); }
double Scenario::nu() const { return numerics::logit(true_sp); }

std::vector<Scenario> builtin_scenarios() {
  const double pairs[3][2] = {{0.8, 0.7}, {0.9, 0.9}, {0.95, 0.3}};
  const std::size_t sizes[3] = {10, 25, 50};
  const double rhos[9] = {-0.95, -0.8, -0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6};
  std::vector<Scenario> out;
  int id = 1;
  for (const auto& p : pairs)
    for (std::size_t n : sizes)
      for (double r : rhos) {
        Scenario s;
        s.id = id++;
        s.n_studies = n;
        s.true_se = p[0];
        s.true_sp = p[1];
        s.rho = r;
        out.push_back(s);
      }
  return out;
}

std::vector<int> parse_scenario_selection(const std::string& text, int max_id) {
  std::set<int> ids;
  std::size_t pos = 0;
  auto parse_int = [&](const std::string& tok, const std::string& whole) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != tok.size()) throw std::invalid_argument("invalid scenario selector '" + whole + "'");
    if (v < 1 || v > max_id)
      throw std::invalid_argument("unknown scenario id " + tok + " (valid: 1-" + std::to_string(max_id) + ")");
    return v;
  };
  while (pos <= text.size()) {
    const auto comma = std::min(text.find(',', pos), text.size());
    std::string tok = text.substr(pos, comma - pos);
    tok.erase(std::remove_if(tok.begin(), tok.end(), [](unsigned char c) { return std::isspace(c); }), tok.end());
    pos = comma + 1;
    if (tok.empty()) throw std::invalid_argument("empty scenario selector in '" + text + "'");
    const auto dash = tok.find('-', 1);
    if (dash == std::string::npos) {
      ids.insert(parse_int(tok, tok));
    } else {
      const int a = parse_int(tok.substr(0, dash), tok), b = parse_int(tok.substr(dash + 1), tok);
      if (a > b) throw std::invalid_argument("descending scenario range '" + tok + "'");
      for (int i = a; i <= b; ++i) ids.insert(i);
    }
  }
  return {ids.begin(), ids.end()};
}

SimulatedData simulate(const Scenario& sc, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> gamma(sc.size.shape, 1.0 / sc.size.rate);
  std::normal_distribution<double> norm;
  const Eigen::Matrix2d l = assemble_covariance(sc.hyper()).llt().matrixL();
  const double mu = sc.mu(), nu = sc.nu();
  std::vector<double> logit_se, logit_sp;
  std::vector<StudyRecord> studies;
  studies.reserve(sc.n_studies);
  for (std::size_t i = 0; i < sc.n_studies; ++i) {
    const double n = std::max(sc.size.shift, std::round(sc.size.shift + gamma(rng)));
    const auto total = static_cast<long long>(n);
    auto diseased = static_cast<long long>(std::round(n * sc.size.diseased_fraction));
    diseased = std::clamp(diseased, 1LL, total - 1);
    const long long healthy = total - diseased;
    const Eigen::Vector2d z(norm(rng), norm(rng));
    const Eigen::Vector2d re = l * z;
    const double ls = mu + re(0), lp = nu + re(1);
    std::binomial_distribution<long long> tp_draw(diseased, numerics::logistic(ls));
    std::binomial_distribution<long long> tn_draw(healthy, numerics::logistic(lp));
    StudyRecord s;
    s.study_id = "S" + std::to_string(i + 1);
    s.tp = tp_draw(rng);
    s.fn_ = diseased - s.tp;
    s.tn = tn_draw(rng);
    s.fp = healthy - s.tn;
    studies.push_back(std::move(s));
    logit_se.push_back(ls);
    logit_sp.push_back(lp);
  }
  return {Dataset("scenario-" + std::to_string(sc.id), std::move(studies)), std::move(logit_se), std::move(logit_sp)};
}

ParameterMetrics compute_metrics(std::string parameter, double truth, const std::vector<double>& medians,
                                 const std::vector<double>& lower, const std::vector<double>& upper) {
  ParameterMetrics m;
  m.parameter = std::move(parameter);
  m.truth = truth;
  m.medians = medians;
  const auto n = static_cast<double>(medians.size());
  if (medians.empty()) return m;
  double mean_median = 0.0;
  std::size_t covered = 0;
  for (std::size_t r = 0; r < medians.size(); ++r) {
    m.errors.push_back(medians[r] - truth);
    m.bias += medians[r] - truth;
    mean_median += medians[r];
    covered += lower[r] <= truth && truth <= upper[r];
  }
  m.bias /= n;
  mean_median /= n;
  double var = 0.0;
  for (double v : medians) var += (v - mean_median) * (v - mean_median);
  var /= n;
  m.mse = m.bias * m.bias + var;
  m.coverage95 = static_cast<double>(covered) / n;
  return m;
}

const ParameterMetrics& ScenarioMetrics::at(const std::string& parameter) const {
  for (const auto& p : parameters)
    if (p.parameter == parameter) return p;
  throw std::out_of_range("no metrics for parameter " + parameter);
}

namespace {

struct Estimate {
  double median, lower, upper;
};

// Per replicate and prior: estimates per parameter name, or an error message.
struct ReplicateOutcome {
  bool ok = false;
  std::string error;
  std::vector<std::pair<std::string, Estimate>> estimates;
};

std::vector<std::pair<std::string, double>> truths(const Scenario& sc, bool fixed_rho) {
  std::vector<std::pair<std::string, double>> t = {{"mu", sc.mu()},          {"nu", sc.nu()},
                                                   {"se", sc.true_se},       {"sp", sc.true_sp},
                                                   {"var_phi", sc.var_phi}, {"var_psi", sc.var_psi}};
  if (!fixed_rho) t.emplace_back("rho", sc.rho);
  return t;
}

ReplicateOutcome fit_one(const Scenario& sc, const Dataset& data, const PriorBundle& priors,
                         const SimulationConfig& cfg, std::uint64_t seed) {
  ReplicateOutcome out;
  const auto names = truths(sc, is_fixed(priors.cor_prior));
  try {
    if (cfg.engine == Engine::truth) {
      for (const auto& [n, v] : names) out.estimates.push_back({n, {v, v, v}});
    } else {
      PosteriorSummary s;
      if (cfg.engine == Engine::laplace) {
        s = fit_laplace(data, priors, cfg.inference).summary;
      } else {
        McmcConfig m = cfg.mcmc;
        m.seed = seed;
        s = mcmc_oracle(data, priors, m).summary;
      }
      for (const auto& [n, v] : names) {
        const auto& q = s[n];
        out.estimates.push_back({n, {q.q50, q.q025, q.q975}});
      }
    }
    out.ok = true;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::vector<ScenarioMetrics> run_scenario(const Scenario& scenario, const std::vector<PriorConfig>& priors,
                                          std::size_t n_replicates, std::uint64_t seed,
                                          const SimulationConfig& config) {
  if (n_replicates == 0) throw std::invalid_argument("n_replicates must be at least 1");
  std::vector<std::vector<ReplicateOutcome>> outcomes(n_replicates, std::vector<ReplicateOutcome>(priors.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < n_replicates; r = next++) {
      const std::uint64_t rs = seed ^ static_cast<std::uint64_t>(r);
      const Dataset data = generate_dataset(scenario, rs);
      for (std::size_t p = 0; p < priors.size(); ++p)
        outcomes[r][p] = fit_one(scenario, data, priors[p].priors, config, rs);
    }
  };
  unsigned threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_replicates));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<ScenarioMetrics> result;
  for (std::size_t p = 0; p < priors.size(); ++p) {
    ScenarioMetrics m;
    m.scenario_id = scenario.id;
    m.prior_label = priors[p].label;
    m.n_replicates = n_replicates;
    const auto names = truths(scenario, is_fixed(priors[p].priors.cor_prior));
    std::vector<std::vector<double>> med(names.size()), lo(names.size()), hi(names.size());
    for (std::size_t r = 0; r < n_replicates; ++r) {
      const auto& o = outcomes[r][p];
      if (!o.ok) {
        ++m.n_failures;
        m.failure_messages.push_back("replicate " + std::to_string(r) + ": " + o.error);
        continue;
      }
      for (std::size_t k = 0; k < names.size(); ++k) {
        const auto& e = o.estimates[k].second;
        med[k].push_back(e.median);
        lo[k].push_back(e.lower);
        hi[k].push_back(e.upper);
        ReplicateRecord rec;
        rec.replicate = r;
        rec.parameter = names[k].first;
        rec.truth = names[k].second;
        rec.median = e.median;
        rec.lower95 = e.lower;
        rec.upper95 = e.upper;
        rec.error = e.median - rec.truth;
        rec.covered = e.lower <= rec.truth && rec.truth <= e.upper;
        m.records.push_back(rec);
      }
    }
    for (std::size_t k = 0; k < names.size(); ++k)
      m.parameters.push_back(compute_metrics(names[k].first, names[k].second, med[k], lo[k], hi[k]));
    result.push_back(std::move(m));
  }
  return result;
}

void write_replicates_csv(std::ostream& out, const ScenarioMetrics& m) {
  out << "replicate,parameter,truth,median,lower95,upper95,error,covered\n";
  for (const auto& r : m.records)
    out << r.replicate << ',' << r.parameter << ',' << fmt(r.truth) << ',' << fmt(r.median) << ',' << fmt(r.lower95)
        << ',' << fmt(r.upper95) << ',' << fmt(r.error) << ',' << (r.covered ? 1 : 0) << '\n';
}

void write_metrics_csv(std::ostream& out, const std::vector<ScenarioMetrics>& metrics) {
  out << "scenario,prior,parameter,truth,n_replicates,n_failures,bias,mse,coverage95\n";
  for (const auto& m : metrics)
    for (const auto& p : m.parameters)
      out << m.scenario_id << ',' << m.prior_label << ',' << p.parameter << ',' << fmt(p.truth) << ','
          << m.n_replicates << ',' << m.n_failures << ',' << fmt(p.bias) << ',' << fmt(p.mse) << ','
          << fmt(p.coverage95) << '\n';
}

}  // namespace metadiag
