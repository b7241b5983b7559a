#include "metadiag/report.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "metadiag/numerics.hpp"

namespace metadiag {

namespace {

std::string fmt(double v, const char* spec = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

bool is_fixed_effect(const std::string& name) { return name != "se" && name != "sp" && !name.starts_with("var_") && name != "rho"; }

}  // namespace

nlohmann::json summary_json(const Summary& s) {
  return {{"mean", s.mean}, {"sd", s.sd}, {"q025", s.q025}, {"q50", s.q50}, {"q975", s.q975}};
}

nlohmann::json posterior_json(const PosteriorSummary& summary, const Timings& timings,
                              const nlohmann::json& config_echo) {
  nlohmann::json j;
  j["fixed_effects"] = nlohmann::json::object();
  j["hyperparameters"] = nlohmann::json::object();
  j["accuracy"] = nlohmann::json::object();
  for (const auto& m : summary.marginals) {
    if (m.name == "se" || m.name == "sp")
      j["accuracy"]["mean_" + m.name] = summary_json(m.summary);
    else if (m.name.starts_with("var_") || m.name == "rho")
      j["hyperparameters"][m.name] = summary_json(m.summary);
    else if (is_fixed_effect(m.name))
      j["fixed_effects"][m.name] = summary_json(m.summary);
  }
  if (summary.fixed_rho) j["hyperparameters"]["rho"] = {{"fixed", *summary.fixed_rho}};
  if (std::isfinite(summary.marginal_log_likelihood))
    j["mlik"] = summary.marginal_log_likelihood;
  else
    j["mlik"] = nullptr;
  j["mu_nu_correlation"] = summary.mu_nu_correlation;
  j["timings"] = {{"grid_seconds", timings.grid},
                  {"marginals_seconds", timings.marginals},
                  {"mcmc_seconds", timings.mcmc},
                  {"total_seconds", timings.total}};
  j["config_echo"] = config_echo;
  j["warnings"] = summary.warnings;
  return j;
}

void write_marginals_csv(std::ostream& out, const PosteriorSummary& summary, const std::string& engine) {
  out << "engine,parameter,x,density\n";
  for (const auto& m : summary.marginals)
    for (std::size_t i = 0; i < m.x.size(); ++i)
      out << engine << ',' << m.name << ',' << fmt(m.x[i]) << ',' << fmt(m.density[i]) << '\n';
}

std::vector<ComparisonRow> compare_engines(const PosteriorSummary& laplace, const PosteriorSummary& mcmc) {
  std::vector<ComparisonRow> rows;
  for (const auto& m : laplace.marginals) {
    if (!mcmc.has(m.name)) continue;
    ComparisonRow r;
    r.parameter = m.name;
    r.laplace = m.summary;
    r.mcmc = mcmc[m.name];
    r.mean_delta_sd = (r.laplace.mean - r.mcmc.mean) / r.mcmc.sd;
    r.sd_ratio_delta = r.laplace.sd / r.mcmc.sd - 1.0;
    rows.push_back(r);
  }
  return rows;
}

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows) {
  out << "parameter,laplace_mean,mcmc_mean,laplace_sd,mcmc_sd,mean_delta_sd,sd_ratio_delta\n";
  for (const auto& r : rows)
    out << r.parameter << ',' << fmt(r.laplace.mean) << ',' << fmt(r.mcmc.mean) << ',' << fmt(r.laplace.sd) << ','
        << fmt(r.mcmc.sd) << ',' << fmt(r.mean_delta_sd) << ',' << fmt(r.sd_ratio_delta) << '\n';
}

PcPriorCheck check_pc_prior(const CorrelationPCPrior& prior) {
  PcPriorCheck c;
  c.lambda1 = prior.lambda1();
  c.lambda2 = prior.lambda2();
  c.omega1 = prior.omega1();
  c.continuity_gap = prior.omega1() * prior.lambda1() - prior.omega2() * prior.lambda2();
  auto dens = [&](double t) { return std::exp(prior.log_density_z(t)); };
  auto mass = [&](double lo, double hi) {
    if (lo >= hi) return 0.0;
    return numerics::integrate(dens, lo, hi, 1e-10);
  };
  const double inf = std::numeric_limits<double>::infinity();
  const double t0 = fisher_z(prior.rho0());
  c.mass_below_rho0 = mass(-inf, t0);
  c.total_mass = c.mass_below_rho0 + mass(t0, inf);
  const auto& in = prior.inputs();
  if (in.u_min) c.mass_below_umin = mass(-inf, fisher_z(*in.u_min));
  if (in.u_max) c.mass_above_umax = mass(fisher_z(*in.u_max), inf);
  return c;
}

std::string format_summary_table(const PosteriorSummary& summary) {
  std::string out;
  char line[160];
  auto header = [&](const char* title) {
    out += title;
    std::snprintf(line, sizeof line, "\n%-10s %9s %9s %9s %9s %9s\n", "", "mean", "sd", "0.025q", "0.5q", "0.975q");
    out += line;
  };
  auto row = [&](const Marginal& m) {
    const Summary& s = m.summary;
    std::snprintf(line, sizeof line, "%-10s %9.4f %9.4f %9.4f %9.4f %9.4f\n", m.name.c_str(), s.mean, s.sd, s.q025,
                  s.q50, s.q975);
    out += line;
  };
  header("Fixed effects:");
  for (const auto& m : summary.marginals)
    if (is_fixed_effect(m.name)) row(m);
  header("\nHyperparameters:");
  for (const auto& m : summary.marginals)
    if (m.name.starts_with("var_") || m.name == "rho") row(m);
  if (summary.fixed_rho) {
    std::snprintf(line, sizeof line, "%-10s fixed at %.4f\n", "rho", *summary.fixed_rho);
    out += line;
  }
  header("\nAccuracy:");
  for (const auto& m : summary.marginals)
    if (m.name == "se" || m.name == "sp") row(m);
  std::snprintf(line, sizeof line, "\nCorrelation between mu and nu: %.4f\n", summary.mu_nu_correlation);
  out += line;
  if (std::isfinite(summary.marginal_log_likelihood)) {
    std::snprintf(line, sizeof line, "Marginal log-likelihood: %.4f\n", summary.marginal_log_likelihood);
    out += line;
  }
  for (const auto& w : summary.warnings) out += "warning: " + w + "\n";
  return out;
}

}  // namespace metadiag
