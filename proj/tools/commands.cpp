#include "commands.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include "metadiag/dataset.hpp"
#include "metadiag/marginals.hpp"
#include "metadiag/mcmc.hpp"
#include "metadiag/numerics.hpp"
#include "metadiag/prior_spec.hpp"
#include "metadiag/report.hpp"
#include "metadiag/simulation.hpp"
#include "metadiag/sroc.hpp"
#include "metadiag/svg.hpp"

namespace metadiag::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const std::vector<std::string> kColours = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

// Maps exceptions to exit codes: bad input 2, failed computation 3.
int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const PriorSpecError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InferenceError& e) {
    std::cerr << "inference failed: " << e.what() << '\n';
    return kExitInference;
  } catch (const std::exception& e) {
    std::cerr << "inference failed: " << e.what() << '\n';
    return kExitInference;
  }
}

Dataset load_data(const RunConfig& cfg) {
  if (cfg.data.empty() || cfg.data == "telomerase") return telomerase_dataset();
  if (!fs::exists(cfg.data)) throw UsageError("data file not found: " + cfg.data);
  CsvOptions opt;
  opt.name = fs::path(cfg.data).stem().string();
  return read_dataset_csv(cfg.data, opt);
}

PriorBundle build_priors(const RunConfig& cfg) {
  PriorBundle p;
  p.var_phi_prior = parse_variance_prior(cfg.prior_var);
  p.var_psi_prior = parse_variance_prior(cfg.prior_var2.empty() ? cfg.prior_var : cfg.prior_var2);
  p.cor_prior = parse_correlation_prior(cfg.prior_cor);
  return p;
}

fs::path prepare_out(const RunConfig& cfg) {
  const fs::path dir(cfg.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw UsageError("cannot create output directory " + cfg.out);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

template <class Writer>
void write_stream(const fs::path& path, Writer&& writer) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  writer(f);
}

// Wall-clock data lives here so that every other output is reproducible.
void write_metadata(const fs::path& dir, const std::string& command, double seconds) {
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  json j = {{"command", command}, {"finished_utc", stamp}, {"wall_seconds", seconds}};
  write_file(dir / "metadata.json", j.dump(2) + "\n");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string file_label(const std::string& text) {
  std::string s;
  for (char c : text) s += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' ? c : '_';
  return s;
}

json config_echo(const RunConfig& cfg, const Dataset& data, const PriorBundle& p) {
  return {{"data", cfg.data.empty() ? std::string("telomerase") : cfg.data},
          {"n_studies", data.size()},
          {"prior_var", describe(p.var_phi_prior)},
          {"prior_var2", describe(p.var_psi_prior)},
          {"prior_cor", describe(p.cor_prior)},
          {"intercept_prior_variance", p.intercept_prior_variance},
          {"engine", cfg.engine},
          {"seed", cfg.seed},
          {"mcmc_iterations", cfg.mcmc_iterations}};
}

McmcConfig mcmc_config(const RunConfig& cfg) {
  McmcConfig mc;
  mc.iterations = cfg.mcmc_iterations;
  mc.burn_in = cfg.mcmc_iterations / 10;
  mc.thin = std::clamp<std::size_t>((mc.iterations - mc.burn_in) / 2000, 1, 10);
  mc.seed = cfg.seed;
  return mc;
}

}  // namespace

std::vector<std::string> split_top_level(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  std::erase_if(out, [](const std::string& s) { return s.empty(); });
  return out;
}

// ---------------------------------------------------------------------------

int cmd_fit(const RunConfig& cfg) {
  return guarded([&] {
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset data = load_data(cfg);
    const PriorBundle priors = build_priors(cfg);
    const fs::path dir = prepare_out(cfg);
    const json echo = config_echo(cfg, data, priors);
    const bool run_laplace = cfg.engine != "mcmc", run_mcmc = cfg.engine != "laplace";

    std::optional<LaplaceFit> lap;
    std::optional<McmcResult> mc;
    Timings lap_t, mc_t;
    if (run_laplace) {
      lap = fit_laplace(data, priors);
      lap_t.grid = lap->seconds_grid;
      lap_t.marginals = lap->seconds_marginals;
      lap_t.total = lap_t.grid + lap_t.marginals;
    }
    if (run_mcmc) {
      const auto tm = std::chrono::steady_clock::now();
      mc = mcmc_oracle(data, priors, mcmc_config(cfg));
      mc_t.mcmc = mc_t.total = seconds_since(tm);
    }

    const PosteriorSummary& primary = lap ? lap->summary : mc->summary;
    write_file(dir / "summary.json", posterior_json(primary, lap ? lap_t : mc_t, echo).dump(2) + "\n");
    if (lap && mc) write_file(dir / "summary_mcmc.json", posterior_json(mc->summary, mc_t, echo).dump(2) + "\n");
    write_stream(dir / "marginals.csv", [&](std::ostream& os) {
      if (lap) write_marginals_csv(os, lap->summary, "laplace");
      if (mc) {
        std::ostringstream body;
        write_marginals_csv(body, mc->summary, "mcmc");
        const std::string s = body.str();
        os << (lap ? s.substr(s.find('\n') + 1) : s);
      }
    });

    std::cout << format_summary_table(primary);
    if (lap && mc) {
      const auto rows = compare_engines(lap->summary, mc->summary);
      write_stream(dir / "comparison.csv", [&](std::ostream& os) { write_comparison_csv(os, rows); });
      std::cout << "\nLaplace vs MCMC (mean difference in MCMC sd):\n";
      for (const auto& r : rows) {
        char line[128];
        std::snprintf(line, sizeof line, "  %-10s %+8.4f  (sd ratio %+.3f)\n", r.parameter.c_str(), r.mean_delta_sd,
                      r.sd_ratio_delta);
        std::cout << line;
      }
    }
    if (mc)
      for (const auto& w : mc->warnings) std::cerr << "mcmc warning: " << w << '\n';
    write_metadata(dir, "fit", seconds_since(t0));
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------

namespace {

struct Curve {
  std::string label;
  std::vector<double> x, y;
};

SvgPlot curve_panel(const std::vector<Curve>& curves, const std::string& title, const std::string& xlabel,
                    double x_lo, double x_hi, double y_cap) {
  double y_hi = 0.0;
  for (const auto& c : curves)
    for (std::size_t i = 0; i < c.x.size(); ++i)
      if (c.x[i] >= x_lo && c.x[i] <= x_hi && std::isfinite(c.y[i])) y_hi = std::max(y_hi, c.y[i]);
  y_hi = std::min(y_hi * 1.05, y_cap);
  SvgPlot plot(420, 320, x_lo, x_hi, 0.0, y_hi > 0 ? y_hi : 1.0, title);
  plot.axes(xlabel, "density");
  std::vector<std::pair<std::string, std::string>> legend;
  for (std::size_t k = 0; k < curves.size(); ++k) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < curves[k].x.size(); ++i)
      if (curves[k].x[i] >= x_lo && curves[k].x[i] <= x_hi) {
        x.push_back(curves[k].x[i]);
        y.push_back(std::min(curves[k].y[i], y_hi));
      }
    const std::string& col = kColours[k % kColours.size()];
    plot.polyline(x, y, col, 1.6, k % 2 ? "6,3" : "");
    legend.emplace_back(curves[k].label, col);
  }
  plot.legend(legend);
  return plot;
}

void write_curves_csv(std::ostream& os, const std::string& scale, const std::vector<Curve>& curves) {
  for (const auto& c : curves)
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      char line[64];
      std::snprintf(line, sizeof line, ",%.10g,%.10g\n", c.x[i], c.y[i]);
      os << c.label << ',' << scale << line;
    }
}

}  // namespace

int cmd_priors(const RunConfig& cfg) {
  return guarded([&] {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::string> cor_specs = cfg.prior_cor_list, var_specs = cfg.prior_var_list;
    if (cor_specs.empty() && var_specs.empty()) {
      cor_specs = {"pc0", "paul"};
      var_specs = {"pc", "ig"};
    }
    std::vector<std::pair<std::string, CorrelationPrior>> cors;
    std::vector<std::pair<std::string, VariancePrior>> vars;
    for (const auto& s : cor_specs) cors.emplace_back(s, parse_correlation_prior(s));
    for (const auto& s : var_specs) vars.emplace_back(s, parse_variance_prior(s));
    const fs::path dir = prepare_out(cfg);
    json report = {{"correlation", json::array()}, {"variance", json::array()}};

    if (!cors.empty()) {
      double base = 0.0;
      for (const auto& [label, p] : cors)
        if (const auto* pc = std::get_if<CorrelationPCPrior>(&p)) {
          base = pc->rho0();
          break;
        }
      std::vector<Curve> on_rho, on_z, on_d;
      for (const auto& [label, p] : cors) {
        json entry = {{"spec", label}, {"description", describe(p)}};
        if (is_fixed(p)) {
          entry["note"] = "point mass; no density";
          report["correlation"].push_back(entry);
          continue;
        }
        Curve cr{label, {}, {}}, cz{label, {}, {}}, cd{label, {}, {}};
        for (int i = 0; i <= 800; ++i) {
          const double t = -12.0 + 24.0 * i / 800;
          const CorrelationPoint pt = CorrelationPoint::from_z(t);
          const double dens_z = std::exp(log_density_fisher_z(p, t));
          cz.x.push_back(t);
          cz.y.push_back(dens_z);
          // d rho / d theta = (1 - rho^2) / 2
          const double dens_rho = dens_z / (0.5 * std::exp(pt.log_one_minus_rho2));
          if (std::abs(pt.rho) < 0.999) {
            cr.x.push_back(pt.rho);
            cr.y.push_back(dens_rho);
          }
          const double signed_d = (pt.rho < base ? -1.0 : 1.0) * distance_correlation(pt, base);
          cd.x.push_back(signed_d);
          cd.y.push_back(dens_rho / distance_jacobian(pt, base));
        }
        on_rho.push_back(std::move(cr));
        on_z.push_back(std::move(cz));
        on_d.push_back(std::move(cd));
        if (const auto* pc = std::get_if<CorrelationPCPrior>(&p)) {
          const PcPriorCheck c = check_pc_prior(*pc);
          entry["lambda1"] = c.lambda1;
          entry["lambda2"] = c.lambda2;
          entry["omega1"] = c.omega1;
          entry["quadrature"] = {{"total_mass", c.total_mass},
                                 {"mass_below_rho0", c.mass_below_rho0},
                                 {"continuity_gap", c.continuity_gap}};
          if (c.mass_below_umin) entry["quadrature"]["mass_below_umin"] = *c.mass_below_umin;
          if (c.mass_above_umax) entry["quadrature"]["mass_above_umax"] = *c.mass_above_umax;
          std::printf("%s: lambda1 %.6g lambda2 %.6g omega1 %.6g | mass %.10f P(rho<=rho0) %.10f", label.c_str(),
                      c.lambda1, c.lambda2, c.omega1, c.total_mass, c.mass_below_rho0);
          if (c.mass_below_umin) std::printf(" P(rho<=umin) %.10f", *c.mass_below_umin);
          if (c.mass_above_umax) std::printf(" P(rho>umax) %.10f", *c.mass_above_umax);
          std::printf("\n");
        }
        report["correlation"].push_back(entry);
      }
      write_stream(dir / "priors_correlation.csv", [&](std::ostream& os) {
        os << "prior,scale,x,density\n";
        write_curves_csv(os, "rho", on_rho);
        write_curves_csv(os, "z", on_z);
        write_curves_csv(os, "distance", on_d);
      });
      std::vector<SvgPlot> panels;
      panels.push_back(curve_panel(on_rho, "correlation scale", "rho", -1.0, 1.0, 6.0));
      panels.push_back(curve_panel(on_z, "Fisher z scale", "logit((rho+1)/2)", -8.0, 8.0, 10.0));
      char xl[64];
      std::snprintf(xl, sizeof xl, "signed distance from rho0 = %g", base);
      panels.push_back(curve_panel(on_d, "distance scale", xl, -4.0, 4.0, 10.0));
      write_file(dir / "priors_correlation.svg", svg_panels(panels, 3));
    }

    if (!vars.empty()) {
      std::vector<Curve> on_v, on_sd;
      for (const auto& [label, p] : vars) {
        json entry = {{"spec", label}, {"description", describe(p)}};
        Curve cv{label, {}, {}}, cs{label, {}, {}};
        for (int i = 1; i <= 800; ++i) {
          const double v = 10.0 * i / 800;
          cv.x.push_back(v);
          cv.y.push_back(variance_prior_density(p, v));
          const double sd = 5.0 * i / 800;
          cs.x.push_back(sd);
          cs.y.push_back(variance_prior_density(p, sd * sd) * 2.0 * sd);
        }
        on_v.push_back(std::move(cv));
        on_sd.push_back(std::move(cs));
        if (const auto* pc = std::get_if<VariancePCPrior>(&p)) {
          const double tail = numerics::integrate(
              [&](double v) { return pc->density(v); }, pc->u * pc->u, std::numeric_limits<double>::infinity(), 1e-12);
          entry["lambda"] = pc->lambda;
          entry["quadrature"] = {{"sd_exceeds_u", tail}, {"target", pc->a}};
          std::printf("%s: lambda %.6g | P(sigma>%g) %.12f (target %g)\n", label.c_str(), pc->lambda, pc->u, tail,
                      pc->a);
        }
        report["variance"].push_back(entry);
      }
      write_stream(dir / "priors_variance.csv", [&](std::ostream& os) {
        os << "prior,scale,x,density\n";
        write_curves_csv(os, "variance", on_v);
        write_curves_csv(os, "distance", on_sd);
      });
      std::vector<SvgPlot> panels;
      panels.push_back(curve_panel(on_v, "variance scale", "variance", 0.0, 10.0, 3.0));
      panels.push_back(curve_panel(on_sd, "distance scale", "standard deviation", 0.0, 5.0, 3.0));
      write_file(dir / "priors_variance.svg", svg_panels(panels, 2));
    }
    write_file(dir / "priors_report.json", report.dump(2) + "\n");
    write_metadata(dir, "priors", seconds_since(t0));
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------

namespace {

std::vector<PriorConfig> simulation_priors(const RunConfig& cfg) {
  std::vector<PriorConfig> out;
  for (const auto& entry : split_top_level(cfg.priors)) {
    PriorConfig pc;
    pc.label = entry;
    std::string var = cfg.prior_var, cor = entry;
    int depth = 0;
    for (std::size_t i = 0; i < entry.size(); ++i) {
      if (entry[i] == '(') ++depth;
      if (entry[i] == ')') --depth;
      if (entry[i] == '+' && depth == 0) {
        var = entry.substr(0, i);
        cor = entry.substr(i + 1);
        break;
      }
    }
    pc.priors.var_phi_prior = parse_variance_prior(var);
    pc.priors.var_psi_prior = parse_variance_prior(var);
    pc.priors.cor_prior = parse_correlation_prior(cor);
    out.push_back(std::move(pc));
  }
  if (out.empty()) throw UsageError("no priors given");
  return out;
}

// Errors, bias, MSE and coverage of one parameter against the true
// correlation, grouped by prior.
std::string block_svg(const std::vector<const ScenarioMetrics*>& metrics, const std::vector<Scenario>& scenarios,
                      const std::vector<std::string>& labels, const std::string& parameter,
                      const std::string& block_title) {
  std::vector<double> rhos;
  for (const auto* m : metrics) {
    const double r = scenarios[static_cast<std::size_t>(m->scenario_id - 1)].rho;
    if (std::find(rhos.begin(), rhos.end(), r) == rhos.end()) rhos.push_back(r);
  }
  std::sort(rhos.begin(), rhos.end());
  const double n_groups = static_cast<double>(rhos.size());
  const double width = 0.8 / static_cast<double>(labels.size());
  auto find = [&](double rho, const std::string& label) -> const ParameterMetrics* {
    for (const auto* m : metrics)
      if (m->prior_label == label && scenarios[static_cast<std::size_t>(m->scenario_id - 1)].rho == rho)
        for (const auto& p : m->parameters)
          if (p.parameter == parameter) return &p;
    return nullptr;
  };
  auto slot = [&](std::size_t g, std::size_t k) { return g + 0.1 + width * (static_cast<double>(k) + 0.5); };

  auto range = [&](const std::function<std::vector<double>(const ParameterMetrics&)>& values) {
    double lo = 0.0, hi = 0.0;
    for (double r : rhos)
      for (const auto& l : labels)
        if (const auto* p = find(r, l))
          for (double v : values(*p))
            if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
    if (hi - lo < 1e-12) hi = lo + 1.0;
    const double pad = 0.05 * (hi - lo);
    return std::pair{lo - pad, hi + pad};
  };
  auto label_groups = [&](SvgPlot& plot, double y) {
    for (std::size_t g = 0; g < rhos.size(); ++g) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%g", rhos[g]);
      plot.text(static_cast<double>(g) + 0.5, y, buf, "middle", 9);
    }
  };
  std::vector<std::pair<std::string, std::string>> legend;
  for (std::size_t k = 0; k < labels.size(); ++k) legend.emplace_back(labels[k], kColours[k % kColours.size()]);

  std::vector<SvgPlot> panels;
  {
    auto [lo, hi] = range([](const ParameterMetrics& p) { return p.errors; });
    SvgPlot plot(460, 320, 0.0, n_groups, lo, hi, block_title + ": errors of " + parameter);
    plot.axes("true correlation (groups)", "median - truth", 0);
    plot.hline(0.0, "#888888", "3,3");
    for (std::size_t g = 0; g < rhos.size(); ++g)
      for (std::size_t k = 0; k < labels.size(); ++k)
        if (const auto* p = find(rhos[g], labels[k]); p && !p->errors.empty()) {
          std::vector<double> e = p->errors;
          std::sort(e.begin(), e.end());
          auto q = [&](double prob) {
            const double h = prob * static_cast<double>(e.size() - 1);
            const auto i = static_cast<std::size_t>(h);
            return i + 1 < e.size() ? e[i] + (h - static_cast<double>(i)) * (e[i + 1] - e[i]) : e.back();
          };
          const double x = slot(g, k);
          plot.polyline({x, x}, {q(0.025), q(0.975)}, "black", 1.0);
          plot.rect(x - 0.4 * width, q(0.25), x + 0.4 * width, q(0.75), kColours[k % kColours.size()]);
          plot.polyline({x - 0.4 * width, x + 0.4 * width}, {q(0.5), q(0.5)}, "black", 1.5);
        }
    label_groups(plot, lo + 0.02 * (hi - lo));
    plot.legend(legend);
    panels.push_back(std::move(plot));
  }
  auto bar_panel = [&](const std::string& what, const std::function<double(const ParameterMetrics&)>& value,
                       std::optional<double> reference, std::optional<std::pair<double, double>> fixed_range) {
    auto [lo, hi] = fixed_range ? *fixed_range : range([&](const ParameterMetrics& p) {
      return std::vector<double>{value(p)};
    });
    SvgPlot plot(460, 320, 0.0, n_groups, lo, hi, block_title + ": " + what + " of " + parameter);
    plot.axes("true correlation (groups)", what, 0);
    if (reference) plot.hline(*reference, "#888888", "3,3");
    const double base = std::clamp(0.0, lo, hi);
    for (std::size_t g = 0; g < rhos.size(); ++g)
      for (std::size_t k = 0; k < labels.size(); ++k)
        if (const auto* p = find(rhos[g], labels[k])) {
          const double x = slot(g, k);
          plot.rect(x - 0.45 * width, base, x + 0.45 * width, value(*p), kColours[k % kColours.size()]);
        }
    label_groups(plot, lo + 0.02 * (hi - lo));
    plot.legend(legend);
    panels.push_back(std::move(plot));
  };
  bar_panel("bias", [](const ParameterMetrics& p) { return p.bias; }, 0.0, std::nullopt);
  bar_panel("MSE", [](const ParameterMetrics& p) { return p.mse; }, std::nullopt, std::nullopt);
  bar_panel("coverage", [](const ParameterMetrics& p) { return p.coverage95; }, 0.95, std::pair{0.0, 1.05});
  return svg_panels(panels, 2);
}

}  // namespace

int cmd_simulate(const RunConfig& cfg) {
  return guarded([&] {
    const auto t0 = std::chrono::steady_clock::now();
    const auto ids = parse_scenario_selection(cfg.scenarios);
    const auto priors = simulation_priors(cfg);
    const fs::path dir = prepare_out(cfg);
    const auto scenarios = builtin_scenarios();

    SimulationConfig sim;
    sim.engine = cfg.engine == "mcmc" ? Engine::mcmc : Engine::laplace;
    sim.mcmc.iterations = cfg.mcmc_iterations;
    sim.mcmc.burn_in = cfg.mcmc_iterations / 4;
    sim.threads = cfg.threads;

    std::vector<ScenarioMetrics> all;
    bool exhausted = false;
    for (int id : ids) {
      const Scenario& sc = scenarios[static_cast<std::size_t>(id - 1)];
      const std::uint64_t seed = cfg.seed ^ (static_cast<std::uint64_t>(id) << 20);
      sim.mcmc.seed = seed;
      const auto ts = std::chrono::steady_clock::now();
      auto res = run_scenario(sc, priors, cfg.replicates, seed, sim);
      std::fprintf(stderr, "scenario %d (Se %.2f Sp %.2f I %zu rho %+.2f): %.1f s\n", id, sc.true_se, sc.true_sp,
                   sc.n_studies, sc.rho, seconds_since(ts));
      for (const auto& m : res) {
        if (m.n_failures > 0)
          std::fprintf(stderr, "  %s: %zu of %zu replicates failed\n", m.prior_label.c_str(), m.n_failures,
                       m.n_replicates);
        if (m.n_failures == m.n_replicates) exhausted = true;
        write_stream(dir / ("replicates_s" + std::to_string(id) + "_" + file_label(m.prior_label) + ".csv"),
                     [&](std::ostream& os) { write_replicates_csv(os, m); });
      }
      for (auto& m : res) all.push_back(std::move(m));
    }
    write_stream(dir / "metrics.csv", [&](std::ostream& os) { write_metrics_csv(os, all); });

    // Panels per block of nine scenarios sharing (Se, Sp, I).
    std::map<int, std::vector<const ScenarioMetrics*>> blocks;
    for (const auto& m : all) blocks[(m.scenario_id - 1) / 9].push_back(&m);
    std::vector<std::string> labels;
    for (const auto& p : priors) labels.push_back(p.label);
    for (const auto& [block, ms] : blocks) {
      const Scenario& first = scenarios[static_cast<std::size_t>(block * 9)];
      char title[96];
      std::snprintf(title, sizeof title, "Se %.2f Sp %.2f I=%zu", first.true_se, first.true_sp, first.n_studies);
      for (const char* param : {"rho", "var_phi", "var_psi"}) {
        bool present = false;
        for (const auto* m : ms)
          for (const auto& p : m->parameters) present |= p.parameter == param;
        if (!present) continue;
        write_file(dir / ("block" + std::to_string(block + 1) + "_" + param + ".svg"),
                   block_svg(ms, scenarios, labels, param, title));
      }
    }
    write_metadata(dir, "simulate", seconds_since(t0));
    if (exhausted) {
      std::cerr << "inference failed: every replicate of at least one scenario failed\n";
      return kExitInference;
    }
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------

int cmd_sroc(const RunConfig& cfg) {
  return guarded([&] {
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset data = load_data(cfg);
    const PriorBundle priors = build_priors(cfg);
    const fs::path dir = prepare_out(cfg);
    const LaplaceFit fit = fit_laplace(data, priors);
    SrocConfig sc;
    sc.seed = cfg.seed;
    const SrocGeometry g = sroc_geometry(data, fit.grid, fit.summary, sc);
    write_stream(dir / "sroc.csv", [&](std::ostream& os) { write_sroc_csv(os, g); });
    write_stream(dir / "sroc.svg", [&](std::ostream& os) { write_sroc_svg(os, g, data.name()); });
    const bool summary_in_credible = point_in_polygon(g.credible.roc, g.summary_point);
    const bool credible_in_prediction = polygon_inside(g.credible.roc, g.prediction.roc);
    json j = {{"summary_point", {{"fpr", g.summary_point.x}, {"tpr", g.summary_point.y}}},
              {"curve", {{"slope_logit", g.curve.slope},
                         {"centre_logit_sp", g.curve.centre.x},
                         {"centre_logit_se", g.curve.centre.y}}},
              {"credible_region", {{"draw_mass", g.credible.draw_mass}, {"vertices", g.credible.roc.size()}}},
              {"prediction_region", {{"draw_mass", g.prediction.draw_mass}, {"vertices", g.prediction.roc.size()}}},
              {"nesting", {{"summary_in_credible", summary_in_credible},
                           {"credible_in_prediction", credible_in_prediction}}},
              {"config_echo", config_echo(cfg, data, priors)}};
    write_file(dir / "sroc.json", j.dump(2) + "\n");
    std::printf("summary point (1-Sp, Se) = (%.4f, %.4f); slope %.4f\n", g.summary_point.x, g.summary_point.y,
                g.curve.slope);
    std::printf("credible mass %.4f, prediction mass %.4f, nested %s\n", g.credible.draw_mass, g.prediction.draw_mass,
                summary_in_credible && credible_in_prediction ? "yes" : "no");
    write_metadata(dir, "sroc", seconds_since(t0));
    return kExitOk;
  });
}

}  // namespace metadiag::cli
