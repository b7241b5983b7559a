#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace metadiag::cli;
  CLI::App app{"Bayesian bivariate meta-analysis of diagnostic test accuracy"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--data", cfg.data, "study CSV with columns study,TP,FP,FN,TN (default: telomerase)");
    sub->add_option("--prior-var", cfg.prior_var, "variance prior for logit Se, e.g. pc-var(u=3, a=0.05)");
    sub->add_option("--prior-var2", cfg.prior_var2, "variance prior for logit Sp (default: --prior-var)");
    sub->add_option("--prior-cor", cfg.prior_cor, "correlation prior, e.g. pc1 or normal-z(mean=0, var=5)");
    sub->add_option("--seed", cfg.seed, "random seed");
    sub->add_option("--out", cfg.out, "output directory");
  };

  auto* fit = app.add_subcommand("fit", "fit a dataset and write summary.json and marginals.csv");
  add_common(fit);
  fit->add_option("--engine", cfg.engine, "laplace, mcmc or both")
      ->check(CLI::IsMember({"laplace", "mcmc", "both"}));
  fit->add_option("--mcmc-iters", cfg.mcmc_iterations, "MCMC iterations including burn-in")
      ->check(CLI::Range(std::size_t{1000}, std::size_t{100000000}));

  auto* priors = app.add_subcommand("priors", "tabulate and plot prior densities");
  priors->add_option("--prior-cor", cfg.prior_cor_list, "correlation prior (repeatable)");
  priors->add_option("--prior-var", cfg.prior_var_list, "variance prior (repeatable)");
  priors->add_option("--out", cfg.out, "output directory");

  auto* simulate = app.add_subcommand("simulate", "run simulation scenarios");
  simulate->add_option("--scenarios", cfg.scenarios, "scenario ids, e.g. 1-9,12");
  simulate->add_option("--priors", cfg.priors, "comma list of correlation priors, optionally var+cor");
  simulate->add_option("--prior-var", cfg.prior_var, "variance prior for entries without one");
  simulate->add_option("--replicates", cfg.replicates, "replicates per scenario")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1000000}));
  simulate->add_option("--engine", cfg.engine, "laplace or mcmc")->check(CLI::IsMember({"laplace", "mcmc"}));
  simulate->add_option("--mcmc-iters", cfg.mcmc_iterations, "MCMC iterations per replicate");
  simulate->add_option("--seed", cfg.seed, "base seed");
  simulate->add_option("--threads", cfg.threads, "worker threads (0: all cores)");
  simulate->add_option("--out", cfg.out, "output directory");

  auto* sroc = app.add_subcommand("sroc", "SROC curve with credible and prediction regions");
  add_common(sroc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (fit->parsed()) return cmd_fit(cfg);
  if (priors->parsed()) return cmd_priors(cfg);
  if (simulate->parsed()) {
    if (simulate->count("--mcmc-iters") == 0) cfg.mcmc_iterations = 20000;
    return cmd_simulate(cfg);
  }
  return cmd_sroc(cfg);
}
