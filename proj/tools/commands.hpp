#ifndef METADIAG_TOOLS_COMMANDS_HPP
#define METADIAG_TOOLS_COMMANDS_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace metadiag::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInference = 3;

struct RunConfig {
  std::string data;  // CSV path; empty selects the built-in telomerase studies
  std::string prior_var = "pc";
  std::string prior_var2;  // empty: same as prior_var
  std::string prior_cor = "pc1";
  std::string engine = "laplace";  // laplace | mcmc | both
  std::uint64_t seed = 20150901;
  std::string out = "out";
  std::string scenarios = "1-9";
  std::string priors = "pc0,paul";  // simulate: comma list of [var+]cor entries
  std::size_t replicates = 100;
  std::size_t mcmc_iterations = 200000;
  unsigned threads = 0;
  std::vector<std::string> prior_cor_list;  // priors command
  std::vector<std::string> prior_var_list;
};

int cmd_fit(const RunConfig& config);
int cmd_priors(const RunConfig& config);
int cmd_simulate(const RunConfig& config);
int cmd_sroc(const RunConfig& config);

/// Splits on commas outside parentheses.
std::vector<std::string> split_top_level(const std::string& text);

}  // namespace metadiag::cli

#endif  // METADIAG_TOOLS_COMMANDS_HPP
