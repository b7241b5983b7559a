#include <doctest.h>

#include <random>

#include "metadiag/mcmc.hpp"
#include "oracles.hpp"

using namespace metadiag;

TEST_CASE("same seed, same chain") {
  const McmcConfig c{6000, 1000, 5, 99};
  const auto a = mcmc_oracle(telomerase_dataset(), PriorBundle{}, c);
  const auto b = mcmc_oracle(telomerase_dataset(), PriorBundle{}, c);
  CHECK(a.samples.rows() == 1000);
  CHECK(a.samples == b.samples);
  const auto other = mcmc_oracle(telomerase_dataset(), PriorBundle{}, McmcConfig{6000, 1000, 5, 100});
  CHECK(other.samples != a.samples);
}

TEST_CASE("prior-only chains recover the hyperpriors") {
  LatentModel m(telomerase_dataset());
  m.set_likelihood_enabled(false);
  const auto r = mcmc_oracle(m, PriorBundle{}, McmcConfig{200000, 20000, 5, 1});
  const auto var_phi = r.samples.col(r.column("var_phi"));
  const auto rho = r.samples.col(r.column("rho"));
  double sd_above_u = 0.0, below_base = 0.0, below_umin = 0.0;
  for (Eigen::Index i = 0; i < r.samples.rows(); ++i) {
    sd_above_u += var_phi(i) > 9.0;
    below_base += rho(i) <= -0.2;
    below_umin += rho(i) <= -0.95;
  }
  const double n = static_cast<double>(r.samples.rows());
  CHECK(sd_above_u / n == doctest::Approx(0.05).epsilon(0.3));
  CHECK(below_base / n == doctest::Approx(0.4).epsilon(0.08));
  CHECK(below_umin / n == doctest::Approx(0.05).epsilon(0.3));
}

TEST_CASE("acceptance rates and effective sizes on telomerase") {
  const auto r = mcmc_oracle(telomerase_dataset(), PriorBundle{}, McmcConfig{60000, 10000, 10, 5});
  for (double a : r.acceptance) {
    CHECK(a > 0.1);
    CHECK(a < 0.7);
  }
  CHECK(r.summary.has("se"));
  CHECK(std::isnan(r.summary.marginal_log_likelihood));
  CHECK(r.summary["se"].mean == doctest::Approx(0.766).epsilon(0.03));
}

TEST_CASE("effective sample size") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z;
  const int n = 20000;
  Eigen::VectorXd iid(n), ar(n);
  double prev = 0.0;
  for (int i = 0; i < n; ++i) {
    iid(i) = z(rng);
    prev = 0.9 * prev + z(rng);
    ar(i) = prev;
  }
  CHECK(effective_sample_size(iid) == doctest::Approx(n).epsilon(0.15));
  // AR(1): n (1 - phi) / (1 + phi)
  CHECK(effective_sample_size(ar) == doctest::Approx(n * 0.1 / 1.9).epsilon(0.25));
}

TEST_CASE("sample marginal uses type-7 quantiles") {
  std::mt19937_64 rng(8);
  std::gamma_distribution<double> g(2.0, 1.0);
  std::vector<double> v(5001);
  for (auto& x : v) x = g(rng);
  const Eigen::Map<const Eigen::VectorXd> draws(v.data(), static_cast<Eigen::Index>(v.size()));
  const Marginal m = sample_marginal("x", draws);
  CHECK(m.summary.q025 == doctest::Approx(oracle::quantile(v, 0.025)).epsilon(1e-12));
  CHECK(m.summary.q50 == doctest::Approx(oracle::quantile(v, 0.5)).epsilon(1e-12));
  CHECK(m.summary.q975 == doctest::Approx(oracle::quantile(v, 0.975)).epsilon(1e-12));
  CHECK(m.summary.mean == doctest::Approx(draws.mean()).epsilon(1e-12));
  CHECK(m.x.size() == 201);
}
