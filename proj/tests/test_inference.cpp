#include <doctest.h>

#include <algorithm>
#include <limits>

#include "metadiag/marginals.hpp"
#include "metadiag/numerics.hpp"
#include "oracles.hpp"

using namespace metadiag;

namespace {

const LaplaceFit& telomerase_fit() {
  static const LaplaceFit fit = fit_laplace(telomerase_dataset(), PriorBundle{});
  return fit;
}

Dataset reversed(const Dataset& d) {
  auto s = d.studies();
  std::reverse(s.begin(), s.end());
  return Dataset(d.name(), s);
}

}  // namespace

TEST_CASE("summaries of a tabulated normal") {
  std::vector<double> x, d;
  for (int i = 0; i <= 2000; ++i) {
    const double v = -8.0 + 16.0 * i / 2000;
    x.push_back(2.0 + 0.5 * v);
    d.push_back(std::exp(-0.5 * v * v));  // unnormalized on purpose
  }
  const Summary s = summarize(x, d);
  CHECK(s.mean == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(s.sd == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(s.q50 == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(s.q975 == doctest::Approx(2.0 + 0.5 * 1.959964).epsilon(1e-4));
  CHECK(s.q025 == doctest::Approx(2.0 - 0.5 * 1.959964).epsilon(1e-4));
  CHECK_THROWS(summarize(std::span(x).first(10), std::span(d).first(10)));
}

TEST_CASE("grid weights and layout") {
  const auto& g = telomerase_fit().grid;
  CHECK(g.points.size() >= 7);
  double total = 0.0, top = -std::numeric_limits<double>::infinity();
  for (const auto& p : g.points) {
    total += p.weight;
    top = std::max(top, p.log_posterior);
    CHECK((p.theta - g.theta_at(p.z)).norm() < 1e-12);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  for (const auto& p : g.points) CHECK(p.log_posterior >= top - std::log(1000.0) - 1e-12);
  CHECK(g.warnings.empty());
  for (int k = 0; k < 3; ++k) {
    CHECK(g.scale_pos(k) > 0.0);
    CHECK(g.scale_neg(k) > 0.0);
  }
}

TEST_CASE("hyperposterior mode is a stationary point") {
  const auto& g = telomerase_fit().grid;
  const LatentModel m(telomerase_dataset());
  const PriorBundle priors;
  const double f0 = log_hyperposterior(m, priors, g.mode_theta);
  for (int k = 0; k < 3; ++k) {
    Eigen::VectorXd tp = g.mode_theta, tm = g.mode_theta;
    tp(k) += 1e-3;
    tm(k) -= 1e-3;
    const double slope = (log_hyperposterior(m, priors, tp) - log_hyperposterior(m, priors, tm)) / 2e-3;
    CHECK(std::abs(slope) < 1e-2);
    CHECK(log_hyperposterior(m, priors, tp) <= f0 + 1e-8);
  }
}

TEST_CASE("marginals integrate to one and cover the summaries") {
  const auto& s = telomerase_fit().summary;
  for (const char* name : {"mu", "nu", "se", "sp", "var_phi", "var_psi", "rho"}) {
    CAPTURE(name);
    REQUIRE(s.has(name));
    const Marginal& m = s.at(name);
    CHECK(numerics::trapezoid(m.x, m.density) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(m.summary.q025 < m.summary.q50);
    CHECK(m.summary.q50 < m.summary.q975);
    CHECK(m.summary.sd > 0.0);
  }
  CHECK(s["se"].q50 == doctest::Approx(1.0 / (1.0 + std::exp(-s["mu"].q50))).epsilon(1e-3));
  CHECK(s["rho"].q975 < 1.0);
  CHECK(s["rho"].q025 > -1.0);
  CHECK(s.mu_nu_correlation < 0.0);
  CHECK_THROWS_AS(s.at("alpha[0]"), std::out_of_range);
}

TEST_CASE("Gaussian and full-Laplace strategies agree closely") {
  InferenceConfig c;
  c.latent = LatentStrategy::gaussian;
  const auto gauss = posterior_marginals(telomerase_fit().grid, LatentModel(telomerase_dataset()), PriorBundle{}, c);
  const auto& full = telomerase_fit().summary;
  // The specificity arm has almost no false positives, so its conditional is
  // skewed and the Gaussian strategy drifts further there.
  CHECK(std::abs(gauss["mu"].mean - full["mu"].mean) < 0.1 * full["mu"].sd);
  CHECK(std::abs(gauss["nu"].mean - full["nu"].mean) < 0.3 * full["nu"].sd);
  CHECK(std::abs(gauss["nu"].mean - full["nu"].mean) > 0.0);
  CHECK(gauss["var_psi"].mean == full["var_psi"].mean);
}

TEST_CASE("study order does not change the fit") {
  const auto& a = telomerase_fit();
  const LaplaceFit b = fit_laplace(reversed(telomerase_dataset()), PriorBundle{});
  CHECK(b.summary.marginal_log_likelihood == doctest::Approx(a.summary.marginal_log_likelihood).epsilon(1e-8));
  for (const char* name : {"mu", "nu", "var_phi", "var_psi", "rho"})
    CHECK(b.summary[name].mean == doctest::Approx(a.summary[name].mean).epsilon(1e-6));
}

TEST_CASE("exchanging arms mirrors the posterior") {
  PriorBundle priors;
  priors.cor_prior = ComparisonPrior::normal_on_z(0.0, 5.0);
  const auto a = fit_laplace(telomerase_dataset(), priors).summary;
  const auto b = fit_laplace(swap_arms(telomerase_dataset()), priors).summary;
  CHECK(b["mu"].mean == doctest::Approx(a["nu"].mean).epsilon(2e-3));
  CHECK(b["nu"].mean == doctest::Approx(a["mu"].mean).epsilon(2e-3));
  CHECK(b["se"].mean == doctest::Approx(a["sp"].mean).epsilon(2e-3));
  CHECK(b["var_phi"].mean == doctest::Approx(a["var_psi"].mean).epsilon(1e-2));
  CHECK(b["rho"].mean == doctest::Approx(a["rho"].mean).epsilon(1e-2));
  CHECK(b.marginal_log_likelihood == doctest::Approx(a.marginal_log_likelihood).epsilon(1e-4));
}

TEST_CASE("fixed correlation drops the third hyperparameter") {
  PriorBundle priors;
  priors.cor_prior = FixedCorrelation{-0.2};
  const auto fit = fit_laplace(telomerase_dataset(), priors);
  CHECK(fit.grid.space.dim() == 2);
  CHECK(!fit.summary.has("rho"));
  REQUIRE(fit.summary.fixed_rho.has_value());
  CHECK(*fit.summary.fixed_rho == -0.2);
  for (const auto& p : fit.grid.points) CHECK(p.hyper.rho == -0.2);
}

TEST_CASE("conjugate check of the grid integration") {
  // Gaussian observations: the Laplace evidence is exact, so the grid
  // marginal likelihood must match brute-force quadrature of the 3-D integral.
  const LatentModel m = LatentModel::gaussian({1.0, 0.2, 1.6, 0.8, 1.1, 0.5}, {0.3, 0.3, 0.3, 0.3, 0.3, 0.3},
                                              {2.0, 1.5, 2.8, 1.2, 2.2, 1.9}, {0.4, 0.4, 0.4, 0.4, 0.4, 0.4});
  PriorBundle priors;
  GridConfig gc;
  gc.step = 0.5;
  const HyperGrid g = explore_hyperposterior(m, priors, gc);
  // Product Simpson rule over a box around the mode on the internal scale.
  const int n = 24;
  Eigen::Vector3d lo, hi;
  for (int k = 0; k < 3; ++k) {
    double a = g.mode_theta(k), b = g.mode_theta(k);
    for (const auto& p : g.points) a = std::min(a, p.theta(k)), b = std::max(b, p.theta(k));
    lo(k) = a - 0.5;
    hi(k) = b + 0.5;
  }
  const double top = log_hyperposterior(m, priors, g.mode_theta);
  auto w = [&](int i) { return i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0); };
  double sum = 0.0;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j)
      for (int k = 0; k <= n; ++k) {
        const Eigen::Vector3d t(lo(0) + (hi(0) - lo(0)) * i / n, lo(1) + (hi(1) - lo(1)) * j / n,
                                lo(2) + (hi(2) - lo(2)) * k / n);
        const double v = log_hyperposterior(m, priors, t);
        if (std::isfinite(v)) sum += w(i) * w(j) * w(k) * std::exp(v - top);
      }
  const double cell = (hi - lo).prod() / std::pow(3.0 * n, 3);
  const double brute = top + std::log(sum * cell);
  CHECK(g.log_marginal_likelihood == doctest::Approx(brute).epsilon(0.02 / std::abs(brute)));
}
