#include <doctest.h>

#include <random>

#include "metadiag/laplace.hpp"
#include "metadiag/latent_model.hpp"
#include "oracles.hpp"

using namespace metadiag;

namespace {

Eigen::MatrixXd fd_hessian(const LatentModel& m, const Eigen::VectorXd& x, const Hyperparameters& h, double tau) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd out(n, n);
  const double step = 1e-5;
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += step;
    xm(j) -= step;
    out.col(j) = -(m.gradient(xp, h, tau) - m.gradient(xm, h, tau)) / (2 * step);
  }
  return out;
}

}  // namespace

TEST_CASE("covariance assembly") {
  const Eigen::Matrix2d s = assemble_covariance({0.237, 3.491, -0.791});
  CHECK(s(0, 0) == 0.237);
  CHECK(s(1, 1) == 3.491);
  CHECK(s(0, 1) == doctest::Approx(-0.7195).epsilon(1e-4));
  CHECK(s(1, 0) == s(0, 1));
}

TEST_CASE("hyperparameter space round trip") {
  const HyperSpace free(pc1_prior());
  const Hyperparameters h{0.3, 2.5, -0.6};
  const Eigen::VectorXd t = free.to_internal(h);
  CHECK(t(0) == doctest::Approx(std::log(0.3)));
  CHECK(t(2) == doctest::Approx(fisher_z(-0.6)));
  CHECK(free.from_internal(t).rho == doctest::Approx(-0.6));
  const HyperSpace pinned(CorrelationPrior(FixedCorrelation{0.25}));
  CHECK(pinned.dim() == 2);
  CHECK(pinned.from_internal(pinned.to_internal(h)).rho == 0.25);
}

TEST_CASE("log likelihood matches the binomial formula") {
  const Dataset d = telomerase_dataset();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  LatentField f = LatentField::zeros(LatentModel(d).layout());
  f.mu = 1.1;
  f.nu = 2.0;
  for (Eigen::Index i = 0; i < f.phi.size(); ++i) f.phi(i) = 0.5 * z(rng), f.psi(i) = z(rng);
  double expected = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& s = d[i];
    expected += oracle::log_binomial(s.tp, s.diseased(), f.mu + f.phi(i));
    expected += oracle::log_binomial(s.tn, s.non_diseased(), f.nu + f.psi(i));
  }
  CHECK(log_likelihood(d, f) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(LatentModel(d).log_likelihood(f.to_vector()) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("gradient and Hessian agree with finite differences at 20 random points") {
  std::vector<StudyRecord> studies = telomerase_dataset().studies();
  for (std::size_t i = 0; i < studies.size(); ++i) {
    studies[i].covariates_se = {0.1 * double(i) - 0.4};
    studies[i].covariates_sp = {std::cos(double(i))};
  }
  const Dataset d("with covariates", studies);
  const LatentModel m(d);
  std::mt19937_64 rng(20);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(-0.95, 0.95);
  double worst_grad = 0.0, worst_hess = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Hyperparameters h{std::exp(z(rng)), std::exp(z(rng)), u(rng)};
    Eigen::VectorXd x(m.layout().dim());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = z(rng);
    const double tau = 100.0;
    const Eigen::VectorXd g = m.gradient(x, h, tau);
    Eigen::VectorXd fd(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double step = 1e-6 * std::max(1.0, std::abs(x(j)));
      Eigen::VectorXd xp = x, xm = x;
      xp(j) += step;
      xm(j) -= step;
      fd(j) = (m.log_conditional(xp, h, tau) - m.log_conditional(xm, h, tau)) / (2 * step);
    }
    worst_grad = std::max(worst_grad, (g - fd).norm() / std::max(1.0, fd.norm()));
    const Eigen::MatrixXd hess = m.negative_hessian(x, h, tau).to_dense();
    const Eigen::MatrixXd fdh = fd_hessian(m, x, h, tau);
    worst_hess = std::max(worst_hess, (hess - fdh).norm() / std::max(1.0, fdh.norm()));
  }
  CHECK(worst_grad < 1e-5);
  CHECK(worst_hess < 1e-3);
}

TEST_CASE("arrowhead Cholesky matches dense linear algebra") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z;
  ArrowheadMatrix a(3, 4);
  a.corner = Eigen::Matrix3d::Identity() * 6.0;
  for (std::size_t i = 0; i < 4; ++i) {
    a.border[i] = Eigen::Matrix<double, Eigen::Dynamic, 2>::Zero(3, 2);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 2; ++c) a.border[i](r, c) = 0.4 * z(rng);
    a.blocks[i] << 3.0, 0.5 * z(rng), 0.0, 3.0;
    a.blocks[i](1, 0) = a.blocks[i](0, 1);
  }
  const Eigen::MatrixXd dense = a.to_dense();
  const ArrowheadCholesky chol(a);
  REQUIRE(chol.ok());
  Eigen::LLT<Eigen::MatrixXd> llt(dense);
  const Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(dense.rows(), dense.cols()));
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < dense.rows(); ++i) logdet += 2 * std::log(llt.matrixL()(i, i));
  CHECK(chol.log_det() == doctest::Approx(logdet).epsilon(1e-12));
  Eigen::VectorXd rhs(dense.rows());
  for (Eigen::Index i = 0; i < rhs.size(); ++i) rhs(i) = z(rng);
  CHECK((chol.solve(rhs) - llt.solve(rhs)).norm() < 1e-12);
  CHECK((chol.corner_inverse() - inv.topLeftCorner(3, 3)).norm() < 1e-12);
  CHECK((chol.block_inverse(2) - inv.block(3 + 4, 3 + 4, 2, 2)).norm() < 1e-12);
  CHECK((a.multiply(rhs) - dense * rhs).norm() < 1e-12);
}

TEST_CASE("Laplace evidence is exact for Gaussian observations") {
  const std::vector<double> y_se = {1.2, 0.4, 2.1, 0.9, 1.5}, v_se = {0.3, 0.5, 0.2, 0.4, 0.6};
  const std::vector<double> y_sp = {2.2, 1.9, 3.0, 1.1, 2.6}, v_sp = {0.5, 0.3, 0.7, 0.2, 0.4};
  const LatentModel m = LatentModel::gaussian(y_se, v_se, y_sp, v_sp);
  for (const Hyperparameters h : {Hyperparameters{0.4, 1.3, -0.6}, Hyperparameters{2.0, 0.1, 0.8},
                                  Hyperparameters{0.05, 0.05, 0.0}}) {
    const double tau = 1000.0;
    const GaussianApprox a = laplace_fit(m, h, tau);
    const double exact = oracle::gaussian_evidence(y_se, v_se, y_sp, v_sp, assemble_covariance(h), tau);
    CHECK(std::abs(a.log_unnormalized_evidence - exact) < 1e-8);
  }
}

TEST_CASE("Newton mode has a vanishing gradient on binomial data") {
  const LatentModel m(telomerase_dataset());
  for (const Hyperparameters h : {Hyperparameters{0.24, 3.5, -0.8}, Hyperparameters{1.0, 1.0, 0.9},
                                  Hyperparameters{0.01, 10.0, -0.999}}) {
    const GaussianApprox a = laplace_fit(m, h, 1000.0);
    CHECK(a.max_gradient < 1e-6);
    CHECK(std::isfinite(a.log_unnormalized_evidence));
    CHECK(a.fixed_covariance.rows() == 2);
  }
}

TEST_CASE("pinned log density is exactly Gaussian for Gaussian observations") {
  const LatentModel m = LatentModel::gaussian({0.3, 1.0, 0.7}, {0.2, 0.2, 0.3}, {1.5, 2.5, 2.0}, {0.4, 0.3, 0.2});
  const Hyperparameters h{0.5, 0.8, 0.3};
  const GaussianApprox a = laplace_fit(m, h, 1000.0);
  const double mean = a.mode(0), var = a.fixed_covariance(0, 0);
  const double at_mode = pinned_log_density(m, h, 1000.0, 0, mean, a.mode);
  for (double dz : {-2.0, -0.5, 1.0, 3.0}) {
    const double v = mean + dz * std::sqrt(var);
    CHECK(pinned_log_density(m, h, 1000.0, 0, v, a.mode) - at_mode == doctest::Approx(-0.5 * dz * dz).epsilon(1e-8));
  }
}
