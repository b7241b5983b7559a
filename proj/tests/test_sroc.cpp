#include <doctest.h>

#include <random>
#include <sstream>

#include "metadiag/sroc.hpp"

using namespace metadiag;

namespace {

struct TelomeraseSroc {
  LaplaceFit fit = fit_laplace(telomerase_dataset(), PriorBundle{});
  SrocGeometry geometry = sroc_geometry(telomerase_dataset(), fit.grid, fit.summary);
};

const TelomeraseSroc& telomerase() {
  static const TelomeraseSroc t;
  return t;
}

bool in_unit_square(const Polyline& p) {
  for (const auto& v : p)
    if (!(v.x >= 0 && v.x <= 1 && v.y >= 0 && v.y <= 1)) return false;
  return true;
}

}  // namespace

TEST_CASE("polygon helpers") {
  const Polyline square = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  CHECK(point_in_polygon(square, {0.5, 0.5}));
  CHECK(!point_in_polygon(square, {1.5, 0.5}));
  CHECK(std::abs(polygon_area(square)) == doctest::Approx(1.0));
  CHECK(polygon_inside({{0.2, 0.2}, {0.8, 0.2}, {0.5, 0.7}}, square));
  CHECK(!polygon_inside(square, {{0.2, 0.2}, {0.8, 0.2}, {0.5, 0.7}}));
  const Point r = to_roc({0.0, 2.0});
  CHECK(r.x == doctest::Approx(0.5));
  CHECK(r.y == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
}

TEST_CASE("HPD contour of a normal cloud") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  std::vector<Point> pts(20000);
  for (auto& p : pts) {
    const double a = z(rng), b = z(rng);
    p = {1.0 + 2.0 * a, -1.0 + 0.5 * (0.6 * a + 0.8 * b)};
  }
  const ContourRegion c = hpd_contour(pts, 0.95);
  CHECK(c.draw_mass == doctest::Approx(0.95).epsilon(0.01 / 0.95));
  // Ellipse area pi * chi2_2(0.95) * sqrt(det Sigma) = pi * 5.9915 * (2 * 0.5 * 0.8)
  CHECK(std::abs(polygon_area(c.logit)) == doctest::Approx(3.14159265 * 5.99146 * 0.8).epsilon(0.05));
  CHECK(point_in_polygon(c.logit, {1.0, -1.0}));
}

TEST_CASE("telomerase SROC geometry") {
  const auto& g = telomerase().geometry;
  CHECK(in_unit_square(g.curve.roc));
  CHECK(in_unit_square(g.credible.roc));
  CHECK(in_unit_square(g.prediction.roc));
  CHECK(point_in_polygon(g.credible.roc, g.summary_point));
  CHECK(polygon_inside(g.credible.roc, g.prediction.roc));
  CHECK(g.credible.draw_mass == doctest::Approx(0.95).epsilon(0.01 / 0.95));
  CHECK(g.prediction.draw_mass == doctest::Approx(0.95).epsilon(0.01 / 0.95));
  CHECK(g.curve.slope < 0.0);
  CHECK(g.study_points.size() == 10);
  const auto& s = telomerase().fit.summary;
  CHECK(g.curve.centre.x == doctest::Approx(s["nu"].mean).epsilon(1e-12));
  CHECK(g.curve.centre.y == doctest::Approx(s["mu"].mean).epsilon(1e-12));
  // The regression line passes through the centre.
  const auto& c = g.curve.logit;
  for (std::size_t i = 0; i + 1 < c.size(); ++i)
    if (c[i].x <= g.curve.centre.x && c[i + 1].x >= g.curve.centre.x) {
      const double t = (g.curve.centre.x - c[i].x) / (c[i + 1].x - c[i].x);
      CHECK(std::abs(c[i].y + t * (c[i + 1].y - c[i].y) - g.curve.centre.y) < 1e-10);
    }
  std::ostringstream csv;
  write_sroc_csv(csv, g);
  CHECK(csv.str().rfind("element,index,fpr,tpr,logit_sp,logit_se\n", 0) == 0);
  std::ostringstream svg;
  write_sroc_svg(svg, g, "telomerase");
  CHECK(svg.str().find("<svg") == 0);
}

TEST_CASE("study order does not move the SROC outputs") {
  auto studies = telomerase_dataset().studies();
  std::rotate(studies.begin(), studies.begin() + 3, studies.end());
  const Dataset d("rotated", studies);
  const LaplaceFit fit = fit_laplace(d, PriorBundle{});
  const SrocGeometry g = sroc_geometry(d, fit.grid, fit.summary);
  const auto& ref = telomerase().geometry;
  CHECK(g.curve.slope == doctest::Approx(ref.curve.slope).epsilon(1e-6));
  CHECK(g.summary_point.x == doctest::Approx(ref.summary_point.x).epsilon(1e-6));
  CHECK(std::abs(polygon_area(g.credible.roc)) == doctest::Approx(std::abs(polygon_area(ref.credible.roc))).epsilon(1e-3));
}

TEST_CASE("zero correlation gives a flat curve") {
  PriorBundle p;
  p.cor_prior = FixedCorrelation{0.0};
  const auto fit = fit_laplace(telomerase_dataset(), p);
  const SrocCurve c = sroc_curve(telomerase_dataset(), fit.grid, fit.summary);
  CHECK(c.slope == 0.0);
  for (const auto& v : c.roc) CHECK(v.y == doctest::Approx(1.0 / (1.0 + std::exp(-fit.summary["mu"].mean))));
}

TEST_CASE("tiny random effects collapse the prediction region onto the credible region") {
  // Pinning the variances near zero through a sharp prior leaves only the
  // fixed-effect uncertainty in the predictive draws.
  const auto fit = fit_laplace(telomerase_dataset(), PriorBundle{});
  HyperGrid g = fit.grid;
  for (auto& p : g.points) p.hyper.var_phi = p.hyper.var_psi = 1e-10;
  const auto cred = credible_region(g);
  const auto pred = prediction_region(g);
  const double a = std::abs(polygon_area(cred.logit)), b = std::abs(polygon_area(pred.logit));
  CHECK(b == doctest::Approx(a).epsilon(0.1));
}

TEST_CASE("covariates are rejected") {
  auto studies = telomerase_dataset().studies();
  for (auto& s : studies) s.covariates_se = {1.0};
  const Dataset d("cov", studies);
  const auto fit = fit_laplace(d, PriorBundle{});
  CHECK_THROWS_AS(sroc_curve(d, fit.grid, fit.summary), std::invalid_argument);
  CHECK_THROWS_AS(sroc_geometry(d, fit.grid, fit.summary), std::invalid_argument);
}
