#ifndef METADIAG_SROC_HPP
#define METADIAG_SROC_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "metadiag/marginals.hpp"
#include "metadiag/mcmc.hpp"

namespace metadiag {

struct Point {
  double x = 0.0;
  double y = 0.0;
};
using Polyline = std::vector<Point>;

/// Ray-casting test; the polygon is implicitly closed.
bool point_in_polygon(const Polyline& polygon, Point p);
/// Every vertex of `inner` lies inside `outer`.
bool polygon_inside(const Polyline& inner, const Polyline& outer);
double polygon_area(const Polyline& polygon);

/// Logit pair (x = logit Sp, y = logit Se) to ROC coordinates (1 - Sp, Se).
Point to_roc(Point logit_point);

struct SrocConfig {
  std::size_t draws = 10000;
  double level = 0.95;
  int kde_grid = 200;
  std::uint64_t seed = kDefaultSeed;
};

struct ContourRegion {
  Polyline logit;   // closed contour in (logit Sp, logit Se)
  Polyline roc;     // same contour in ROC coordinates
  double threshold = 0.0;   // kernel density level of the contour
  double draw_mass = 0.0;   // fraction of the contoured draws inside the polygon
  std::vector<Point> draws;  // logit-scale draws the contour was traced from
};

/// Highest-density region of a point cloud: Gaussian kernel density in
/// whitened coordinates, thresholded so that `level` of the points lie above
/// it, traced by marching squares. Returns the contour enclosing the cloud's
/// mean (the largest one if several do).
ContourRegion hpd_contour(std::vector<Point> draws, double level, int grid_size = 200);

/// Draws of (nu, mu) from the grid mixture of Gaussians, as (logit Sp, logit Se).
std::vector<Point> posterior_mean_draws(const HyperGrid& grid, std::size_t n, std::uint64_t seed);
/// Draws of (nu + psi*, mu + phi*) for a new study.
std::vector<Point> predictive_draws(const HyperGrid& grid, std::size_t n, std::uint64_t seed);

struct SrocCurve {
  Polyline logit;  // (logit Sp, logit Se)
  Polyline roc;
  double slope = 0.0;  // d logit Se / d logit Sp
  Point centre;        // (E[nu], E[mu])
};

/// logit Se(x) = E[mu] + E[rho] (E[sd_phi] / E[sd_psi]) (x - E[nu]) over the
/// observed logit-Sp range widened by 10% on each side.
SrocCurve sroc_curve(const Dataset& data, const HyperGrid& grid, const PosteriorSummary& summary, int points = 200);

ContourRegion credible_region(const HyperGrid& grid, const SrocConfig& config = {});
ContourRegion prediction_region(const HyperGrid& grid, const SrocConfig& config = {});

struct StudyPoint {
  std::string id;
  double fpr = 0.0;  // 1 - observed Sp
  double tpr = 0.0;  // observed Se
  long long n = 0;
};

struct SrocGeometry {
  Point summary_point;  // ROC coordinates of (E[nu], E[mu])
  SrocCurve curve;
  ContourRegion credible;
  ContourRegion prediction;
  std::vector<StudyPoint> study_points;
};

/// Throws std::invalid_argument for data with covariates.
SrocGeometry sroc_geometry(const Dataset& data, const HyperGrid& grid, const PosteriorSummary& summary,
                           const SrocConfig& config = {});

/// Columns: element, index, fpr, tpr, logit_sp, logit_se.
void write_sroc_csv(std::ostream& out, const SrocGeometry& g);
void write_sroc_svg(std::ostream& out, const SrocGeometry& g, const std::string& title);

}  // namespace metadiag

#endif  // METADIAG_SROC_HPP
