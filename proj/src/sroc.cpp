#include "metadiag/sroc.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <random>
#include <stdexcept>

#include "metadiag/numerics.hpp"
#include "metadiag/svg.hpp"

namespace metadiag {

bool point_in_polygon(const Polyline& poly, Point p) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = poly[i];
    const Point& b = poly[j];
    if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) inside = !inside;
  }
  return inside;
}

bool polygon_inside(const Polyline& inner, const Polyline& outer) {
  return !inner.empty() &&
         std::all_of(inner.begin(), inner.end(), [&](const Point& p) { return point_in_polygon(outer, p); });
}

double polygon_area(const Polyline& poly) {
  double a = 0.0;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++)
    a += (poly[j].x + poly[i].x) * (poly[j].y - poly[i].y);
  return std::abs(a) / 2.0;
}

Point to_roc(Point q) { return {1.0 - numerics::logistic(q.x), numerics::logistic(q.y)}; }

namespace {

Polyline map_roc(const Polyline& logit) {
  Polyline out;
  out.reserve(logit.size());
  for (const auto& p : logit) out.push_back(to_roc(p));
  return out;
}

// Density values on a regular grid.
struct Field {
  int nx, ny;
  double x0, y0, dx, dy;
  std::vector<double> v;  // v[i * ny + j] at (x0 + i dx, y0 + j dy)
  double at(int i, int j) const { return v[static_cast<std::size_t>(i) * ny + j]; }
};

double bilinear(const Field& f, double x, double y) {
  const double fx = (x - f.x0) / f.dx, fy = (y - f.y0) / f.dy;
  const int i = std::clamp(static_cast<int>(std::floor(fx)), 0, f.nx - 2);
  const int j = std::clamp(static_cast<int>(std::floor(fy)), 0, f.ny - 2);
  const double u = fx - i, w = fy - j;
  return (1 - u) * (1 - w) * f.at(i, j) + u * (1 - w) * f.at(i + 1, j) + (1 - u) * w * f.at(i, j + 1) +
         u * w * f.at(i + 1, j + 1);
}

// Closed iso-contours of f at level c by marching squares.
std::vector<Polyline> marching_squares(const Field& f, double c) {
  const long long g = std::max(f.nx, f.ny) + 1;
  auto h_id = [&](int i, int j) { return (0LL * g + i) * g + j; };
  auto v_id = [&](int i, int j) { return (1LL * g + i) * g + j; };
  auto cross = [&](double a, double b) { return (c - a) / (b - a); };
  std::map<long long, Point> edge_point;
  auto h_point = [&](int i, int j) {
    const long long id = h_id(i, j);
    if (!edge_point.count(id))
      edge_point[id] = {f.x0 + (i + cross(f.at(i, j), f.at(i + 1, j))) * f.dx, f.y0 + j * f.dy};
    return id;
  };
  auto v_point = [&](int i, int j) {
    const long long id = v_id(i, j);
    if (!edge_point.count(id))
      edge_point[id] = {f.x0 + i * f.dx, f.y0 + (j + cross(f.at(i, j), f.at(i, j + 1))) * f.dy};
    return id;
  };

  std::vector<std::pair<long long, long long>> segments;
  for (int i = 0; i + 1 < f.nx; ++i) {
    for (int j = 0; j + 1 < f.ny; ++j) {
      const double a = f.at(i, j), b = f.at(i + 1, j), d = f.at(i + 1, j + 1), e = f.at(i, j + 1);
      const int idx = (a >= c) | ((b >= c) << 1) | ((d >= c) << 2) | ((e >= c) << 3);
      if (idx == 0 || idx == 15) continue;
      auto e0 = [&] { return h_point(i, j); };
      auto e1 = [&] { return v_point(i + 1, j); };
      auto e2 = [&] { return h_point(i, j + 1); };
      auto e3 = [&] { return v_point(i, j); };
      const bool centre_above = (a + b + d + e) / 4.0 >= c;
      switch (idx) {
        case 1: case 14: segments.emplace_back(e3(), e0()); break;
        case 2: case 13: segments.emplace_back(e0(), e1()); break;
        case 3: case 12: segments.emplace_back(e3(), e1()); break;
        case 4: case 11: segments.emplace_back(e1(), e2()); break;
        case 6: case 9: segments.emplace_back(e0(), e2()); break;
        case 7: case 8: segments.emplace_back(e3(), e2()); break;
        case 5:
          if (centre_above) {
            segments.emplace_back(e0(), e1());
            segments.emplace_back(e2(), e3());
          } else {
            segments.emplace_back(e3(), e0());
            segments.emplace_back(e1(), e2());
          }
          break;
        case 10:
          if (centre_above) {
            segments.emplace_back(e3(), e0());
            segments.emplace_back(e1(), e2());
          } else {
            segments.emplace_back(e0(), e1());
            segments.emplace_back(e2(), e3());
          }
          break;
        default: break;
      }
    }
  }

  std::map<long long, std::vector<std::size_t>> by_edge;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    by_edge[segments[s].first].push_back(s);
    by_edge[segments[s].second].push_back(s);
  }
  std::vector<bool> used(segments.size(), false);
  std::vector<Polyline> loops;
  for (std::size_t s0 = 0; s0 < segments.size(); ++s0) {
    if (used[s0]) continue;
    used[s0] = true;
    Polyline loop{edge_point[segments[s0].first]};
    const long long start = segments[s0].first;
    long long cur = segments[s0].second;
    while (cur != start) {
      loop.push_back(edge_point[cur]);
      std::size_t next = segments.size();
      for (std::size_t s : by_edge[cur])
        if (!used[s]) {
          next = s;
          break;
        }
      if (next == segments.size()) break;  // open at the border
      used[next] = true;
      cur = segments[next].first == cur ? segments[next].second : segments[next].first;
    }
    if (loop.size() >= 3) loops.push_back(std::move(loop));
  }
  return loops;
}

}  // namespace

ContourRegion hpd_contour(std::vector<Point> draws, double level, int grid_size) {
  const std::size_t n = draws.size();
  if (n < 10) throw std::invalid_argument("contouring needs at least 10 draws");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("contour level must lie in (0, 1)");
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : draws) mean += Eigen::Vector2d(p.x, p.y);
  mean /= static_cast<double>(n);
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : draws) {
    const Eigen::Vector2d d = Eigen::Vector2d(p.x, p.y) - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(n - 1);
  cov.diagonal().array() += 1e-12;
  const Eigen::Matrix2d l = cov.llt().matrixL();
  const Eigen::Matrix2d l_inv = l.inverse();

  std::vector<Eigen::Vector2d> w(n);
  Eigen::Vector2d lo = Eigen::Vector2d::Constant(1e300), hi = -lo;
  for (std::size_t k = 0; k < n; ++k) {
    w[k] = l_inv * (Eigen::Vector2d(draws[k].x, draws[k].y) - mean);
    lo = lo.cwiseMin(w[k]);
    hi = hi.cwiseMax(w[k]);
  }
  const double h = std::pow(static_cast<double>(n), -1.0 / 6.0);
  lo.array() -= 4.0 * h;
  hi.array() += 4.0 * h;
  Field f{grid_size, grid_size, lo(0), lo(1), (hi(0) - lo(0)) / (grid_size - 1), (hi(1) - lo(1)) / (grid_size - 1),
          std::vector<double>(static_cast<std::size_t>(grid_size) * grid_size, 0.0)};

  // Linear binning, then separable Gaussian smoothing.
  std::vector<double> bins(f.v.size(), 0.0);
  for (const auto& p : w) {
    const double fx = (p(0) - f.x0) / f.dx, fy = (p(1) - f.y0) / f.dy;
    const int i = std::clamp(static_cast<int>(fx), 0, grid_size - 2);
    const int j = std::clamp(static_cast<int>(fy), 0, grid_size - 2);
    const double u = fx - i, v = fy - j;
    bins[static_cast<std::size_t>(i) * grid_size + j] += (1 - u) * (1 - v);
    bins[static_cast<std::size_t>(i + 1) * grid_size + j] += u * (1 - v);
    bins[static_cast<std::size_t>(i) * grid_size + j + 1] += (1 - u) * v;
    bins[static_cast<std::size_t>(i + 1) * grid_size + j + 1] += u * v;
  }
  auto kernel = [&](double step) {
    const int r = static_cast<int>(std::ceil(5.0 * h / step));
    std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
    for (int t = -r; t <= r; ++t) k[static_cast<std::size_t>(t + r)] = std::exp(-0.5 * std::pow(t * step / h, 2));
    return k;
  };
  const auto kx = kernel(f.dx), ky = kernel(f.dy);
  const int rx = static_cast<int>(kx.size() / 2), ry = static_cast<int>(ky.size() / 2);
  std::vector<double> tmp(f.v.size(), 0.0);
  for (int i = 0; i < grid_size; ++i)
    for (int j = 0; j < grid_size; ++j) {
      double s = 0.0;
      for (int t = std::max(-ry, -j); t <= std::min(ry, grid_size - 1 - j); ++t)
        s += ky[static_cast<std::size_t>(t + ry)] * bins[static_cast<std::size_t>(i) * grid_size + j + t];
      tmp[static_cast<std::size_t>(i) * grid_size + j] = s;
    }
  const double norm = 1.0 / (static_cast<double>(n) * 2.0 * M_PI * h * h);
  for (int i = 0; i < grid_size; ++i)
    for (int j = 0; j < grid_size; ++j) {
      double s = 0.0;
      for (int t = std::max(-rx, -i); t <= std::min(rx, grid_size - 1 - i); ++t)
        s += kx[static_cast<std::size_t>(t + rx)] * tmp[static_cast<std::size_t>(i + t) * grid_size + j];
      f.v[static_cast<std::size_t>(i) * grid_size + j] = s * norm;
    }

  std::vector<double> at_draws(n);
  for (std::size_t k = 0; k < n; ++k) at_draws[k] = bilinear(f, w[k](0), w[k](1));
  std::vector<double> sorted = at_draws;
  const auto cut = static_cast<std::size_t>(std::floor((1.0 - level) * static_cast<double>(n)));
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(cut), sorted.end());
  const double threshold = sorted[cut];

  const auto loops = marching_squares(f, threshold);
  if (loops.empty()) throw std::runtime_error("density contour could not be traced");
  const Polyline* best = nullptr;
  double best_area = -1.0;
  for (bool need_centre : {true, false}) {
    for (const auto& loop : loops) {
      if (need_centre && !point_in_polygon(loop, {0.0, 0.0})) continue;
      const double a = polygon_area(loop);
      if (a > best_area) {
        best_area = a;
        best = &loop;
      }
    }
    if (best) break;
  }

  ContourRegion region;
  region.threshold = threshold;
  for (const auto& p : *best) {
    const Eigen::Vector2d q = mean + l * Eigen::Vector2d(p.x, p.y);
    region.logit.push_back({q(0), q(1)});
  }
  std::size_t inside = 0;
  for (const auto& p : draws) inside += point_in_polygon(region.logit, p);
  region.draw_mass = static_cast<double>(inside) / static_cast<double>(n);
  region.roc = map_roc(region.logit);
  region.draws = std::move(draws);
  return region;
}

namespace {

struct MixtureSampler {
  std::vector<Eigen::Vector2d> means;
  std::vector<Eigen::Matrix2d> chol_latent, chol_re;
  std::discrete_distribution<std::size_t> pick;

  explicit MixtureSampler(const HyperGrid& grid) {
    std::vector<double> w;
    for (const auto& p : grid.points) {
      w.push_back(p.weight);
      means.emplace_back(p.approx.mode(LatentLayout::mu), p.approx.mode(LatentLayout::nu));
      chol_latent.push_back(p.approx.fixed_covariance.topLeftCorner<2, 2>().llt().matrixL());
      chol_re.push_back(assemble_covariance(p.hyper).llt().matrixL());
    }
    pick = std::discrete_distribution<std::size_t>(w.begin(), w.end());
  }
};

std::vector<Point> mixture_draws(const HyperGrid& grid, std::size_t n, std::uint64_t seed, bool predictive) {
  if (grid.points.empty()) throw std::invalid_argument("empty hyperparameter grid");
  MixtureSampler s(grid);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> norm;
  std::vector<Point> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t c = s.pick(rng);
    const Eigen::Vector2d z(norm(rng), norm(rng));
    Eigen::Vector2d x = s.means[c] + s.chol_latent[c] * z;  // (mu, nu)
    if (predictive) {
      const Eigen::Vector2d z2(norm(rng), norm(rng));
      x += s.chol_re[c] * z2;  // (phi*, psi*)
    }
    out.push_back({x(1), x(0)});
  }
  return out;
}

double observed_logit(long long k, long long n) {
  return numerics::logit((static_cast<double>(k) + 0.5) / (static_cast<double>(n) + 1.0));
}

}  // namespace

std::vector<Point> posterior_mean_draws(const HyperGrid& grid, std::size_t n, std::uint64_t seed) {
  return mixture_draws(grid, n, seed, false);
}

std::vector<Point> predictive_draws(const HyperGrid& grid, std::size_t n, std::uint64_t seed) {
  return mixture_draws(grid, n, seed, true);
}

SrocCurve sroc_curve(const Dataset& data, const HyperGrid& grid, const PosteriorSummary& summary, int points) {
  if (data.n_covariates_se() + data.n_covariates_sp() > 0)
    throw std::invalid_argument("SROC output requires a covariate-free fit");
  double sd_phi = 0.0, sd_psi = 0.0;
  for (const auto& p : grid.points) {
    sd_phi += p.weight * std::sqrt(p.hyper.var_phi);
    sd_psi += p.weight * std::sqrt(p.hyper.var_psi);
  }
  const double rho = summary.fixed_rho ? *summary.fixed_rho : summary["rho"].mean;
  SrocCurve c;
  c.centre = {summary["nu"].mean, summary["mu"].mean};
  c.slope = rho * sd_phi / sd_psi;
  double lo = 1e300, hi = -1e300;
  for (const auto& s : data.studies()) {
    const double x = observed_logit(s.tn, s.non_diseased());
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const double pad = hi > lo ? 0.1 * (hi - lo) : 1.0;
  lo -= pad;
  hi += pad;
  for (int i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * i / (points - 1);
    c.logit.push_back({x, c.centre.y + c.slope * (x - c.centre.x)});
  }
  c.roc = map_roc(c.logit);
  return c;
}

ContourRegion credible_region(const HyperGrid& grid, const SrocConfig& config) {
  return hpd_contour(posterior_mean_draws(grid, config.draws, config.seed), config.level, config.kde_grid);
}

ContourRegion prediction_region(const HyperGrid& grid, const SrocConfig& config) {
  return hpd_contour(predictive_draws(grid, config.draws, config.seed + 1), config.level, config.kde_grid);
}

SrocGeometry sroc_geometry(const Dataset& data, const HyperGrid& grid, const PosteriorSummary& summary,
                           const SrocConfig& config) {
  SrocGeometry g;
  g.curve = sroc_curve(data, grid, summary);
  g.summary_point = to_roc(g.curve.centre);
  g.credible = credible_region(grid, config);
  g.prediction = prediction_region(grid, config);
  for (const auto& s : data.studies()) {
    StudyPoint p;
    p.id = s.study_id;
    p.tpr = static_cast<double>(s.tp) / static_cast<double>(s.diseased());
    p.fpr = static_cast<double>(s.fp) / static_cast<double>(s.non_diseased());
    p.n = s.total();
    g.study_points.push_back(p);
  }
  return g;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_line(std::ostream& out, const std::string& element, std::size_t index, Point roc, Point logit) {
  out << element << ',' << index << ',' << fmt(roc.x) << ',' << fmt(roc.y) << ',' << fmt(logit.x) << ','
      << fmt(logit.y) << '\n';
}

}  // namespace

void write_sroc_csv(std::ostream& out, const SrocGeometry& g) {
  out << "element,index,fpr,tpr,logit_sp,logit_se\n";
  write_line(out, "summary", 0, g.summary_point, g.curve.centre);
  for (std::size_t i = 0; i < g.curve.logit.size(); ++i) write_line(out, "curve", i, g.curve.roc[i], g.curve.logit[i]);
  for (std::size_t i = 0; i < g.credible.logit.size(); ++i)
    write_line(out, "credible", i, g.credible.roc[i], g.credible.logit[i]);
  for (std::size_t i = 0; i < g.prediction.logit.size(); ++i)
    write_line(out, "prediction", i, g.prediction.roc[i], g.prediction.logit[i]);
  for (std::size_t i = 0; i < g.study_points.size(); ++i) {
    const auto& s = g.study_points[i];
    write_line(out, "study:" + s.id, i, {s.fpr, s.tpr},
               {numerics::logit(std::clamp(1.0 - s.fpr, 1e-9, 1 - 1e-9)),
                numerics::logit(std::clamp(s.tpr, 1e-9, 1 - 1e-9))});
  }
}

void write_sroc_svg(std::ostream& out, const SrocGeometry& g, const std::string& title) {
  SvgPlot plot(520, 520, 0.0, 1.0, 0.0, 1.0, title);
  plot.axes("1 - specificity", "sensitivity", 5);
  long long n_max = 1;
  for (const auto& s : g.study_points) n_max = std::max(n_max, s.n);
  for (const auto& s : g.study_points)
    plot.circle(s.fpr, s.tpr, 3.0 + 12.0 * std::sqrt(static_cast<double>(s.n) / static_cast<double>(n_max)), "#9ecae1");
  auto draw = [&](const Polyline& p, const std::string& colour, double width, const std::string& dash, bool closed) {
    std::vector<double> x, y;
    for (const auto& q : p) {
      x.push_back(q.x);
      y.push_back(q.y);
    }
    plot.polyline(x, y, colour, width, dash, closed);
  };
  draw(g.prediction.roc, "#777777", 1.5, "2,3", true);
  draw(g.credible.roc, "black", 1.5, "6,4", true);
  draw(g.curve.roc, "black", 2.0, "", false);
  plot.circle(g.summary_point.x, g.summary_point.y, 4.0, "black", 1.0);
  plot.legend({{"SROC curve", "black"}, {"credible region", "black"}, {"prediction region", "#777777"}});
  out << plot.str();
}

}  // namespace metadiag
