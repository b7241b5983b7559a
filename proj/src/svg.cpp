#include "metadiag/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace metadiag {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

}  // namespace

std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

SvgPlot::SvgPlot(double width, double height, double x_min, double x_max, double y_min, double y_max,
                 std::string title)
    : width_(width), height_(height), x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max) {
  if (!(x_max_ > x_min_)) x_max_ = x_min_ + 1.0;
  if (!(y_max_ > y_min_)) y_max_ = y_min_ + 1.0;
  body_ << "<rect x=\"0\" y=\"0\" width=\"" << num(width_) << "\" height=\"" << num(height_)
        << "\" fill=\"white\"/>\n";
  if (!title.empty())
    body_ << "<text x=\"" << num(width_ / 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\" "
          << "font-family=\"sans-serif\">" << svg_escape(title) << "</text>\n";
}

double SvgPlot::px(double x) const { return left_ + (x - x_min_) / (x_max_ - x_min_) * (width_ - left_ - right_); }
double SvgPlot::py(double y) const {
  return height_ - bottom_ - (y - y_min_) / (y_max_ - y_min_) * (height_ - top_ - bottom_);
}

void SvgPlot::axes(const std::string& x_label, const std::string& y_label, int ticks) {
  const double x0 = px(x_min_), x1 = px(x_max_), y0 = py(y_min_), y1 = py(y_max_);
  body_ << "<rect x=\"" << num(x0) << "\" y=\"" << num(y1) << "\" width=\"" << num(x1 - x0) << "\" height=\""
        << num(y0 - y1) << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
  for (int i = 0; i <= ticks; ++i) {
    const double xv = x_min_ + (x_max_ - x_min_) * i / ticks;
    const double yv = y_min_ + (y_max_ - y_min_) * i / ticks;
    body_ << "<line x1=\"" << num(px(xv)) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(px(xv)) << "\" y2=\""
          << num(y0 + 4) << "\" stroke=\"black\"/>\n";
    body_ << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(y0 + 16)
          << "\" text-anchor=\"middle\" font-size=\"10\" font-family=\"sans-serif\">" << tick_label(xv)
          << "</text>\n";
    body_ << "<line x1=\"" << num(x0 - 4) << "\" y1=\"" << num(py(yv)) << "\" x2=\"" << num(x0) << "\" y2=\""
          << num(py(yv)) << "\" stroke=\"black\"/>\n";
    body_ << "<text x=\"" << num(x0 - 6) << "\" y=\"" << num(py(yv) + 3)
          << "\" text-anchor=\"end\" font-size=\"10\" font-family=\"sans-serif\">" << tick_label(yv) << "</text>\n";
  }
  body_ << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\"" << num(height_ - 8)
        << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << svg_escape(x_label)
        << "</text>\n";
  body_ << "<text transform=\"translate(14," << num((y0 + y1) / 2)
        << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
        << svg_escape(y_label) << "</text>\n";
}

void SvgPlot::polyline(const std::vector<double>& x, const std::vector<double>& y, const std::string& stroke,
                       double stroke_width, const std::string& dash, bool closed) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n == 0) return;
  body_ << "<" << (closed ? "polygon" : "polyline") << " fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\""
        << num(stroke_width) << "\"";
  if (!dash.empty()) body_ << " stroke-dasharray=\"" << dash << "\"";
  body_ << " points=\"";
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) continue;
    const double cy = std::clamp(py(y[i]), -1e4, 1e4);
    body_ << num(px(x[i])) << ',' << num(cy) << ' ';
  }
  body_ << "\"/>\n";
}

void SvgPlot::circle(double x, double y, double radius_px, const std::string& fill, double opacity) {
  body_ << "<circle cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\"" << num(radius_px) << "\" fill=\""
        << fill << "\" fill-opacity=\"" << num(opacity) << "\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
}

void SvgPlot::rect(double x0, double y0, double x1, double y1, const std::string& fill) {
  const double a = px(std::min(x0, x1)), b = px(std::max(x0, x1));
  const double c = py(std::max(y0, y1)), d = py(std::min(y0, y1));
  body_ << "<rect x=\"" << num(a) << "\" y=\"" << num(c) << "\" width=\"" << num(b - a) << "\" height=\""
        << num(d - c) << "\" fill=\"" << fill << "\" stroke=\"black\" stroke-width=\"0.4\"/>\n";
}

void SvgPlot::hline(double y, const std::string& stroke, const std::string& dash) {
  body_ << "<line x1=\"" << num(px(x_min_)) << "\" y1=\"" << num(py(y)) << "\" x2=\"" << num(px(x_max_))
        << "\" y2=\"" << num(py(y)) << "\" stroke=\"" << stroke << "\"";
  if (!dash.empty()) body_ << " stroke-dasharray=\"" << dash << "\"";
  body_ << "/>\n";
}

void SvgPlot::text(double x, double y, const std::string& label, const std::string& anchor, int size) {
  body_ << "<text x=\"" << num(px(x)) << "\" y=\"" << num(py(y)) << "\" text-anchor=\"" << anchor
        << "\" font-size=\"" << size << "\" font-family=\"sans-serif\">" << svg_escape(label) << "</text>\n";
}

void SvgPlot::legend(const std::vector<std::pair<std::string, std::string>>& entries) {
  double y = top_ + 14;
  const double x = width_ - right_ - 120;
  for (const auto& [label, colour] : entries) {
    body_ << "<line x1=\"" << num(x) << "\" y1=\"" << num(y - 4) << "\" x2=\"" << num(x + 18) << "\" y2=\""
          << num(y - 4) << "\" stroke=\"" << colour << "\" stroke-width=\"3\"/>\n";
    body_ << "<text x=\"" << num(x + 22) << "\" y=\"" << num(y) << "\" font-size=\"10\" font-family=\"sans-serif\">"
          << svg_escape(label) << "</text>\n";
    y += 14;
  }
}

std::string SvgPlot::str() const {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width_) << "\" height=\"" << num(height_)
     << "\" viewBox=\"0 0 " << num(width_) << ' ' << num(height_) << "\">\n"
     << body_.str() << "</svg>\n";
  return os.str();
}

std::string svg_panels(const std::vector<SvgPlot>& panels, int columns) {
  if (panels.empty()) return "<svg xmlns=\"http://www.w3.org/2000/svg\"/>\n";
  columns = std::max(1, columns);
  const double w = panels.front().width(), h = panels.front().height();
  const int rows = (static_cast<int>(panels.size()) + columns - 1) / columns;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w * columns) << "\" height=\"" << num(h * rows)
     << "\" viewBox=\"0 0 " << num(w * columns) << ' ' << num(h * rows) << "\">\n";
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const int r = static_cast<int>(i) / columns, c = static_cast<int>(i) % columns;
    os << "<g transform=\"translate(" << num(c * w) << ',' << num(r * h) << ")\">\n" << panels[i].body() << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace metadiag
