#ifndef METADIAG_SVG_HPP
#define METADIAG_SVG_HPP

#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace metadiag {

/// Minimal SVG plot: a data rectangle mapped into a pixel panel with margins.
class SvgPlot {
 public:
  SvgPlot(double width, double height, double x_min, double x_max, double y_min, double y_max, std::string title = {});

  void axes(const std::string& x_label, const std::string& y_label, int ticks = 5);
  void polyline(const std::vector<double>& x, const std::vector<double>& y, const std::string& stroke,
                double stroke_width = 1.5, const std::string& dash = {}, bool closed = false);
  void circle(double x, double y, double radius_px, const std::string& fill, double opacity = 0.6);
  void rect(double x0, double y0, double x1, double y1, const std::string& fill);
  void hline(double y, const std::string& stroke, const std::string& dash = {});
  void text(double x, double y, const std::string& label, const std::string& anchor = "middle", int size = 11);
  /// Legend entries (label, colour) stacked in the top-right corner.
  void legend(const std::vector<std::pair<std::string, std::string>>& entries);

  double width() const { return width_; }
  double height() const { return height_; }
  /// Group element without the <svg> wrapper, for composition.
  std::string body() const { return body_.str(); }
  std::string str() const;

 private:
  double px(double x) const;
  double py(double y) const;

  double width_, height_, x_min_, x_max_, y_min_, y_max_;
  double left_ = 58, right_ = 14, top_ = 28, bottom_ = 44;
  std::ostringstream body_;
};

/// Lays out panels in a grid of `columns`.
std::string svg_panels(const std::vector<SvgPlot>& panels, int columns);

std::string svg_escape(const std::string& s);

}  // namespace metadiag

#endif  // METADIAG_SVG_HPP
