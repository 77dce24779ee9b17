#include "kmband/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace kmband {

namespace {

constexpr double kWidth = 720.0, kHeight = 540.0;
constexpr double kLeft = 72.0, kRight = 20.0, kTop = 20.0, kBottom = 52.0;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

struct Mapper {
  double t_max;
  double x(double t) const { return kLeft + (kWidth - kLeft - kRight) * (t / t_max); }
  double y(double s) const { return kTop + (kHeight - kTop - kBottom) * (1.0 - s); }
};

// right-continuous step path starting at (0, 1)
std::string step_path(const StepSeries& series, const Mapper& m) {
  std::ostringstream d;
  double cur = 1.0;
  d << "M " << fmt(m.x(0.0)) << ' ' << fmt(m.y(cur));
  for (size_t i = 0; i < series.times.size(); ++i) {
    d << " H " << fmt(m.x(series.times[i]));
    if (series.values[i] != cur) {
      cur = series.values[i];
      d << " V " << fmt(m.y(cur));
    }
  }
  d << " H " << fmt(m.x(m.t_max));
  return d.str();
}

// reversed step path (for closing band polygons)
std::string step_path_reverse(const StepSeries& series, const Mapper& m) {
  std::ostringstream d;
  d << "L " << fmt(m.x(m.t_max)) << ' '
    << fmt(m.y(series.values.empty() ? 1.0 : series.values.back()));
  for (size_t i = series.times.size(); i-- > 0;) {
    double prev = i == 0 ? 1.0 : series.values[i - 1];
    d << " H " << fmt(m.x(series.times[i]));
    if (prev != series.values[i]) d << " V " << fmt(m.y(prev));
  }
  d << " H " << fmt(m.x(0.0));
  return d.str();
}

double nice_step(double span) {
  double raw = span / 6.0;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double mult : {1.0, 2.0, 5.0, 10.0}) {
    if (mag * mult >= raw) return mag * mult;
  }
  return 10.0 * mag;
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  double t_max = 1.0;
  for (const auto& c : spec.curves)
    for (double t : c.values.times) t_max = std::max(t_max, t);
  for (const auto& b : spec.bands)
    for (double t : b.upper.times) t_max = std::max(t_max, t);
  for (const auto& [t, s] : spec.censor_marks) t_max = std::max(t_max, t);
  t_max *= 1.05;
  Mapper m{t_max};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt_tick(kWidth)
      << "\" height=\"" << fmt_tick(kHeight) << "\" viewBox=\"0 0 " << fmt_tick(kWidth) << ' '
      << fmt_tick(kHeight) << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // hatch patterns, one per hatched band
  svg << "<defs>\n";
  int hatch_id = 0;
  for (const auto& b : spec.bands) {
    if (!b.hatched) continue;
    svg << "<pattern id=\"hatch" << hatch_id << "\" width=\"6\" height=\"6\" "
        << "patternUnits=\"userSpaceOnUse\" patternTransform=\"rotate("
        << (hatch_id % 2 ? "-45" : "45") << ")\">"
        << "<line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"" << b.color
        << "\" stroke-width=\"2\"/></pattern>\n";
    ++hatch_id;
  }
  svg << "</defs>\n";

  // bands first, curves on top
  hatch_id = 0;
  for (const auto& b : spec.bands) {
    std::string fill;
    if (b.hatched) {
      fill = "url(#hatch" + std::to_string(hatch_id++) + ")";
    } else {
      fill = b.color;
    }
    svg << "<path d=\"" << step_path(b.upper, m) << ' ' << step_path_reverse(b.lower, m)
        << " Z\" fill=\"" << fill << "\" fill-opacity=\"" << fmt(b.opacity)
        << "\" stroke=\"none\"/>\n";
  }
  for (const auto& c : spec.curves) {
    svg << "<path d=\"" << step_path(c.values, m) << "\" fill=\"none\" stroke=\"" << c.color
        << "\" stroke-width=\"2\"" << (c.dashed ? " stroke-dasharray=\"7 4\"" : "") << "/>\n";
  }
  for (const auto& [t, s] : spec.censor_marks) {
    svg << "<line x1=\"" << fmt(m.x(t)) << "\" y1=\"" << fmt(m.y(s) - 5.0) << "\" x2=\""
        << fmt(m.x(t)) << "\" y2=\"" << fmt(m.y(s) + 5.0)
        << "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
  }

  // axes
  svg << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(kHeight - kBottom) << "\" x2=\""
      << fmt(kWidth - kRight) << "\" y2=\"" << fmt(kHeight - kBottom)
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(kTop) << "\" x2=\"" << fmt(kLeft)
      << "\" y2=\"" << fmt(kHeight - kBottom) << "\" stroke=\"black\"/>\n";

  double dt = nice_step(t_max);
  for (double t = 0.0; t <= t_max + 1e-9; t += dt) {
    svg << "<line x1=\"" << fmt(m.x(t)) << "\" y1=\"" << fmt(kHeight - kBottom) << "\" x2=\""
        << fmt(m.x(t)) << "\" y2=\"" << fmt(kHeight - kBottom + 5.0) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fmt(m.x(t)) << "\" y=\"" << fmt(kHeight - kBottom + 18.0)
        << "\" font-size=\"12\" text-anchor=\"middle\">" << fmt_tick(t) << "</text>\n";
  }
  for (int k = 0; k <= 5; ++k) {
    double s = 0.2 * k;
    svg << "<line x1=\"" << fmt(kLeft - 5.0) << "\" y1=\"" << fmt(m.y(s)) << "\" x2=\""
        << fmt(kLeft) << "\" y2=\"" << fmt(m.y(s)) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fmt(kLeft - 9.0) << "\" y=\"" << fmt(m.y(s) + 4.0)
        << "\" font-size=\"12\" text-anchor=\"end\">" << fmt_tick(s) << "</text>\n";
  }
  svg << "<text x=\"" << fmt((kLeft + kWidth - kRight) / 2.0) << "\" y=\"" << fmt(kHeight - 12.0)
      << "\" font-size=\"14\" text-anchor=\"middle\">" << spec.x_label << "</text>\n";
  svg << "<text x=\"18\" y=\"" << fmt((kTop + kHeight - kBottom) / 2.0)
      << "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << fmt((kTop + kHeight - kBottom) / 2.0) << ")\">" << spec.y_label << "</text>\n";

  // legend, top right
  double ly = kTop + 14.0;
  const double lx = kWidth - kRight - 180.0;
  for (const auto& c : spec.curves) {
    if (c.label.empty()) continue;
    svg << "<line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(ly - 4.0) << "\" x2=\"" << fmt(lx + 26.0)
        << "\" y2=\"" << fmt(ly - 4.0) << "\" stroke=\"" << c.color << "\" stroke-width=\"2\""
        << (c.dashed ? " stroke-dasharray=\"7 4\"" : "") << "/>\n";
    svg << "<text x=\"" << fmt(lx + 32.0) << "\" y=\"" << fmt(ly)
        << "\" font-size=\"12\">" << c.label << "</text>\n";
    ly += 18.0;
  }
  hatch_id = 0;
  for (const auto& b : spec.bands) {
    std::string fill = b.hatched ? "url(#hatch" + std::to_string(hatch_id++) + ")" : b.color;
    if (b.label.empty()) continue;
    svg << "<rect x=\"" << fmt(lx) << "\" y=\"" << fmt(ly - 12.0)
        << "\" width=\"26\" height=\"12\" fill=\"" << fill << "\" fill-opacity=\""
        << fmt(b.opacity) << "\"/>\n";
    svg << "<text x=\"" << fmt(lx + 32.0) << "\" y=\"" << fmt(ly)
        << "\" font-size=\"12\">" << b.label << "</text>\n";
    ly += 18.0;
  }

  svg << "</svg>\n";
  return svg.str();
}

}  // namespace kmband
