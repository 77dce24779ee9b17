#pragma once

#include <string>
#include <utility>
#include <vector>

namespace kmband {

// Minimal deterministic SVG step-plot writer for survival curves. Values are
// given at event times; every series is rendered right-continuous starting
// from (0, 1).

struct StepSeries {
  std::vector<double> times;
  std::vector<double> values;
};

struct PlotBand {
  StepSeries lower;
  StepSeries upper;
  std::string color;
  double opacity = 0.25;
  bool hatched = false;
  std::string label;
};

struct PlotCurve {
  StepSeries values;
  std::string color;
  bool dashed = false;
  std::string label;
};

struct PlotSpec {
  std::vector<PlotBand> bands;
  std::vector<PlotCurve> curves;
  std::vector<std::pair<double, double>> censor_marks;  // (time, survival)
  std::string x_label = "Time";
  std::string y_label = "Survival probability";
};

/// Byte-deterministic SVG document for the same input.
std::string render_svg(const PlotSpec& spec);

}  // namespace kmband
