#pragma once

#include <vector>

#include "kmband/time_table.hpp"

namespace kmband {

/// Normal-approximation interval per event time. `defined` marks times where
/// the formula applies; plain intervals may spill outside [0,1].
struct GreenwoodBand {
  std::vector<double> time;
  std::vector<double> s;
  std::vector<double> lo, hi;
  std::vector<std::uint8_t> defined;
  double level = 0.95;
  bool exponential = false;
};

GreenwoodBand greenwood(const TimeTable& table, const InclusionVector& inclusion, double level);

/// Interval on the log(-log S) scale; always inside (0,1) where defined,
/// absent whenever S is 0 or 1.
GreenwoodBand exponential_greenwood(const TimeTable& table, const InclusionVector& inclusion,
                                    double level);

struct SurvivalGroup {
  std::vector<double> times;
  std::vector<std::uint8_t> censored;
};

struct LogRankResult {
  double u = 0.0;      // summed residuals
  double var_u = 0.0;  // hypergeometric variance
  double statistic = 0.0;
  double p = 1.0;
  bool degenerate = false;
};

LogRankResult conventional_logrank(const SurvivalGroup& group0, const SurvivalGroup& group1);

}  // namespace kmband
