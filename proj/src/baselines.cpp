#include "kmband/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "kmband/numerics.hpp"

namespace kmband {

namespace {

struct GreenwoodAccumulator {
  double s = 1.0;
  double var_sum = 0.0;  // sum d / (r (r - d))
  bool broken = false;   // hit a time with r == d
};

}  // namespace

GreenwoodBand greenwood(const TimeTable& table, const InclusionVector& inclusion, double level) {
  GreenwoodBand band;
  band.level = level;
  band.exponential = false;
  const double z = normal_two_sided_z(level);
  CountVectors cv = table.counts(inclusion);
  GreenwoodAccumulator acc;
  for (size_t i = 0; i < table.times.size(); ++i) {
    if (cv.d[i] > 0) {
      if (cv.r[i] == cv.d[i])
        acc.broken = true;
      else
        acc.var_sum += double(cv.d[i]) / (double(cv.r[i]) * double(cv.r[i] - cv.d[i]));
      acc.s *= 1.0 - double(cv.d[i]) / double(cv.r[i]);
    }
    band.time.push_back(table.times[i]);
    band.s.push_back(acc.s);
    if (acc.broken) {
      band.lo.push_back(0.0);
      band.hi.push_back(0.0);
      band.defined.push_back(0);
    } else {
      double se = std::sqrt(acc.s * acc.s * acc.var_sum);
      band.lo.push_back(acc.s - z * se);
      band.hi.push_back(acc.s + z * se);
      band.defined.push_back(1);
    }
  }
  return band;
}

GreenwoodBand exponential_greenwood(const TimeTable& table, const InclusionVector& inclusion,
                                    double level) {
  GreenwoodBand band;
  band.level = level;
  band.exponential = true;
  const double z = normal_two_sided_z(level);
  CountVectors cv = table.counts(inclusion);
  GreenwoodAccumulator acc;
  for (size_t i = 0; i < table.times.size(); ++i) {
    if (cv.d[i] > 0) {
      if (cv.r[i] == cv.d[i])
        acc.broken = true;
      else
        acc.var_sum += double(cv.d[i]) / (double(cv.r[i]) * double(cv.r[i] - cv.d[i]));
      acc.s *= 1.0 - double(cv.d[i]) / double(cv.r[i]);
    }
    band.time.push_back(table.times[i]);
    band.s.push_back(acc.s);
    bool ok = !acc.broken && acc.s > 0.0 && acc.s < 1.0;
    if (!ok) {
      band.lo.push_back(acc.s);
      band.hi.push_back(acc.s);
      band.defined.push_back(0);
      continue;
    }
    double log_s = std::log(acc.s);
    double center = std::log(-log_s);
    double half = z * std::sqrt(acc.var_sum / (log_s * log_s));
    // larger v gives a smaller survival bound
    band.lo.push_back(std::exp(-std::exp(center + half)));
    band.hi.push_back(std::exp(-std::exp(center - half)));
    band.defined.push_back(1);
  }
  return band;
}

LogRankResult conventional_logrank(const SurvivalGroup& group0, const SurvivalGroup& group1) {
  std::set<double> event_times;
  for (size_t j = 0; j < group0.times.size(); ++j)
    if (!group0.censored[j]) event_times.insert(group0.times[j]);
  for (size_t j = 0; j < group1.times.size(); ++j)
    if (!group1.censored[j]) event_times.insert(group1.times[j]);

  LogRankResult res;
  if (event_times.empty()) {
    res.degenerate = true;
    return res;
  }

  for (double t : event_times) {
    long n0 = 0, n1 = 0, d0 = 0, d1 = 0;
    for (size_t j = 0; j < group0.times.size(); ++j) {
      if (group0.times[j] >= t) ++n0;
      if (group0.times[j] == t && !group0.censored[j]) ++d0;
    }
    for (size_t j = 0; j < group1.times.size(); ++j) {
      if (group1.times[j] >= t) ++n1;
      if (group1.times[j] == t && !group1.censored[j]) ++d1;
    }
    long n = n0 + n1;
    long d = d0 + d1;
    if (n == 0 || d == 0) continue;
    res.u += double(d1) - double(d) * double(n1) / double(n);
    if (n > 1)
      res.var_u += double(d) * double(n0) * double(n1) * double(n - d) /
                   (double(n) * double(n) * double(n - 1));
  }

  if (res.var_u <= 0.0) {
    res.degenerate = true;
    res.statistic = 0.0;
    res.p = 1.0;
    return res;
  }
  res.statistic = res.u * res.u / res.var_u;
  res.p = chi2_sf_1dof(res.statistic);
  return res;
}

}  // namespace kmband
