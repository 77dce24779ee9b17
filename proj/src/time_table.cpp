#include "kmband/time_table.hpp"

#include <algorithm>
#include <cassert>
#include <set>
#include <stdexcept>

namespace kmband {

TimeTable build_time_table(const std::vector<PatientRecord>& patients) {
  if (patients.empty()) throw std::invalid_argument("build_time_table: empty cohort");

  std::set<double> death_times;
  for (const auto& p : patients)
    if (!p.censored) death_times.insert(p.survival_time);

  TimeTable table;
  table.n_patients = int(patients.size());
  table.times.assign(death_times.begin(), death_times.end());
  const int nt = int(table.times.size());
  table.death_members.resize(nt);
  table.risk_bucket.resize(patients.size(), -1);

  for (size_t j = 0; j < patients.size(); ++j) {
    const auto& p = patients[j];
    // last event time at or before t_j; the patient is at risk there and earlier
    auto it = std::upper_bound(table.times.begin(), table.times.end(), p.survival_time);
    table.risk_bucket[j] = int(it - table.times.begin()) - 1;
    if (!p.censored) {
      auto dt = std::lower_bound(table.times.begin(), table.times.end(), p.survival_time);
      table.death_members[dt - table.times.begin()].push_back(int(j));
    }
  }

  // A censored patient with time in [t_i, t_{i+1}) leaves the risk set between
  // the two event times, which blocks collapsing them into one group.
  table.censor_break_after.assign(std::max(nt - 1, 0), 0);
  for (const auto& p : patients) {
    if (!p.censored) continue;
    for (int i = 0; i + 1 < nt; ++i) {
      if (p.survival_time >= table.times[i] && p.survival_time < table.times[i + 1])
        table.censor_break_after[i] = 1;
    }
  }
  return table;
}

CountVectors TimeTable::counts(const InclusionVector& inclusion) const {
  assert(int(inclusion.size()) == n_patients);
  const int nt = int(times.size());
  CountVectors out;
  out.r.assign(nt, 0);
  out.d.assign(nt, 0);
  // bucket counts of included patients, then suffix-sum for the risk sets
  for (int j = 0; j < n_patients; ++j) {
    if (inclusion[j] && risk_bucket[j] >= 0) out.r[risk_bucket[j]] += 1;
  }
  for (int i = nt - 2; i >= 0; --i) out.r[i] += out.r[i + 1];
  for (int i = 0; i < nt; ++i) {
    for (int j : death_members[i])
      if (inclusion[j]) out.d[i] += 1;
  }
  return out;
}

std::vector<GroupSpan> collapse_groups(const TimeTable& table) {
  return collapse_groups_split(table, -1);
}

std::vector<GroupSpan> collapse_groups_split(const TimeTable& table, int split_after) {
  std::vector<GroupSpan> groups;
  const int nt = int(table.times.size());
  int begin = 0;
  for (int i = 0; i < nt; ++i) {
    bool brk = (i + 1 == nt) || table.censor_break_after[i] || (i == split_after);
    if (brk) {
      groups.push_back({begin, i + 1});
      begin = i + 1;
    }
  }
  return groups;
}

std::vector<std::pair<double, double>> nominal_curve(const TimeTable& table,
                                                     const InclusionVector& inclusion) {
  CountVectors cv = table.counts(inclusion);
  std::vector<std::pair<double, double>> curve;
  curve.reserve(table.times.size());
  double s = 1.0;
  for (size_t i = 0; i < table.times.size(); ++i) {
    if (cv.d[i] > 0) {
      assert(cv.r[i] >= cv.d[i] && cv.r[i] > 0);
      s *= 1.0 - double(cv.d[i]) / double(cv.r[i]);
    }
    curve.emplace_back(table.times[i], s);
  }
  return curve;
}

}  // namespace kmband
