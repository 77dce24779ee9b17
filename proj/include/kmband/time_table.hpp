#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "kmband/datacard.hpp"

namespace kmband {

using InclusionVector = std::vector<std::uint8_t>;

struct CountVectors {
  std::vector<long> r;  // at risk per event time
  std::vector<long> d;  // deaths per event time
};

/// Half-open run [begin, end) of consecutive event-time indices that form one
/// collapsible group (no candidate censoring between member times).
struct GroupSpan {
  int begin = 0;
  int end = 0;
};

/// Event-time structure over the full candidate cohort. Times are the
/// distinct, increasing instants with at least one non-censored death among
/// all candidates; counts are evaluated against an inclusion vector.
struct TimeTable {
  std::vector<double> times;
  std::vector<std::vector<int>> death_members;  // per time: dying patient ids
  std::vector<int> risk_bucket;  // per patient: last time index with t_i <= t_j, else -1
  std::vector<std::uint8_t> censor_break_after;  // per time i: censoring in [t_i, t_{i+1})
  int n_patients = 0;

  bool empty() const { return times.empty(); }

  /// r_i and d_i for an inclusion vector, O(patients + times).
  CountVectors counts(const InclusionVector& inclusion) const;
};

TimeTable build_time_table(const std::vector<PatientRecord>& patients);

/// Maximal collapsible runs (static: censor times are independent of the
/// inclusion vector, so group boundaries never move).
std::vector<GroupSpan> collapse_groups(const TimeTable& table);

/// As collapse_groups, but with an extra boundary forced after time index
/// `split_after`, so a prefix of whole groups covers times [0, split_after].
std::vector<GroupSpan> collapse_groups_split(const TimeTable& table, int split_after);

/// (time, product-limit survival) under the given inclusion; times with no
/// included deaths contribute factor 1.
std::vector<std::pair<double, double>> nominal_curve(const TimeTable& table,
                                                     const InclusionVector& inclusion);

}  // namespace kmband
