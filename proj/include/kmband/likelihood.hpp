#pragma once

#include <vector>

#include "kmband/observables.hpp"
#include "kmband/time_table.hpp"

namespace kmband {

/// Per-group conditional survival probabilities; the curve value is their
/// running product.
using SurvivalVector = std::vector<double>;

struct NllBreakdown {
  double binomial = 0.0;
  double patient = 0.0;
  double multinomial_offset = 0.0;
  double total = 0.0;
};

/// -sum_i [ log C(r_i, d_i) + d_i log(1-p_i) + (r_i-d_i) log p_i ].
/// A p at an open boundary against a nonzero opposing count yields +inf.
double binomial_nll(const std::vector<long>& r, const std::vector<long>& d,
                    const SurvivalVector& p);

/// Single-term binomial NLL minimized over p (attained at p = 1 - d/r).
double binomial_nll_min(long r, long d);

/// Collapsed-group correction: log(D!) - D log D - sum_i [log(d_i!) - d_i log d_i]
/// over the group's member death counts, D = sum d_i.
double multinomial_offset(const std::vector<long>& member_deaths);

/// Branch form of the per-patient term: sum_j a_j nll_in + (1-a_j) nll_out.
/// Equal to the pure inclusion-penalty sum up to an a-independent constant.
double patient_nll(const std::vector<PenaltyPair>& penalties, const InclusionVector& inclusion);

/// Full breakdown for one (inclusion, p) configuration over the table's
/// collapse groups; p is indexed by group.
NllBreakdown total_nll(const TimeTable& table, const std::vector<GroupSpan>& groups,
                       const std::vector<PenaltyPair>& penalties,
                       const InclusionVector& inclusion, const SurvivalVector& p);

}  // namespace kmband
