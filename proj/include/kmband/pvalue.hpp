#pragma once

#include <string>
#include <vector>

#include "kmband/datacard.hpp"
#include "kmband/observables.hpp"

namespace kmband {

/// Per patient: 0 (first curve), 1 (second curve), or -1 (neither).
using AssignmentVector = std::vector<int>;

/// At-risk and death counts for both curves over the union of event times.
struct TwoGroupCounts {
  std::vector<double> times;
  std::vector<long> r0, d0, r1, d1;
};

/// Breslow partial-likelihood NLL under a constant hazard ratio:
/// -sum_i [ d_i1 log H - d_i log(r_i0 + H r_i1) ].
double cox_nll_breslow(const TwoGroupCounts& counts, double hazard_ratio);

/// Exact partial-likelihood NLL; the per-time normalization sums
/// C(r_i0, d_i - m) C(r_i1, m) H^m over feasible group-1 death counts m.
/// Reduces to the hypergeometric log-pmf at H = 1 and matches the Breslow
/// form whenever no event time has more than one death.
double cox_nll_exact(const TwoGroupCounts& counts, double hazard_ratio);

struct TwoGroupProblem {
  std::vector<PatientRecord> patients;
  InclusionRange range0, range1;
  std::vector<double> cost0, cost1, cost_neither;  // min NLL per region
  AssignmentVector nominal;
  double freeze_cap = 25.0;
  int max_branch_patients = 14;
};

TwoGroupProblem build_two_group_problem(const std::vector<PatientRecord>& patients,
                                        const InclusionRange& range0,
                                        const InclusionRange& range1, double freeze_cap = 25.0);

struct PValueOptions {
  bool float_assignments = true;
  bool use_exact = false;
};

struct PValueReport {
  double nll_null = 0.0;
  double nll_alt = 0.0;
  double hazard_ratio = 1.0;   // fitted H under the alternative
  double statistic = 0.0;      // 2 (nll_null - nll_alt)
  double p = 1.0;
  std::string method;          // breslow | exact | cox_only_breslow | cox_only_exact
  bool degenerate = false;
};

/// Likelihood-ratio p-value for identical curves: null holds H = 1, the
/// alternative floats H; both optionally minimize over patient assignments.
PValueReport likelihood_pvalue(const TwoGroupProblem& problem, const PValueOptions& options);

/// Counts for a fixed assignment (union of candidate event times).
TwoGroupCounts two_group_counts(const TwoGroupProblem& problem, const AssignmentVector& assignment);

}  // namespace kmband
