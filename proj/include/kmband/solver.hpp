#pragma once

#include <map>
#include <vector>

#include "kmband/likelihood.hpp"
#include "kmband/time_table.hpp"

namespace kmband {

enum class UncertaintyMode { full, binomial_only, patient_wise_only };

/// One curve's optimization problem: the event table over the candidate
/// cohort, per-patient branch penalties for the inclusion window, and the
/// nominal inclusion. Patients whose cheaper-vs-dearer branch gap exceeds
/// freeze_cap nats are pinned to their nominal side during discrete search;
/// a flip that expensive can never enter an optimum within the confidence
/// thresholds used here.
struct Problem {
  TimeTable table;
  std::vector<PenaltyPair> penalties;
  InclusionVector nominal_inclusion;
  double freeze_cap = 25.0;
  int max_branch_patients = 22;
};

Problem build_problem(const std::vector<PatientRecord>& patients, const InclusionRange& range,
                      double freeze_cap = 25.0);

struct InnerSolution {
  SurvivalVector p;
  double nll = 0.0;
  double mu = 0.0;  // stationarity multiplier; 0 at the unconstrained optimum
};

/// Minimize the binomial NLL over per-group p subject to prod p_i = s_target.
/// Stationarity family: p_i(mu) = (r_i - d_i - mu)/(r_i - mu) for groups with
/// deaths; zero-death groups sit at p = 1 unless the cheapest of them must
/// absorb residual probability mass.
InnerSolution inner_solve(const std::vector<long>& r, const std::vector<long>& d,
                          double s_target);

struct ProfilePoint {
  double survival = 1.0;
  double nll = 0.0;
  InclusionVector inclusion;
  SurvivalVector p;
};

/// Unconstrained minimum of the mode's NLL over its free parameters.
ProfilePoint global_minimum(const Problem& problem, UncertaintyMode mode);

/// Constrained minimum with prod_{i<=time_index} p_i = s_target
/// (full or binomial_only modes).
ProfilePoint profile_scan(const Problem& problem, double s_target, int time_index,
                          UncertaintyMode mode);

/// Patient-wise-only scan: achievable curve values at time_index with the
/// minimum patient NLL subject to "at least as far from the nominal value",
/// as a step profile sorted by survival.
std::vector<ProfilePoint> discrete_scan(const Problem& problem, int time_index);

struct CurvePoint {
  double time = 0.0;
  double s_nominal = 1.0;
  double s_best = 1.0;
  std::map<double, std::pair<double, double>> ci;  // level -> (lo, hi)
};

/// Profile-likelihood band at each event time. Bounds solve
/// 2*(nll(S) - nll_min) = threshold(level) and saturate at 0 or 1 when the
/// profile never reaches the threshold on that side.
std::vector<CurvePoint> confidence_band(const Problem& problem, const std::vector<double>& levels,
                                        UncertaintyMode mode);

/// 2*dNLL threshold: 1.0 at 68% CL and 3.84 at 95% CL; the chi-square(1)
/// quantile for any other level.
double threshold_for_level(double level);

const char* mode_name(UncertaintyMode mode);

}  // namespace kmband
