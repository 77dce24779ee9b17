#include "kmband/pvalue.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <stdexcept>

#include "kmband/numerics.hpp"

namespace kmband {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogHLo = -20.0;
constexpr double kLogHHi = 20.0;

// Minimum NLL with the observable outside both inclusion windows: the
// complement of their (merged) union, evaluated piecewise.
double neither_cost(const ObservableModel& model, const InclusionRange& r0,
                    const InclusionRange& r1) {
  std::vector<std::pair<double, double>> windows = {{r0.lower, r0.upper}, {r1.lower, r1.upper}};
  std::sort(windows.begin(), windows.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& w : windows) {
    if (!merged.empty() && w.first <= merged.back().second)
      merged.back().second = std::max(merged.back().second, w.second);
    else
      merged.push_back(w);
  }
  double best = kInf;
  double lo = -kInf;
  for (const auto& w : merged) {
    best = std::min(best, interval_minimum(model, lo, w.first));
    lo = w.second;
  }
  best = std::min(best, interval_minimum(model, lo, kInf));
  return best;
}

double golden_min_logh(const std::function<double(double)>& f, double lo, double hi,
                       double* arg_out) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < 200 && (b - a) > 1e-11; ++i) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(x2);
    }
  }
  double x = 0.5 * (a + b);
  if (arg_out) *arg_out = x;
  return f(x);
}

}  // namespace

double cox_nll_breslow(const TwoGroupCounts& counts, double hazard_ratio) {
  if (!(hazard_ratio > 0.0)) throw std::domain_error("cox_nll_breslow: H must be positive");
  double log_h = std::log(hazard_ratio);
  double nll = 0.0;
  for (size_t i = 0; i < counts.times.size(); ++i) {
    long d = counts.d0[i] + counts.d1[i];
    if (d == 0) continue;
    double denom = double(counts.r0[i]) + hazard_ratio * double(counts.r1[i]);
    if (denom <= 0.0) return kInf;
    nll -= double(counts.d1[i]) * log_h - double(d) * std::log(denom);
  }
  return nll;
}

double cox_nll_exact(const TwoGroupCounts& counts, double hazard_ratio) {
  if (!(hazard_ratio > 0.0)) throw std::domain_error("cox_nll_exact: H must be positive");
  double log_h = std::log(hazard_ratio);
  double nll = 0.0;
  for (size_t i = 0; i < counts.times.size(); ++i) {
    long r0 = counts.r0[i], r1 = counts.r1[i];
    long d = counts.d0[i] + counts.d1[i];
    if (d == 0) continue;
    if (r0 + r1 < d) return kInf;
    long m_lo = std::max(0L, d - r0);
    long m_hi = std::min(d, r1);
    // log-sum-exp over feasible group-1 death counts
    double max_term = -kInf;
    std::vector<double> terms;
    terms.reserve(size_t(m_hi - m_lo + 1));
    for (long m = m_lo; m <= m_hi; ++m) {
      double t = log_choose(r0, d - m) + log_choose(r1, m) + double(m) * log_h;
      terms.push_back(t);
      max_term = std::max(max_term, t);
    }
    double z = 0.0;
    for (double t : terms) z += std::exp(t - max_term);
    double log_z = max_term + std::log(z);
    nll -= log_choose(r0, counts.d0[i]) + log_choose(r1, counts.d1[i]) +
           double(counts.d1[i]) * log_h - log_z;
  }
  return nll;
}

TwoGroupProblem build_two_group_problem(const std::vector<PatientRecord>& patients,
                                        const InclusionRange& range0,
                                        const InclusionRange& range1, double freeze_cap) {
  TwoGroupProblem prob;
  prob.patients = patients;
  prob.range0 = range0;
  prob.range1 = range1;
  prob.freeze_cap = freeze_cap;
  prob.cost0.reserve(patients.size());
  prob.cost1.reserve(patients.size());
  prob.cost_neither.reserve(patients.size());
  prob.nominal.reserve(patients.size());
  for (const auto& p : patients) {
    double nom = nominal_value(p.observable);
    prob.cost0.push_back(penalty(p.observable, range0).nll_in);
    prob.cost1.push_back(penalty(p.observable, range1).nll_in);
    prob.cost_neither.push_back(neither_cost(p.observable, range0, range1));
    if (range0.contains(nom))
      prob.nominal.push_back(0);
    else if (range1.contains(nom))
      prob.nominal.push_back(1);
    else
      prob.nominal.push_back(-1);
  }
  return prob;
}

TwoGroupCounts two_group_counts(const TwoGroupProblem& problem,
                                const AssignmentVector& assignment) {
  std::set<double> event_times;
  for (const auto& p : problem.patients)
    if (!p.censored) event_times.insert(p.survival_time);

  TwoGroupCounts counts;
  counts.times.assign(event_times.begin(), event_times.end());
  size_t nt = counts.times.size();
  counts.r0.assign(nt, 0);
  counts.d0.assign(nt, 0);
  counts.r1.assign(nt, 0);
  counts.d1.assign(nt, 0);
  for (size_t j = 0; j < problem.patients.size(); ++j) {
    int grp = assignment[j];
    if (grp < 0) continue;
    const auto& p = problem.patients[j];
    for (size_t i = 0; i < nt; ++i) {
      if (p.survival_time >= counts.times[i]) {
        (grp == 0 ? counts.r0[i] : counts.r1[i]) += 1;
      }
      if (!p.censored && p.survival_time == counts.times[i]) {
        (grp == 0 ? counts.d0[i] : counts.d1[i]) += 1;
      }
    }
  }
  return counts;
}

namespace {

struct AssignmentSearch {
  const TwoGroupProblem* prob;
  bool use_exact;
  bool fit_h;  // false: H fixed to 1

  std::vector<int> vars;              // ambiguous patient indices
  std::vector<double> suffix_min;     // remaining minimum region costs
  AssignmentVector assignment;
  double best = kInf;
  AssignmentVector best_assignment;
  double best_h = 1.0;

  double region_cost(size_t j, int grp) const {
    if (grp == 0) return prob->cost0[j];
    if (grp == 1) return prob->cost1[j];
    return prob->cost_neither[j];
  }

  double cox_min(const AssignmentVector& a, double* h_out) {
    TwoGroupCounts counts = two_group_counts(*prob, a);
    auto nll_of = [&](double log_h) {
      double h = std::exp(log_h);
      return use_exact ? cox_nll_exact(counts, h) : cox_nll_breslow(counts, h);
    };
    if (!fit_h) {
      if (h_out) *h_out = 1.0;
      return nll_of(0.0);
    }
    double arg = 0.0;
    double val = golden_min_logh(nll_of, kLogHLo, kLogHHi, &arg);
    if (h_out) *h_out = std::exp(arg);
    return val;
  }

  void run() {
    assignment = prob->nominal;
    suffix_min.assign(vars.size() + 1, 0.0);
    for (int i = int(vars.size()) - 1; i >= 0; --i) {
      size_t j = size_t(vars[i]);
      double m = std::min({prob->cost0[j], prob->cost1[j], prob->cost_neither[j]});
      suffix_min[i] = suffix_min[i + 1] + m;
    }
    double frozen = 0.0;
    for (size_t j = 0; j < assignment.size(); ++j) {
      bool is_var = std::find(vars.begin(), vars.end(), int(j)) != vars.end();
      if (!is_var) frozen += region_cost(j, assignment[j]);
    }
    double vars_nominal = 0.0;
    for (int v : vars) vars_nominal += region_cost(size_t(v), assignment[v]);
    double h = 1.0;
    best = cox_min(assignment, &h) + frozen + vars_nominal;
    best_assignment = assignment;
    best_h = h;
    if (!vars.empty()) dfs(0, frozen);
  }

  void dfs(size_t idx, double patient_partial) {
    if (patient_partial + suffix_min[idx] >= best) return;  // Cox NLL >= 0
    if (idx == vars.size()) {
      double h = 1.0;
      double nll = cox_min(assignment, &h) + patient_partial;
      if (nll < best) {
        best = nll;
        best_assignment = assignment;
        best_h = h;
      }
      return;
    }
    size_t j = size_t(vars[idx]);
    struct Option {
      int grp;
      double cost;
    };
    std::vector<Option> opts;
    for (int grp : {0, 1, -1}) {
      double c = region_cost(j, grp);
      if (std::isfinite(c)) opts.push_back({grp, c});
    }
    std::sort(opts.begin(), opts.end(),
              [](const Option& a, const Option& b) { return a.cost < b.cost; });
    int saved = assignment[j];
    for (const auto& o : opts) {
      assignment[j] = o.grp;
      dfs(idx + 1, patient_partial + o.cost);
    }
    assignment[j] = saved;
  }
};

std::vector<int> ambiguous_patients(const TwoGroupProblem& prob) {
  std::vector<std::pair<double, int>> gaps;
  for (size_t j = 0; j < prob.patients.size(); ++j) {
    double best = std::min({prob.cost0[j], prob.cost1[j], prob.cost_neither[j]});
    int n_close = 0;
    for (double c : {prob.cost0[j], prob.cost1[j], prob.cost_neither[j]})
      if (std::isfinite(c) && c - best <= prob.freeze_cap) ++n_close;
    if (n_close < 2) continue;
    double second = kInf;
    for (double c : {prob.cost0[j], prob.cost1[j], prob.cost_neither[j]})
      if (c > best && c < second) second = c;
    gaps.emplace_back(second - best, int(j));
  }
  std::sort(gaps.begin(), gaps.end());
  std::vector<int> out;
  for (size_t i = 0; i < gaps.size() && int(i) < prob.max_branch_patients; ++i)
    out.push_back(gaps[i].second);
  std::sort(out.begin(), out.end());
  return out;
}

bool counts_degenerate(const TwoGroupCounts& counts) {
  long deaths = 0, risk0 = 0, risk1 = 0;
  for (size_t i = 0; i < counts.times.size(); ++i) {
    deaths += counts.d0[i] + counts.d1[i];
    risk0 += counts.r0[i];
    risk1 += counts.r1[i];
  }
  return deaths == 0 || risk0 == 0 || risk1 == 0;
}

}  // namespace

PValueReport likelihood_pvalue(const TwoGroupProblem& problem, const PValueOptions& options) {
  PValueReport report;
  report.method = options.float_assignments ? (options.use_exact ? "exact" : "breslow")
                                            : (options.use_exact ? "cox_only_exact" : "cox_only_breslow");

  TwoGroupCounts nominal_counts = two_group_counts(problem, problem.nominal);
  if (counts_degenerate(nominal_counts)) {
    report.degenerate = true;
    return report;
  }

  AssignmentSearch null_search;
  null_search.prob = &problem;
  null_search.use_exact = options.use_exact;
  null_search.fit_h = false;
  if (options.float_assignments) null_search.vars = ambiguous_patients(problem);
  null_search.run();

  AssignmentSearch alt_search;
  alt_search.prob = &problem;
  alt_search.use_exact = options.use_exact;
  alt_search.fit_h = true;
  if (options.float_assignments) alt_search.vars = ambiguous_patients(problem);
  alt_search.run();

  report.nll_null = null_search.best;
  report.nll_alt = alt_search.best;
  report.hazard_ratio = alt_search.best_h;
  double stat = 2.0 * (report.nll_null - report.nll_alt);
  if (stat < 0.0 && stat > -1e-9) stat = 0.0;  // numerical floor
  report.statistic = std::max(stat, 0.0);
  report.p = chi2_sf_1dof(report.statistic);
  return report;
}

}  // namespace kmband
