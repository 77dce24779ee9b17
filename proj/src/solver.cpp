#include "kmband/solver.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "kmband/numerics.hpp"

namespace kmband {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCurveEps = 1e-12;  // probe clamp for S near 0 and 1
constexpr double kDiscreteScanCostCap = 16.0;  // nats; far beyond any CI threshold

struct DeathGroup {
  double r, d;
  long rl, dl;
};

double log_survival_product(const std::vector<DeathGroup>& groups, double mu) {
  double s = 0.0;
  for (const auto& g : groups) s += std::log1p(-g.d / (g.r - mu));
  return s;
}

}  // namespace

InnerSolution inner_solve(const std::vector<long>& r, const std::vector<long>& d,
                          double s_target) {
  if (!(s_target > 0.0 && s_target < 1.0))
    throw std::domain_error("inner_solve: s_target must be in (0,1)");
  if (r.size() != d.size()) throw std::invalid_argument("inner_solve: length mismatch");

  const size_t n = r.size();
  std::vector<DeathGroup> death;
  std::vector<size_t> death_idx;
  long r_zero_min = -1;
  size_t absorber_idx = n;
  for (size_t i = 0; i < n; ++i) {
    if (d[i] < 0 || d[i] > r[i]) throw std::invalid_argument("inner_solve: d out of range");
    if (d[i] > 0) {
      death.push_back({double(r[i]), double(d[i]), r[i], d[i]});
      death_idx.push_back(i);
    } else if (r_zero_min < 0 || r[i] < r_zero_min) {
      r_zero_min = r[i];
      absorber_idx = i;
    }
  }

  InnerSolution out;
  out.p.assign(n, 1.0);
  const double target = std::log(s_target);

  if (death.empty()) {
    if (absorber_idx == n) throw std::domain_error("inner_solve: no groups");
    // all probability mass goes to the cheapest zero-death group
    out.p[absorber_idx] = s_target;
    out.nll = double(r_zero_min) * (-target);
    out.mu = double(r_zero_min);
    return out;
  }

  double hi = kInf;
  for (const auto& g : death) hi = std::min(hi, g.r - g.d);

  bool absorber_mode = false;
  double mu;
  if (absorber_idx != n && double(r_zero_min) < hi &&
      log_survival_product(death, double(r_zero_min)) > target) {
    // Death groups alone cannot cheaply reach s_target; the smallest-risk
    // zero-death group absorbs the remainder at marginal cost r_zero_min.
    mu = double(r_zero_min);
    absorber_mode = true;
  } else {
    double lo = hi - 1.0;
    double step = 1.0;
    while (log_survival_product(death, lo) < target && step < 1e18) {
      step *= 4.0;
      lo = hi - step;
    }
    double b_hi = hi;  // h -> -inf there
    for (int it = 0; it < 300; ++it) {
      double mid = 0.5 * (lo + b_hi);
      if (!(mid > lo && mid < b_hi)) break;
      if (log_survival_product(death, mid) >= target)
        lo = mid;
      else
        b_hi = mid;
      if (b_hi - lo <= 1e-14 * std::max(1.0, std::fabs(lo) + std::fabs(b_hi))) break;
    }
    mu = lo;
  }

  double nll = 0.0;
  for (size_t k = 0; k < death.size(); ++k) {
    const auto& g = death[k];
    double q = g.d / (g.r - mu);  // 1 - p
    out.p[death_idx[k]] = 1.0 - q;
    nll -= log_choose(g.rl, g.dl) + g.d * (std::log(g.d) - std::log(g.r - mu)) +
           (g.r - g.d) * std::log1p(-q);
  }
  if (absorber_mode) {
    double log_p_abs = target - log_survival_product(death, mu);
    out.p[absorber_idx] = std::exp(log_p_abs);
    nll += double(r_zero_min) * (-log_p_abs);
  }
  out.nll = nll;
  out.mu = mu;
  return out;
}

Problem build_problem(const std::vector<PatientRecord>& patients, const InclusionRange& range,
                      double freeze_cap) {
  Problem prob;
  prob.table = build_time_table(patients);
  prob.freeze_cap = freeze_cap;
  prob.penalties.reserve(patients.size());
  prob.nominal_inclusion.reserve(patients.size());
  for (const auto& p : patients) {
    prob.penalties.push_back(penalty(p.observable, range));
    prob.nominal_inclusion.push_back(range.contains(nominal_value(p.observable)) ? 1 : 0);
  }
  return prob;
}

namespace {

struct BranchVar {
  int patient;
  double in_cost, out_cost;
  double gap;  // |nll_in - nll_out|
};

std::vector<BranchVar> branch_variables(const Problem& prob) {
  std::vector<BranchVar> vars;
  for (size_t j = 0; j < prob.penalties.size(); ++j) {
    const auto& pen = prob.penalties[j];
    if (!std::isfinite(pen.nll_in) || !std::isfinite(pen.nll_out)) continue;
    double gap = std::fabs(pen.delta);
    if (gap > prob.freeze_cap) continue;
    vars.push_back({int(j), pen.nll_in, pen.nll_out, gap});
  }
  if (int(vars.size()) > prob.max_branch_patients) {
    // keep the cheapest flips as branch variables, pin the rest to nominal
    std::sort(vars.begin(), vars.end(),
              [](const BranchVar& a, const BranchVar& b) { return a.gap < b.gap; });
    vars.resize(prob.max_branch_patients);
  }
  std::sort(vars.begin(), vars.end(),
            [](const BranchVar& a, const BranchVar& b) { return a.gap > b.gap; });
  return vars;
}

// Objective pieces shared by the discrete searches. The binomial part is
// evaluated either unconstrained (sum of per-time minima; collapsing is an
// identity there) or constrained through the scan grouping.
struct ScanEval {
  const Problem* prob = nullptr;
  bool constrained = false;
  double s_target = 0.0;
  int time_index = -1;
  std::vector<GroupSpan> groups;  // grouping split after time_index
  size_t prefix_groups = 0;
  std::map<std::vector<long>, double> inner_memo;

  void setup_scan(const Problem& p, int idx, double s) {
    prob = &p;
    constrained = true;
    time_index = idx;
    s_target = s;
    groups = collapse_groups_split(p.table, idx);
    prefix_groups = 0;
    while (prefix_groups < groups.size() && groups[prefix_groups].end <= idx + 1) ++prefix_groups;
  }

  void setup_global(const Problem& p) {
    prob = &p;
    constrained = false;
  }

  double binomial_part(const CountVectors& cv) {
    if (!constrained) {
      double nll = 0.0;
      for (size_t i = 0; i < cv.r.size(); ++i) nll += binomial_nll_min(cv.r[i], cv.d[i]);
      return nll;
    }
    std::vector<long> key;
    key.reserve(2 * prefix_groups);
    double offsets = 0.0;
    std::vector<long> members;
    for (size_t g = 0; g < prefix_groups; ++g) {
      long rg = cv.r[groups[g].begin];
      long dg = 0;
      members.clear();
      for (int i = groups[g].begin; i < groups[g].end; ++i) {
        dg += cv.d[i];
        members.push_back(cv.d[i]);
      }
      if (members.size() > 1) offsets += multinomial_offset(members);
      key.push_back(rg);
      key.push_back(dg);
    }
    double inner;
    auto it = inner_memo.find(key);
    if (it != inner_memo.end()) {
      inner = it->second;
    } else {
      std::vector<long> rg(prefix_groups), dg(prefix_groups);
      for (size_t g = 0; g < prefix_groups; ++g) {
        rg[g] = key[2 * g];
        dg[g] = key[2 * g + 1];
      }
      inner = inner_solve(rg, dg, s_target).nll;
      inner_memo.emplace(std::move(key), inner);
    }
    // times beyond the scan index are unconstrained; per-time minima are
    // exactly the collapsed minima plus their offsets
    double tail = 0.0;
    for (size_t i = size_t(time_index) + 1; i < cv.r.size(); ++i)
      tail += binomial_nll_min(cv.r[i], cv.d[i]);
    return inner + offsets + tail;
  }

  double eval(const InclusionVector& a) {
    CountVectors cv = prob->table.counts(a);
    return binomial_part(cv) + patient_nll(prob->penalties, a);
  }
};

// Exact branch-and-bound over the flip variables. Node bound: decided branch
// costs plus the cheaper branch of every undecided patient (the binomial part
// is nonnegative, so dropping it keeps the bound admissible).
struct DiscreteMinimizer {
  ScanEval* ev;
  std::vector<BranchVar> vars;
  std::vector<double> suffix_min;
  InclusionVector a;
  InclusionVector best_a;
  double best = kInf;
  double patient_frozen = 0.0;

  void run(const Problem& prob) {
    a = prob.nominal_inclusion;
    suffix_min.assign(vars.size() + 1, 0.0);
    for (int i = int(vars.size()) - 1; i >= 0; --i)
      suffix_min[i] = suffix_min[i + 1] + std::min(vars[i].in_cost, vars[i].out_cost);
    double patient_all = patient_nll(prob.penalties, a);
    double vars_at_nominal = 0.0;
    for (const auto& v : vars) vars_at_nominal += a[v.patient] ? v.in_cost : v.out_cost;
    patient_frozen = patient_all - vars_at_nominal;

    best = ev->eval(a);
    best_a = a;
    dfs(0, patient_frozen);
  }

  void dfs(size_t idx, double patient_partial) {
    if (patient_partial + suffix_min[idx] >= best) return;
    if (idx == vars.size()) {
      CountVectors cv = ev->prob->table.counts(a);
      double nll = ev->binomial_part(cv) + patient_partial;
      if (nll < best) {
        best = nll;
        best_a = a;
      }
      return;
    }
    const BranchVar& v = vars[idx];
    std::uint8_t first = v.in_cost <= v.out_cost ? 1 : 0;
    for (int k = 0; k < 2; ++k) {
      std::uint8_t side = k == 0 ? first : std::uint8_t(1 - first);
      a[v.patient] = side;
      dfs(idx + 1, patient_partial + (side ? v.in_cost : v.out_cost));
    }
    a[v.patient] = ev->prob->nominal_inclusion[v.patient];
  }
};

SurvivalVector empirical_per_time(const CountVectors& cv) {
  SurvivalVector p(cv.r.size(), 1.0);
  for (size_t i = 0; i < cv.r.size(); ++i)
    if (cv.r[i] > 0 && cv.d[i] > 0) p[i] = 1.0 - double(cv.d[i]) / double(cv.r[i]);
  return p;
}

std::vector<double> prefix_survival(const CountVectors& cv) {
  std::vector<double> s(cv.r.size(), 1.0);
  double run = 1.0;
  for (size_t i = 0; i < cv.r.size(); ++i) {
    if (cv.r[i] > 0 && cv.d[i] > 0) run *= 1.0 - double(cv.d[i]) / double(cv.r[i]);
    s[i] = run;
  }
  return s;
}

double patient_floor(const Problem& prob) {
  double nll = 0.0;
  for (const auto& pen : prob.penalties) nll += std::min(pen.nll_in, pen.nll_out);
  return nll;
}

}  // namespace

ProfilePoint global_minimum(const Problem& problem, UncertaintyMode mode) {
  ProfilePoint out;
  if (mode == UncertaintyMode::patient_wise_only) {
    out.inclusion = problem.nominal_inclusion;
    out.nll = patient_nll(problem.penalties, problem.nominal_inclusion);
    CountVectors cv = problem.table.counts(out.inclusion);
    out.p = empirical_per_time(cv);
    out.survival = 1.0;
    for (double pi : out.p) out.survival *= pi;
    return out;
  }

  ScanEval ev;
  ev.setup_global(problem);
  DiscreteMinimizer mini;
  mini.ev = &ev;
  if (mode == UncertaintyMode::full) mini.vars = branch_variables(problem);
  mini.run(problem);

  out.inclusion = mini.best_a;
  out.nll = mini.best;
  CountVectors cv = problem.table.counts(out.inclusion);
  out.p = empirical_per_time(cv);
  out.survival = 1.0;
  for (double pi : out.p) out.survival *= pi;
  return out;
}

ProfilePoint profile_scan(const Problem& problem, double s_target, int time_index,
                          UncertaintyMode mode) {
  if (mode == UncertaintyMode::patient_wise_only)
    throw std::invalid_argument("profile_scan: use discrete_scan for patient_wise_only");
  if (!(s_target > 0.0 && s_target < 1.0))
    throw std::domain_error("profile_scan: s_target must be in (0,1)");
  if (time_index < 0 || time_index >= int(problem.table.times.size()))
    throw std::out_of_range("profile_scan: time_index");

  ScanEval ev;
  ev.setup_scan(problem, time_index, s_target);
  DiscreteMinimizer mini;
  mini.ev = &ev;
  if (mode == UncertaintyMode::full) mini.vars = branch_variables(problem);
  mini.run(problem);

  ProfilePoint out;
  out.survival = s_target;
  out.nll = mini.best;
  out.inclusion = mini.best_a;

  CountVectors cv = problem.table.counts(out.inclusion);
  std::vector<long> rg(ev.prefix_groups), dg(ev.prefix_groups);
  for (size_t g = 0; g < ev.prefix_groups; ++g) {
    rg[g] = cv.r[ev.groups[g].begin];
    dg[g] = 0;
    for (int i = ev.groups[g].begin; i < ev.groups[g].end; ++i) dg[g] += cv.d[i];
  }
  InnerSolution inner = inner_solve(rg, dg, s_target);
  out.p = inner.p;
  for (size_t g = ev.prefix_groups; g < ev.groups.size(); ++g) {
    long r = cv.r[ev.groups[g].begin];
    long d = 0;
    for (int i = ev.groups[g].begin; i < ev.groups[g].end; ++i) d += cv.d[i];
    out.p.push_back(r > 0 && d > 0 ? 1.0 - double(d) / double(r) : 1.0);
  }
  return out;
}

std::vector<ProfilePoint> discrete_scan(const Problem& problem, int time_index) {
  if (time_index < 0 || time_index >= int(problem.table.times.size()))
    throw std::out_of_range("discrete_scan: time_index");

  std::vector<BranchVar> vars = branch_variables(problem);
  double floor = patient_floor(problem);

  // Enumerate flip combinations, recording the curve value at time_index and
  // the patient NLL. Combinations more than kDiscreteScanCostCap nats above
  // the floor cannot matter for any confidence level used here.
  std::map<double, double> value_cost;  // S -> min patient NLL
  InclusionVector a = problem.nominal_inclusion;
  double patient_all = patient_nll(problem.penalties, a);
  double vars_at_nominal = 0.0;
  for (const auto& v : vars) vars_at_nominal += a[v.patient] ? v.in_cost : v.out_cost;
  double frozen = patient_all - vars_at_nominal;

  std::function<void(size_t, double)> enumerate = [&](size_t idx, double patient_partial) {
    double remaining = 0.0;
    for (size_t i = idx; i < vars.size(); ++i)
      remaining += std::min(vars[i].in_cost, vars[i].out_cost);
    if (patient_partial + remaining - floor > kDiscreteScanCostCap) return;
    if (idx == vars.size()) {
      CountVectors cv = problem.table.counts(a);
      std::vector<double> s = prefix_survival(cv);
      double value = s[time_index];
      auto it = value_cost.find(value);
      if (it == value_cost.end() || patient_partial < it->second)
        value_cost[value] = patient_partial;
      return;
    }
    const BranchVar& v = vars[idx];
    for (std::uint8_t side : {std::uint8_t(1), std::uint8_t(0)}) {
      a[v.patient] = side;
      enumerate(idx + 1, patient_partial + (side ? v.in_cost : v.out_cost));
    }
    a[v.patient] = problem.nominal_inclusion[v.patient];
  };
  enumerate(0, frozen);

  // Nominal curve value splits the two sides of the "at least as far" scan.
  CountVectors nom_cv = problem.table.counts(problem.nominal_inclusion);
  double s_hat = prefix_survival(nom_cv)[time_index];

  std::vector<std::pair<double, double>> pts(value_cost.begin(), value_cost.end());
  std::vector<ProfilePoint> out(pts.size());
  // prefix minima toward low S, suffix minima toward high S
  std::vector<double> lo_min(pts.size()), hi_min(pts.size());
  double run = kInf;
  for (size_t i = 0; i < pts.size(); ++i) {
    run = std::min(run, pts[i].second);
    lo_min[i] = run;
  }
  run = kInf;
  for (size_t i = pts.size(); i-- > 0;) {
    run = std::min(run, pts[i].second);
    hi_min[i] = run;
  }
  for (size_t i = 0; i < pts.size(); ++i) {
    out[i].survival = pts[i].first;
    out[i].nll = pts[i].first <= s_hat ? lo_min[i] : hi_min[i];
    if (pts[i].first == s_hat) out[i].nll = std::min(lo_min[i], hi_min[i]);
  }
  return out;
}

double threshold_for_level(double level) {
  if (std::fabs(level - 0.68) < 1e-9) return 1.0;
  if (std::fabs(level - 0.95) < 1e-9) return 3.84;
  return chi2_quantile_1dof(level);
}

namespace {

double logit(double s) { return std::log(s / (1.0 - s)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Threshold crossing of 2*(profile(S) - nll_min) on one side of s_best;
// returns the saturation value when the profile never reaches the threshold.
double band_bound(const std::function<double(double)>& profile, double nll_min, double s_best,
                  double threshold, bool upper) {
  const double extreme = upper ? 1.0 - kCurveEps : kCurveEps;
  const double saturate = upper ? 1.0 : 0.0;
  double start = std::clamp(s_best, kCurveEps, 1.0 - kCurveEps);
  auto objective = [&](double s) { return 2.0 * (profile(s) - nll_min) - threshold; };

  if ((upper && start >= extreme) || (!upper && start <= extreme)) return saturate;
  if (objective(extreme) <= 0.0) return saturate;

  const int n_probes = 64;
  double t0 = logit(start), t1 = logit(extreme);
  double prev = start;
  double prev_f = objective(prev);
  if (prev_f > 0.0) {
    // the profile minimum sits against this side's boundary
    return start;
  }
  for (int k = 1; k <= n_probes; ++k) {
    double s = k == n_probes ? extreme : sigmoid(t0 + (t1 - t0) * double(k) / n_probes);
    double f = objective(s);
    if (f > 0.0) {
      RootBracket bracket;
      bracket.lo = std::min(prev, s);
      bracket.hi = std::max(prev, s);
      bracket.tolerance = 1e-9;
      return find_root(objective, bracket);
    }
    prev = s;
    prev_f = f;
  }
  return saturate;
}

}  // namespace

std::vector<CurvePoint> confidence_band(const Problem& problem, const std::vector<double>& levels,
                                        UncertaintyMode mode) {
  std::vector<CurvePoint> band;
  if (problem.table.empty()) return band;

  auto nominal = nominal_curve(problem.table, problem.nominal_inclusion);
  const int nt = int(problem.table.times.size());
  band.resize(nt);
  for (int i = 0; i < nt; ++i) {
    band[i].time = nominal[i].first;
    band[i].s_nominal = nominal[i].second;
  }

  if (mode == UncertaintyMode::patient_wise_only) {
    double floor = patient_floor(problem);
    for (int i = 0; i < nt; ++i) {
      band[i].s_best = band[i].s_nominal;
      auto scan = discrete_scan(problem, i);
      for (double level : levels) {
        double half = threshold_for_level(level) / 2.0;
        double lo = band[i].s_nominal, hi = band[i].s_nominal;
        for (const auto& pt : scan) {
          if (pt.nll - floor <= half) {
            lo = std::min(lo, pt.survival);
            hi = std::max(hi, pt.survival);
          }
        }
        band[i].ci[level] = {lo, hi};
      }
    }
    return band;
  }

  ProfilePoint best = global_minimum(problem, mode);
  CountVectors best_cv = problem.table.counts(best.inclusion);
  std::vector<double> s_best = prefix_survival(best_cv);

  for (int i = 0; i < nt; ++i) {
    band[i].s_best = mode == UncertaintyMode::binomial_only ? band[i].s_nominal : s_best[i];
    std::map<double, double> memo;
    auto profile = [&](double s) {
      auto it = memo.find(s);
      if (it != memo.end()) return it->second;
      double nll = profile_scan(problem, s, i, mode).nll;
      memo.emplace(s, nll);
      return nll;
    };
    for (double level : levels) {
      double thr = threshold_for_level(level);
      double lo = band_bound(profile, best.nll, band[i].s_best, thr, false);
      double hi = band_bound(profile, best.nll, band[i].s_best, thr, true);
      band[i].ci[level] = {lo, hi};
    }
  }
  return band;
}

const char* mode_name(UncertaintyMode mode) {
  switch (mode) {
    case UncertaintyMode::full: return "full";
    case UncertaintyMode::binomial_only: return "binomial_only";
    case UncertaintyMode::patient_wise_only: return "patient_wise_only";
  }
  return "full";
}

}  // namespace kmband
