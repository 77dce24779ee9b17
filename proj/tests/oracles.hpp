#pragma once

// Test-only reference implementations, kept independent of the library's
// solution paths: dense grid searches, exhaustive enumeration, and projected
// gradient descent. Slow on purpose.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "kmband/likelihood.hpp"
#include "kmband/numerics.hpp"
#include "kmband/observables.hpp"
#include "kmband/solver.hpp"

namespace oracles {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ----- observables ---------------------------------------------------------

// NLL of the latent configuration: Poisson rate terms plus pull terms.
inline double model_nll_at(const kmband::ObservableModel& model, const std::vector<double>& rates,
                           double pull) {
  double nll = 0.0;
  auto pois = [](double lam, long k) {
    if (lam <= 0.0) return k > 0 ? kInf : 0.0;
    return lam - double(k) * std::log(lam) + kmband::log_factorial(k);
  };
  if (std::holds_alternative<kmband::PoissonObservable>(model.dist)) {
    nll += pois(rates[0], std::get<kmband::PoissonObservable>(model.dist).count);
  } else if (std::holds_alternative<kmband::PoissonDensityObservable>(model.dist)) {
    nll += pois(rates[0], std::get<kmband::PoissonDensityObservable>(model.dist).count);
  } else if (std::holds_alternative<kmband::PoissonRatioObservable>(model.dist)) {
    const auto& o = std::get<kmband::PoissonRatioObservable>(model.dist);
    nll += pois(rates[0], o.num) + pois(rates[1], o.denom);
  }
  nll += pull * pull / 2.0;
  return nll;
}

inline double observable_of(const kmband::ObservableModel& model, const std::vector<double>& rates,
                            double pull) {
  double sigma = model.sigma_combined();
  double factor = std::exp(pull * sigma);
  if (std::holds_alternative<kmband::FixedObservable>(model.dist))
    return std::get<kmband::FixedObservable>(model.dist).value * factor;
  if (std::holds_alternative<kmband::PoissonObservable>(model.dist)) return rates[0] * factor;
  if (std::holds_alternative<kmband::PoissonDensityObservable>(model.dist))
    return rates[0] / std::get<kmband::PoissonDensityObservable>(model.dist).area * factor;
  return rates[0] / rates[1] * factor;
}

// Dense grid search for the minimum NLL with the observable inside [lo, hi),
// refined three times around the coarse argmin so boundary-constrained
// optima resolve well below 1e-6 nats. Grids cover the latent rates and
// (when present) the combined pull; ratio models with systematics are not
// supported here.
inline double grid_region_minimum(const kmband::ObservableModel& model, double lo, double hi) {
  double sigma = model.sigma_combined();
  double best = kInf;
  std::vector<double> best_arg;

  auto consider = [&](const std::vector<double>& rates, double pull) {
    double obs = observable_of(model, rates, pull);
    if (!(obs >= lo && obs < hi)) return;
    double nll = model_nll_at(model, rates, pull);
    if (nll < best) {
      best = nll;
      best_arg = rates;
      best_arg.push_back(pull);
    }
  };

  // scan a box in n_steps per free coordinate; frozen coordinates (lo == hi)
  // contribute a single point
  auto scan = [&](std::vector<double> lo_corner, std::vector<double> hi_corner, int n_steps) {
    size_t dims = lo_corner.size();  // rates..., then pull
    std::vector<int> steps(dims);
    for (size_t k = 0; k < dims; ++k) steps[k] = hi_corner[k] > lo_corner[k] ? n_steps : 1;
    std::vector<int> idx(dims, 0);
    std::vector<double> point(dims);
    while (true) {
      for (size_t k = 0; k < dims; ++k)
        point[k] =
            lo_corner[k] + (hi_corner[k] - lo_corner[k]) * (idx[k] + 0.5) / steps[k];
      std::vector<double> rates(point.begin(), point.end() - 1);
      consider(rates, point.back());
      size_t k = 0;
      while (k < dims && ++idx[k] == steps[k]) idx[k++] = 0;
      if (k == dims) break;
    }
  };

  std::vector<double> corner_lo, corner_hi;
  if (std::holds_alternative<kmband::FixedObservable>(model.dist)) {
    corner_lo = {sigma > 0.0 ? -10.0 : 0.0};
    corner_hi = {sigma > 0.0 ? 10.0 : 0.0};
  } else if (std::holds_alternative<kmband::PoissonRatioObservable>(model.dist)) {
    const auto& o = std::get<kmband::PoissonRatioObservable>(model.dist);
    if (sigma > 0.0) throw std::runtime_error("oracle: ratio with systematics unsupported");
    double n_hi = std::max(4.0 * double(o.num) + 20.0, 40.0);
    double d_hi = std::max(4.0 * double(o.denom) + 20.0, 40.0);
    corner_lo = {0.0, 0.0, 0.0};
    corner_hi = {n_hi, d_hi, 0.0};
  } else {
    long count = std::holds_alternative<kmband::PoissonObservable>(model.dist)
                     ? std::get<kmband::PoissonObservable>(model.dist).count
                     : std::get<kmband::PoissonDensityObservable>(model.dist).count;
    double l_hi = std::max(4.0 * double(count) + 25.0, 50.0);
    corner_lo = {0.0, sigma > 0.0 ? -10.0 : 0.0};
    corner_hi = {l_hi, sigma > 0.0 ? 10.0 : 0.0};
  }

  const int coarse = 900;
  scan(corner_lo, corner_hi, coarse);
  if (best_arg.empty()) return best;

  std::vector<double> span(corner_lo.size());
  for (size_t k = 0; k < span.size(); ++k) span[k] = (corner_hi[k] - corner_lo[k]) / coarse;
  for (int level = 0; level < 4; ++level) {
    std::vector<double> wlo(best_arg.size()), whi(best_arg.size());
    for (size_t k = 0; k < best_arg.size(); ++k) {
      wlo[k] = best_arg[k] - 2.0 * span[k];
      whi[k] = best_arg[k] + 2.0 * span[k];
      if (corner_hi[k] == corner_lo[k]) wlo[k] = whi[k] = corner_lo[k];
      span[k] = (whi[k] - wlo[k]) / 256.0;
    }
    scan(wlo, whi, 256);
  }
  return best;
}

// Grid over the latent coordinates left free once the observable is pinned
// to c: the pull for Poisson-family models, the denominator rate for ratios.
inline double grid_boundary_minimum(const kmband::ObservableModel& model, double c) {
  double sigma = model.sigma_combined();
  double best = kInf;
  if (std::holds_alternative<kmband::PoissonRatioObservable>(model.dist)) {
    const auto& o = std::get<kmband::PoissonRatioObservable>(model.dist);
    double d_hi = 4.0 * double(o.denom) + 40.0;
    for (double ld = 1e-4; ld < d_hi; ld += 1e-3) {
      if (sigma == 0.0) {
        best = std::min(best, model_nll_at(model, {c * ld, ld}, 0.0));
      } else {
        for (double u = -8.0; u <= 8.0; u += 2e-3)
          best = std::min(best, model_nll_at(model, {c * ld * std::exp(-u * sigma), ld}, u));
      }
    }
    return best;
  }
  if (std::holds_alternative<kmband::FixedObservable>(model.dist)) {
    double v = std::get<kmband::FixedObservable>(model.dist).value;
    if (sigma == 0.0) return c == v ? 0.0 : kInf;
    if (v == 0.0 || c <= 0.0 || (c > 0.0) != (v > 0.0)) return c == v ? 0.0 : kInf;
    double u = std::log(c / v) / sigma;
    return u * u / 2.0;
  }
  double scale = std::holds_alternative<kmband::PoissonDensityObservable>(model.dist)
                     ? std::get<kmband::PoissonDensityObservable>(model.dist).area
                     : 1.0;
  if (sigma == 0.0) return model_nll_at(model, {c * scale}, 0.0);
  for (double u = -10.0; u <= 10.0; u += 1e-6)
    best = std::min(best, model_nll_at(model, {c * scale * std::exp(-u * sigma)}, u));
  return best;
}

inline kmband::PenaltyPair grid_penalty(const kmband::ObservableModel& model,
                                        const kmband::InclusionRange& range) {
  kmband::PenaltyPair out;
  out.nll_in = grid_region_minimum(model, range.lower, range.upper);
  double below = grid_region_minimum(model, -kInf, range.lower);
  double above = grid_region_minimum(model, range.upper, kInf);
  out.nll_out = std::min(below, above);
  out.delta = out.nll_in - out.nll_out;
  return out;
}

// ----- constrained binomial minimum ----------------------------------------

// Reference for inner_solve. One or two groups: dense grid on the constraint
// manifold with local refinement. Three or more: projected gradient descent
// in log p with a tangent-space projection and backtracking line search.
inline double constrained_binomial_reference(const std::vector<long>& r,
                                             const std::vector<long>& d, double s_target) {
  using kmband::binomial_nll;
  const size_t n = r.size();
  if (n == 1) {
    return binomial_nll(r, d, {s_target});
  }
  if (n == 2) {
    double best = kInf;
    auto eval = [&](double p1) {
      double p2 = s_target / p1;
      if (p1 <= 0.0 || p1 > 1.0 || p2 <= 0.0 || p2 > 1.0) return kInf;
      return binomial_nll(r, d, {p1, p2});
    };
    double arg = s_target;
    for (double p1 = s_target; p1 <= 1.0; p1 += 1e-5) {
      double v = eval(p1);
      if (v < best) {
        best = v;
        arg = p1;
      }
    }
    for (double p1 = std::max(s_target, arg - 2e-5); p1 <= std::min(1.0, arg + 2e-5);
         p1 += 1e-8) {
      best = std::min(best, eval(p1));
    }
    return best;
  }

  // x_i = log p_i, sum x = log s; start from the uniform point
  std::vector<double> x(n, std::log(s_target) / double(n));
  auto nll_of = [&](const std::vector<double>& xs) {
    kmband::SurvivalVector p(n);
    for (size_t i = 0; i < n; ++i) {
      if (xs[i] > 0.0) return kInf;
      p[i] = std::exp(xs[i]);
    }
    return binomial_nll(r, d, p);
  };
  double cur = nll_of(x);
  for (int it = 0; it < 200000; ++it) {
    // gradient in x
    std::vector<double> g(n);
    double gmean = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double p = std::exp(x[i]);
      g[i] = -(double(d[i]) * (-p / (1.0 - p)) + double(r[i] - d[i]));
      if (d[i] == 0) g[i] = -double(r[i]);
      gmean += g[i];
    }
    gmean /= double(n);
    double norm = 0.0;
    for (size_t i = 0; i < n; ++i) {
      g[i] -= gmean;  // project onto the constraint tangent
      norm += g[i] * g[i];
    }
    if (norm < 1e-24) break;
    double step = 1.0;
    std::vector<double> trial(n);
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (size_t i = 0; i < n; ++i) trial[i] = std::min(x[i] - step * g[i], 0.0);
      // re-project the clipped point back to the constraint
      double sum = 0.0;
      for (double xi : trial) sum += xi;
      double adjust = (std::log(s_target) - sum) / double(n);
      bool ok = true;
      for (size_t i = 0; i < n; ++i) {
        trial[i] += adjust;
        if (trial[i] > 0.0) ok = false;
      }
      double v = ok ? nll_of(trial) : kInf;
      if (v < cur - 1e-15) {
        x = trial;
        cur = v;
        moved = true;
        break;
      }
      step /= 2.0;
    }
    if (!moved) break;
  }
  return cur;
}

// ----- discrete enumeration -------------------------------------------------

// uncollapsed constrained prefix via the library's continuous solver only
inline double constrained_prefix(const std::vector<long>& r, const std::vector<long>& d,
                                 double s_target) {
  return kmband::inner_solve(r, d, s_target).nll;
}

// All inclusion vectors over patients with finite two-sided penalties
// (others pinned to nominal), evaluated with the uncollapsed objective.
inline double enumerate_profile(const kmband::Problem& prob, double s_target, int time_index,
                                kmband::InclusionVector* argmin = nullptr) {
  std::vector<int> flippable;
  for (size_t j = 0; j < prob.penalties.size(); ++j)
    if (std::isfinite(prob.penalties[j].nll_in) && std::isfinite(prob.penalties[j].nll_out))
      flippable.push_back(int(j));

  double best = kInf;
  kmband::InclusionVector a = prob.nominal_inclusion;
  for (long mask = 0; mask < (1L << flippable.size()); ++mask) {
    for (size_t k = 0; k < flippable.size(); ++k)
      a[flippable[k]] = (mask >> k) & 1 ? 1 : 0;
    kmband::CountVectors cv = prob.table.counts(a);
    std::vector<long> rr(cv.r.begin(), cv.r.begin() + time_index + 1);
    std::vector<long> dd(cv.d.begin(), cv.d.begin() + time_index + 1);
    double nll = constrained_prefix(rr, dd, s_target);
    for (size_t i = size_t(time_index) + 1; i < cv.r.size(); ++i)
      nll += kmband::binomial_nll_min(cv.r[i], cv.d[i]);
    nll += kmband::patient_nll(prob.penalties, a);
    if (nll < best) {
      best = nll;
      if (argmin) *argmin = a;
    }
  }
  return best;
}

inline double enumerate_global(const kmband::Problem& prob, kmband::InclusionVector* argmin = nullptr) {
  std::vector<int> flippable;
  for (size_t j = 0; j < prob.penalties.size(); ++j)
    if (std::isfinite(prob.penalties[j].nll_in) && std::isfinite(prob.penalties[j].nll_out))
      flippable.push_back(int(j));

  double best = kInf;
  kmband::InclusionVector a = prob.nominal_inclusion;
  for (long mask = 0; mask < (1L << flippable.size()); ++mask) {
    for (size_t k = 0; k < flippable.size(); ++k)
      a[flippable[k]] = (mask >> k) & 1 ? 1 : 0;
    kmband::CountVectors cv = prob.table.counts(a);
    double nll = kmband::patient_nll(prob.penalties, a);
    for (size_t i = 0; i < cv.r.size(); ++i) nll += kmband::binomial_nll_min(cv.r[i], cv.d[i]);
    if (nll < best) {
      best = nll;
      if (argmin) *argmin = a;
    }
  }
  return best;
}

// ----- random cohort generation ---------------------------------------------

struct CohortSpec {
  int n_patients = 10;
  double censor_fraction = 0.25;
  bool integer_times = false;
  int ambiguous = 4;       // patients given a near-threshold Poisson observable
  unsigned long seed = 1;
};

inline std::vector<kmband::PatientRecord> random_cohort(const CohortSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::exponential_distribution<double> time_dist(0.4);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> int_time(1, 10);
  std::uniform_int_distribution<long> count_dist(1, 8);

  std::vector<kmband::PatientRecord> patients(spec.n_patients);
  for (int j = 0; j < spec.n_patients; ++j) {
    auto& p = patients[j];
    p.survival_time = spec.integer_times ? double(int_time(rng)) : 0.1 + time_dist(rng);
    p.censored = unif(rng) < spec.censor_fraction;
    if (j < spec.ambiguous) {
      p.observable.dist = kmband::PoissonObservable{count_dist(rng)};
    } else {
      p.observable.dist = kmband::FixedObservable{unif(rng) < 0.5 ? 1.0 : 10.0};
    }
  }
  return patients;
}

}  // namespace oracles
