#include "kmband/observables.hpp"

#include <cmath>
#include <stdexcept>

#include "kmband/numerics.hpp"

namespace kmband {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// k - k*log(k) + log(k!): negative log of the Poisson pmf maximum over the rate.
double poisson_profile_floor(long k) {
  if (k == 0) return 0.0;
  double kk = double(k);
  return kk - kk * std::log(kk) + log_factorial(k);
}

// Minimize g(u) = slope_terms(u) + u^2/(2 sigma^2) where g' is strictly
// increasing. Solved by expanding a bracket around 0 and bisecting on g'.
template <typename Deriv>
double solve_pull(const Deriv& gprime) {
  double lo = 0.0, hi = 0.0;
  double g0 = gprime(0.0);
  if (g0 == 0.0) return 0.0;
  double step = 1.0;
  if (g0 > 0.0) {
    hi = 0.0;
    lo = -step;
    while (gprime(lo) > 0.0) {
      step *= 2.0;
      lo = -step;
      if (step > 1e12) break;
    }
  } else {
    lo = 0.0;
    hi = step;
    while (gprime(hi) < 0.0) {
      step *= 2.0;
      hi = step;
      if (step > 1e12) break;
    }
  }
  for (int i = 0; i < 200 && (hi - lo) > 1e-14 * std::max(1.0, std::fabs(lo) + std::fabs(hi));
       ++i) {
    double mid = 0.5 * (lo + hi);
    if (gprime(mid) > 0.0)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

// Constrained minimum for a Poisson count k whose observable is lambda/scale.
// The constraint observable == c pins lambda = c*scale*exp(-u).
double poisson_boundary(long k, double scale, double c, double sigma) {
  if (c < 0.0) return kInf;
  double lam0 = c * scale;
  if (lam0 == 0.0) return k > 0 ? kInf : 0.0;
  if (sigma == 0.0) {
    return lam0 - double(k) * std::log(lam0) + log_factorial(k);
  }
  double s2 = sigma * sigma;
  auto gprime = [&](double u) { return -lam0 * std::exp(-u) + double(k) + u / s2; };
  double u = solve_pull(gprime);
  return lam0 * std::exp(-u) + double(k) * u + u * u / (2.0 * s2) -
         double(k) * std::log(lam0) + log_factorial(k);
}

// Constrained minimum for a ratio of two Poisson counts with ratio == c.
// With b = c*exp(-u), the profile over the two rates is
//   (n+d)*log(1+b) - n*log(b) + K,   K = (n+d) - (n+d)*log(n+d) + log n! + log d!.
double ratio_boundary(long n, long d, double c, double sigma) {
  if (c < 0.0) return kInf;
  double nd = double(n + d);
  double K = nd - nd * std::log(nd) + log_factorial(n) + log_factorial(d);
  if (c == 0.0) {
    if (n > 0) return kInf;
    // numerator rate -> 0; denominator rate free at its MLE
    return poisson_profile_floor(d);
  }
  if (sigma == 0.0) {
    return nd * std::log1p(c) - double(n) * std::log(c) + K;
  }
  double s2 = sigma * sigma;
  auto gprime = [&](double u) {
    double b = c * std::exp(-u);
    return double(n) - nd * b / (1.0 + b) + u / s2;
  };
  double u = solve_pull(gprime);
  double b = c * std::exp(-u);
  return nd * std::log1p(b) - double(n) * (std::log(c) - u) + u * u / (2.0 * s2) + K;
}

double fixed_boundary(double value, double c, double sigma) {
  if (sigma == 0.0) return c == value ? 0.0 : kInf;
  if (value == 0.0) return c == 0.0 ? 0.0 : kInf;
  if (c == 0.0 || (c > 0.0) != (value > 0.0)) return kInf;
  double u = std::log(c / value);
  return u * u / (2.0 * sigma * sigma);
}

}  // namespace

double ObservableModel::sigma_combined() const {
  double s2 = 0.0;
  for (double s : lognormal_sigmas) s2 += s * s;
  return std::sqrt(s2);
}

double nominal_value(const ObservableModel& model) {
  struct Visitor {
    double operator()(const FixedObservable& o) const { return o.value; }
    double operator()(const PoissonObservable& o) const { return double(o.count); }
    double operator()(const PoissonDensityObservable& o) const {
      if (o.area == 0.0) throw std::domain_error("observable: area is zero");
      return double(o.count) / o.area;
    }
    double operator()(const PoissonRatioObservable& o) const {
      if (o.denom == 0) throw std::domain_error("observable: ratio denominator is zero");
      return double(o.num) / double(o.denom);
    }
  };
  return std::visit(Visitor{}, model.dist);
}

double boundary_minimum(const ObservableModel& model, double c) {
  double sigma = model.sigma_combined();
  struct Visitor {
    double c;
    double sigma;
    double operator()(const FixedObservable& o) const { return fixed_boundary(o.value, c, sigma); }
    double operator()(const PoissonObservable& o) const {
      return poisson_boundary(o.count, 1.0, c, sigma);
    }
    double operator()(const PoissonDensityObservable& o) const {
      return poisson_boundary(o.count, o.area, c, sigma);
    }
    double operator()(const PoissonRatioObservable& o) const {
      return ratio_boundary(o.num, o.denom, c, sigma);
    }
  };
  return std::visit(Visitor{c, sigma}, model.dist);
}

double unconstrained_minimum(const ObservableModel& model) {
  struct Visitor {
    double operator()(const FixedObservable&) const { return 0.0; }
    double operator()(const PoissonObservable& o) const { return poisson_profile_floor(o.count); }
    double operator()(const PoissonDensityObservable& o) const {
      return poisson_profile_floor(o.count);
    }
    double operator()(const PoissonRatioObservable& o) const {
      return poisson_profile_floor(o.num) + poisson_profile_floor(o.denom);
    }
  };
  return std::visit(Visitor{}, model.dist);
}

double interval_minimum(const ObservableModel& model, double lo, double hi) {
  if (!(lo < hi)) return kInf;
  double nom = nominal_value(model);
  if (nom >= lo && nom < hi) return unconstrained_minimum(model);
  // Unimodal about the nominal value: the infimum sits at the nearer endpoint.
  return nom < lo ? boundary_minimum(model, lo) : boundary_minimum(model, hi);
}

PenaltyPair penalty(const ObservableModel& model, const InclusionRange& range) {
  if (!(range.lower < range.upper))
    throw std::invalid_argument("penalty: inclusion range is empty");

  PenaltyPair out;
  out.nll_in = interval_minimum(model, range.lower, range.upper);
  out.nll_out = std::min(interval_minimum(model, -kInf, range.lower),
                         interval_minimum(model, range.upper, kInf));
  if (std::isinf(out.nll_in) && std::isinf(out.nll_out))
    throw std::runtime_error("penalty: both branches infeasible");
  out.delta = out.nll_in - out.nll_out;
  return out;
}

}  // namespace kmband
