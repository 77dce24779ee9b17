#pragma once

#include <functional>

namespace kmband {

/// log(n!) — exact cumulative sum for n <= 20, log-gamma beyond.
double log_factorial(long n);

/// log of the binomial coefficient C(n, k); -inf when k is out of range.
double log_choose(long n, long k);

/// Upper tail of the chi-square distribution with one degree of freedom.
double chi2_sf_1dof(double q);

/// Quantile of the chi-square distribution with one degree of freedom.
double chi2_quantile_1dof(double p);

/// Inverse standard normal CDF, accurate to better than 1e-9.
double normal_quantile(double p);

/// Two-sided z value for a central confidence level (e.g. 0.95 -> 1.95996...).
double normal_two_sided_z(double level);

struct RootBracket {
  double lo = 0.0;
  double hi = 1.0;
  double tolerance = 1e-9;
  int max_iterations = 200;
};

/// Bracketed root finder (bisection with secant acceleration).
///
/// Requires a sign change on [lo, hi]. If the endpoints have the same sign,
/// falls back to minimizing |f|; a tangent root (f touching zero inside the
/// bracket) is accepted, anything else throws.
double find_root(const std::function<double(double)>& f, const RootBracket& bracket);

}  // namespace kmband
