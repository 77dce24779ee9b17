#include "kmband/numerics.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace kmband {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

constexpr long kFactorialTableSize = 20001;

std::vector<double> make_factorial_table() {
  std::vector<double> t(kFactorialTableSize);
  t[0] = 0.0;
  for (long n = 1; n < kFactorialTableSize; ++n) t[n] = t[n - 1] + std::log(double(n));
  return t;
}

}  // namespace

double log_factorial(long n) {
  if (n < 0) throw std::domain_error("log_factorial: negative argument");
  // Cumulative sums keep the recurrence log(n!) - log((n-1)!) = log(n) exact
  // to one rounding; beyond the table a Stirling series in extended precision
  // (truncation below 1e-15) takes over.
  static const std::vector<double> table = make_factorial_table();
  if (n < kFactorialTableSize) return table[size_t(n)];
  long double x = static_cast<long double>(n) + 1.0L;
  long double inv = 1.0L / x;
  long double inv2 = inv * inv;
  long double series = inv / 12.0L - inv * inv2 / 360.0L + inv * inv2 * inv2 / 1260.0L -
                       inv * inv2 * inv2 * inv2 / 1680.0L;
  const long double half_log_2pi = 0.91893853320467274178L;
  long double v = (x - 0.5L) * std::log(x) - x + half_log_2pi + series;
  return double(v);
}

double log_choose(long n, long k) {
  if (k < 0 || k > n) return -kInf;
  return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

double chi2_sf_1dof(double q) {
  if (q < 0.0) throw std::domain_error("chi2_sf_1dof: negative statistic");
  return std::erfc(std::sqrt(q / 2.0));
}

double normal_quantile(double p) {
  if (p <= 0.0) return -kInf;
  if (p >= 1.0) return kInf;

  // Acklam's rational approximation, then one Halley refinement step.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    double q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Halley: e = Phi(x) - p, u = e / phi(x).
  static const double sqrt2pi = std::sqrt(2.0 * std::acos(-1.0));
  double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  double u = e * sqrt2pi * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

double normal_two_sided_z(double level) {
  if (level <= 0.0 || level >= 1.0)
    throw std::domain_error("normal_two_sided_z: level must be in (0,1)");
  return normal_quantile(0.5 * (1.0 + level));
}

double chi2_quantile_1dof(double p) {
  if (p < 0.0 || p >= 1.0) throw std::domain_error("chi2_quantile_1dof: p must be in [0,1)");
  if (p == 0.0) return 0.0;
  double z = normal_quantile(0.5 * (1.0 + p));
  return z * z;
}

double find_root(const std::function<double(double)>& f, const RootBracket& bracket) {
  double lo = bracket.lo;
  double hi = bracket.hi;
  if (!(lo < hi)) throw std::invalid_argument("find_root: bracket not ordered");

  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;

  if ((flo > 0.0) == (fhi > 0.0)) {
    // Degenerate bracket: look for a tangent root by minimizing |f|.
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = std::fabs(f(x1)), f2 = std::fabs(f(x2));
    for (int i = 0; i < bracket.max_iterations && (b - a) > bracket.tolerance; ++i) {
      if (f1 <= f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - phi * (b - a);
        f1 = std::fabs(f(x1));
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + phi * (b - a);
        f2 = std::fabs(f(x2));
      }
    }
    double x = (a + b) / 2.0;
    if (std::fabs(f(x)) <= 1e-9) return x;
    throw std::runtime_error("find_root: no sign change on bracket");
  }

  double x_prev = lo, f_prev = flo;
  double x_cur = hi, f_cur = fhi;
  for (int i = 0; i < bracket.max_iterations; ++i) {
    if (hi - lo <= bracket.tolerance) break;
    // Secant proposal, clipped to the open bracket; otherwise bisect.
    double x_next;
    double denom = f_cur - f_prev;
    if (denom != 0.0) {
      x_next = x_cur - f_cur * (x_cur - x_prev) / denom;
      if (!(x_next > lo && x_next < hi)) x_next = 0.5 * (lo + hi);
    } else {
      x_next = 0.5 * (lo + hi);
    }
    double f_next = f(x_next);
    x_prev = x_cur;
    f_prev = f_cur;
    x_cur = x_next;
    f_cur = f_next;
    if (f_next == 0.0) return x_next;
    if ((f_next > 0.0) == (flo > 0.0)) {
      lo = x_next;
      flo = f_next;
    } else {
      hi = x_next;
      fhi = f_next;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace kmband
