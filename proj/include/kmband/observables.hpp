#pragma once

#include <limits>
#include <variant>
#include <vector>

namespace kmband {

// Per-patient observable distributions. The measured parameter is the
// distribution's latent value (rate, density, or rate ratio), optionally
// multiplied by log-normal systematic factors exp(theta * sigma) with a
// standard-normal pull theta per systematic.

struct FixedObservable {
  double value = 0.0;
  bool operator==(const FixedObservable&) const = default;
};

struct PoissonObservable {
  long count = 0;
  bool operator==(const PoissonObservable&) const = default;
};

struct PoissonDensityObservable {
  long count = 0;
  double area = 1.0;
  bool operator==(const PoissonDensityObservable&) const = default;
};

struct PoissonRatioObservable {
  long num = 0;
  long denom = 1;  // denominator count must be >= 1
  bool operator==(const PoissonRatioObservable&) const = default;
};

struct ObservableModel {
  std::variant<FixedObservable, PoissonObservable, PoissonDensityObservable,
               PoissonRatioObservable>
      dist;
  std::vector<double> lognormal_sigmas;

  double sigma_combined() const;  // sqrt(sum sigma^2)
};

/// Central value of the observable (all rates at their MLE, pulls at zero).
double nominal_value(const ObservableModel& model);

/// Half-open inclusion window [lower, upper) on the observable value.
struct InclusionRange {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  bool contains(double x) const { return x >= lower && x < upper; }
};

/// Branch costs for one patient: minimum NLL with the observable inside the
/// range, outside it, and their difference. delta is negative when the
/// patient is nominally included, positive when nominally excluded, and zero
/// on an inclusion boundary.
struct PenaltyPair {
  double nll_in = 0.0;
  double nll_out = 0.0;
  double delta = 0.0;
};

/// Minimum NLL subject to the realized observable equalling c. Infeasible
/// constraints return +inf.
double boundary_minimum(const ObservableModel& model, double c);

/// Minimum NLL with all latent parameters free.
double unconstrained_minimum(const ObservableModel& model);

/// Infimum of the NLL with the observable in [lo, hi); empty intervals give
/// +inf. Relies on the boundary NLL being unimodal about the nominal value.
double interval_minimum(const ObservableModel& model, double lo, double hi);

/// Branch penalties for an inclusion window.
PenaltyPair penalty(const ObservableModel& model, const InclusionRange& range);

}  // namespace kmband
