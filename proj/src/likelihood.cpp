#include "kmband/likelihood.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "kmband/numerics.hpp"

namespace kmband {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }
}  // namespace

double binomial_nll(const std::vector<long>& r, const std::vector<long>& d,
                    const SurvivalVector& p) {
  if (r.size() != d.size() || r.size() != p.size())
    throw std::invalid_argument("binomial_nll: length mismatch");
  double nll = 0.0;
  for (size_t i = 0; i < r.size(); ++i) {
    if (d[i] < 0 || d[i] > r[i]) throw std::invalid_argument("binomial_nll: d out of range");
    double term = log_choose(r[i], d[i]);
    if (d[i] > 0) {
      if (p[i] >= 1.0) return kInf;
      term += double(d[i]) * std::log1p(-p[i]);
    }
    if (r[i] - d[i] > 0) {
      if (p[i] <= 0.0) return kInf;
      term += double(r[i] - d[i]) * std::log(p[i]);
    }
    nll -= term;
  }
  return nll;
}

double binomial_nll_min(long r, long d) {
  if (d < 0 || d > r) throw std::invalid_argument("binomial_nll_min: d out of range");
  if (r == 0) return 0.0;
  double rr = double(r), dd = double(d);
  return -(log_choose(r, d) + xlogx(dd) + xlogx(rr - dd) - xlogx(rr));
}

double multinomial_offset(const std::vector<long>& member_deaths) {
  long total = 0;
  for (long d : member_deaths) total += d;
  double off = log_factorial(total) - xlogx(double(total));
  for (long d : member_deaths) off -= log_factorial(d) - xlogx(double(d));
  return off;
}

double patient_nll(const std::vector<PenaltyPair>& penalties, const InclusionVector& inclusion) {
  if (penalties.size() != inclusion.size())
    throw std::invalid_argument("patient_nll: length mismatch");
  double nll = 0.0;
  for (size_t j = 0; j < penalties.size(); ++j)
    nll += inclusion[j] ? penalties[j].nll_in : penalties[j].nll_out;
  return nll;
}

NllBreakdown total_nll(const TimeTable& table, const std::vector<GroupSpan>& groups,
                       const std::vector<PenaltyPair>& penalties,
                       const InclusionVector& inclusion, const SurvivalVector& p) {
  if (p.size() != groups.size()) throw std::invalid_argument("total_nll: p per group expected");
  CountVectors cv = table.counts(inclusion);

  std::vector<long> rg(groups.size()), dg(groups.size());
  NllBreakdown out;
  for (size_t g = 0; g < groups.size(); ++g) {
    rg[g] = cv.r[groups[g].begin];
    long sum = 0;
    std::vector<long> members;
    members.reserve(groups[g].end - groups[g].begin);
    for (int i = groups[g].begin; i < groups[g].end; ++i) {
      sum += cv.d[i];
      members.push_back(cv.d[i]);
    }
    dg[g] = sum;
    if (members.size() > 1) out.multinomial_offset += multinomial_offset(members);
  }
  out.binomial = binomial_nll(rg, dg, p);
  out.patient = patient_nll(penalties, inclusion);
  out.total = out.binomial + out.patient + out.multinomial_offset;
  return out;
}

}  // namespace kmband
