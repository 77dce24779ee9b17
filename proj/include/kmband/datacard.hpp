#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmband/observables.hpp"

namespace kmband {

struct PatientRecord {
  double survival_time = 0.0;
  bool censored = false;
  ObservableModel observable;
};

enum class ObservableType { fixed, poisson, poisson_density, poisson_ratio };

struct SystematicRow {
  std::string name;
  std::vector<double> sigma;  // one log-normal width per patient
};

struct Datacard {
  ObservableType observable_type = ObservableType::fixed;
  std::vector<PatientRecord> patients;
  std::vector<SystematicRow> systematics;
};

class DatacardError : public std::runtime_error {
 public:
  DatacardError(int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

/// Parse the column-aligned datacard text format:
///   # comment lines and runs of hyphens are ignored
///   observable_type <fixed|poisson|poisson_density|poisson_ratio>
///   survival_time <t per patient>
///   censored      <0/1 per patient>
///   <observable rows for the declared type>
///   lognormal <name> <sigma per patient>   (zero or more)
/// Row order is free; columns align by position.
Datacard parse_datacard(std::istream& in);
Datacard parse_datacard(const std::string& text);

/// Canonical text rendering; parse(serialize(card)) reproduces the card.
std::string serialize_datacard(const Datacard& card);

const char* observable_type_name(ObservableType t);

}  // namespace kmband
