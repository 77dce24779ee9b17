#include "kmband/datacard.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <sstream>

namespace kmband {

namespace {

struct Row {
  int line = 0;
  std::vector<std::string> tokens;  // values only, label removed
};

bool is_divider(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return c == '-'; });
}

std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

double parse_number(const std::string& tok, int line, const std::string& label) {
  try {
    size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw DatacardError(line, "non-numeric token '" + tok + "' in row '" + label + "'");
  }
}

long parse_count(const std::string& tok, int line, const std::string& label) {
  double v = parse_number(tok, line, label);
  double r = std::round(v);
  if (!(std::isfinite(v)) || v < 0.0 || std::fabs(v - r) > 0.0)
    throw DatacardError(line, "row '" + label + "' requires a nonnegative integer, got '" + tok + "'");
  return long(r);
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // trim to the shortest representation that round-trips
  for (int prec = 1; prec < 17; ++prec) {
    char probe[40];
    std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
    if (std::stod(probe) == v) return probe;
  }
  return buf;
}

}  // namespace

DatacardError::DatacardError(int line, const std::string& what)
    : std::runtime_error("datacard line " + std::to_string(line) + ": " + what), line_(line) {}

Datacard parse_datacard(std::istream& in) {
  std::map<std::string, Row> rows;
  std::vector<std::pair<std::string, Row>> lognormals;
  std::optional<std::pair<int, std::string>> type_decl;

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> toks = split_tokens(line);
    if (toks.empty()) continue;
    if (toks[0][0] == '#') continue;
    if (is_divider(toks[0])) continue;

    const std::string label = toks[0];
    if (label == "observable_type") {
      if (type_decl) throw DatacardError(lineno, "duplicate row 'observable_type'");
      if (toks.size() != 2) throw DatacardError(lineno, "observable_type expects one tag");
      type_decl = {lineno, toks[1]};
      continue;
    }
    if (label == "lognormal") {
      if (toks.size() < 2) throw DatacardError(lineno, "lognormal row is missing a name");
      std::string name = toks[1];
      for (const auto& prev : lognormals)
        if (prev.first == name) throw DatacardError(lineno, "duplicate row 'lognormal " + name + "'");
      Row r;
      r.line = lineno;
      r.tokens.assign(toks.begin() + 2, toks.end());
      lognormals.emplace_back(std::move(name), std::move(r));
      continue;
    }
    if (rows.count(label)) throw DatacardError(lineno, "duplicate row '" + label + "'");
    Row r;
    r.line = lineno;
    r.tokens.assign(toks.begin() + 1, toks.end());
    rows.emplace(label, std::move(r));
  }

  if (!type_decl) throw DatacardError(lineno, "missing required row 'observable_type'");
  ObservableType type;
  const std::string& tag = type_decl->second;
  if (tag == "fixed")
    type = ObservableType::fixed;
  else if (tag == "poisson")
    type = ObservableType::poisson;
  else if (tag == "poisson_density")
    type = ObservableType::poisson_density;
  else if (tag == "poisson_ratio")
    type = ObservableType::poisson_ratio;
  else
    throw DatacardError(type_decl->first, "unknown observable_type '" + tag + "'");

  std::vector<std::string> required = {"survival_time", "censored"};
  switch (type) {
    case ObservableType::fixed: required.push_back("observable"); break;
    case ObservableType::poisson: required.push_back("count"); break;
    case ObservableType::poisson_density:
      required.push_back("count");
      required.push_back("area");
      break;
    case ObservableType::poisson_ratio:
      required.push_back("num");
      required.push_back("denom");
      break;
  }
  for (const auto& name : required)
    if (!rows.count(name)) throw DatacardError(lineno, "missing required row '" + name + "'");
  for (const auto& [name, row] : rows)
    if (std::find(required.begin(), required.end(), name) == required.end())
      throw DatacardError(row.line, "unknown row '" + name + "'");

  const Row& time_row = rows.at("survival_time");
  size_t n = time_row.tokens.size();
  if (n == 0) throw DatacardError(time_row.line, "empty cohort: 'survival_time' has no columns");
  auto check_len = [&](const std::string& label, const Row& row) {
    if (row.tokens.size() != n)
      throw DatacardError(row.line, "mismatched row lengths: '" + label + "' has " +
                                        std::to_string(row.tokens.size()) + " columns, expected " +
                                        std::to_string(n));
  };
  for (const auto& [name, row] : rows) check_len(name, row);
  for (const auto& [name, row] : lognormals) check_len("lognormal " + name, row);

  Datacard card;
  card.observable_type = type;
  card.patients.resize(n);

  for (size_t j = 0; j < n; ++j) {
    double t = parse_number(time_row.tokens[j], time_row.line, "survival_time");
    if (!(std::isfinite(t)) || t <= 0.0)
      throw DatacardError(time_row.line, "survival_time must be strictly positive and finite");
    card.patients[j].survival_time = t;
  }
  const Row& cens_row = rows.at("censored");
  for (size_t j = 0; j < n; ++j) {
    double c = parse_number(cens_row.tokens[j], cens_row.line, "censored");
    if (c != 0.0 && c != 1.0)
      throw DatacardError(cens_row.line, "censored values must be exactly 0 or 1");
    card.patients[j].censored = (c == 1.0);
  }

  switch (type) {
    case ObservableType::fixed: {
      const Row& obs = rows.at("observable");
      for (size_t j = 0; j < n; ++j)
        card.patients[j].observable.dist =
            FixedObservable{parse_number(obs.tokens[j], obs.line, "observable")};
      break;
    }
    case ObservableType::poisson: {
      const Row& cnt = rows.at("count");
      for (size_t j = 0; j < n; ++j)
        card.patients[j].observable.dist = PoissonObservable{parse_count(cnt.tokens[j], cnt.line, "count")};
      break;
    }
    case ObservableType::poisson_density: {
      const Row& cnt = rows.at("count");
      const Row& area = rows.at("area");
      for (size_t j = 0; j < n; ++j) {
        double a = parse_number(area.tokens[j], area.line, "area");
        if (!(a > 0.0)) throw DatacardError(area.line, "area values must be strictly positive");
        card.patients[j].observable.dist =
            PoissonDensityObservable{parse_count(cnt.tokens[j], cnt.line, "count"), a};
      }
      break;
    }
    case ObservableType::poisson_ratio: {
      const Row& num = rows.at("num");
      const Row& den = rows.at("denom");
      for (size_t j = 0; j < n; ++j) {
        long d = parse_count(den.tokens[j], den.line, "denom");
        if (d < 1) throw DatacardError(den.line, "denom counts must be at least 1");
        card.patients[j].observable.dist =
            PoissonRatioObservable{parse_count(num.tokens[j], num.line, "num"), d};
      }
      break;
    }
  }

  for (const auto& [name, row] : lognormals) {
    SystematicRow sys;
    sys.name = name;
    sys.sigma.resize(n);
    for (size_t j = 0; j < n; ++j) {
      double s = parse_number(row.tokens[j], row.line, "lognormal " + name);
      if (!(s >= 0.0))
        throw DatacardError(row.line, "lognormal widths must be nonnegative");
      sys.sigma[j] = s;
      card.patients[j].observable.lognormal_sigmas.push_back(s);
    }
    card.systematics.push_back(std::move(sys));
  }

  return card;
}

Datacard parse_datacard(const std::string& text) {
  std::istringstream ss(text);
  return parse_datacard(ss);
}

const char* observable_type_name(ObservableType t) {
  switch (t) {
    case ObservableType::fixed: return "fixed";
    case ObservableType::poisson: return "poisson";
    case ObservableType::poisson_density: return "poisson_density";
    case ObservableType::poisson_ratio: return "poisson_ratio";
  }
  return "fixed";
}

std::string serialize_datacard(const Datacard& card) {
  std::ostringstream out;
  out << "observable_type " << observable_type_name(card.observable_type) << "\n";
  out << "------------\n";
  auto emit = [&](const std::string& label, auto&& value_of) {
    out << label;
    for (const auto& p : card.patients) out << ' ' << value_of(p);
    out << "\n";
  };
  emit("survival_time", [](const PatientRecord& p) { return format_number(p.survival_time); });
  emit("censored", [](const PatientRecord& p) { return std::string(p.censored ? "1" : "0"); });
  switch (card.observable_type) {
    case ObservableType::fixed:
      emit("observable", [](const PatientRecord& p) {
        return format_number(std::get<FixedObservable>(p.observable.dist).value);
      });
      break;
    case ObservableType::poisson:
      emit("count", [](const PatientRecord& p) {
        return std::to_string(std::get<PoissonObservable>(p.observable.dist).count);
      });
      break;
    case ObservableType::poisson_density:
      emit("count", [](const PatientRecord& p) {
        return std::to_string(std::get<PoissonDensityObservable>(p.observable.dist).count);
      });
      emit("area", [](const PatientRecord& p) {
        return format_number(std::get<PoissonDensityObservable>(p.observable.dist).area);
      });
      break;
    case ObservableType::poisson_ratio:
      emit("num", [](const PatientRecord& p) {
        return std::to_string(std::get<PoissonRatioObservable>(p.observable.dist).num);
      });
      emit("denom", [](const PatientRecord& p) {
        return std::to_string(std::get<PoissonRatioObservable>(p.observable.dist).denom);
      });
      break;
  }
  for (const auto& sys : card.systematics) {
    out << "lognormal " << sys.name;
    for (double s : sys.sigma) out << ' ' << format_number(s);
    out << "\n";
  }
  return out.str();
}

}  // namespace kmband
