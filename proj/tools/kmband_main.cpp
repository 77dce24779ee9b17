#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kmband/baselines.hpp"
#include "kmband/datacard.hpp"
#include "kmband/pvalue.hpp"
#include "kmband/solver.hpp"
#include "kmband/svg_plot.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace kmband;

constexpr int kExitParse = 2;
constexpr int kExitSolver = 3;
constexpr int kExitIo = 4;

struct CommonOptions {
  std::string datacard_path;
  std::string output_path;
  bool include_binomial_only = false;
  bool include_patient_wise_only = false;
  bool exclude_full_nll = false;
  std::vector<double> levels;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("datacard", opt.datacard_path, "Input datacard file")->required();
  cmd->add_option("output", opt.output_path, "Output plot path (.svg; a .json sibling is written)")
      ->required();
  cmd->add_flag("--include-binomial-only", opt.include_binomial_only,
                "Also compute the band from cohort-size uncertainty alone");
  cmd->add_flag("--include-patient-wise-only", opt.include_patient_wise_only,
                "Also compute the band from per-patient observable uncertainty alone");
  cmd->add_flag("--exclude-full-nll", opt.exclude_full_nll,
                "Skip the combined-uncertainty band");
  cmd->add_option("--confidence-level", opt.levels,
                  "Confidence level for the bands (repeatable; default 0.68 and 0.95)")
      ->check(CLI::Range(1e-6, 1.0 - 1e-6));
}

std::vector<UncertaintyMode> selected_modes(const CommonOptions& opt) {
  std::vector<UncertaintyMode> modes;
  if (!opt.exclude_full_nll) modes.push_back(UncertaintyMode::full);
  if (opt.include_binomial_only) modes.push_back(UncertaintyMode::binomial_only);
  if (opt.include_patient_wise_only) modes.push_back(UncertaintyMode::patient_wise_only);
  if (modes.empty())
    throw CLI::ValidationError("--exclude-full-nll requires at least one --include-* band mode");
  return modes;
}

std::string svg_output_path(const std::string& requested) {
  auto dot = requested.rfind('.');
  std::string ext = dot == std::string::npos ? "" : requested.substr(dot);
  if (ext == ".svg") return requested;
  std::string replaced = (dot == std::string::npos ? requested : requested.substr(0, dot)) + ".svg";
  if (ext == ".pdf")
    std::cerr << "warning: PDF output is not supported; writing " << replaced << " instead\n";
  else if (!ext.empty() && ext != ".svg")
    std::cerr << "warning: unrecognized output extension '" << ext << "'; writing " << replaced
              << "\n";
  return replaced;
}

std::string json_sibling_path(const std::string& svg_path) {
  auto dot = svg_path.rfind('.');
  return (dot == std::string::npos ? svg_path : svg_path.substr(0, dot)) + ".json";
}

Datacard load_datacard(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open datacard '" + path + "'");
  return parse_datacard(in);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot open output '" + path + "'");
  out << content;
  if (!out) throw std::ios_base::failure("write failed for '" + path + "'");
}

std::string level_key(double level) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", level);
  return buf;
}

json band_to_json(const std::vector<CurvePoint>& band, const std::vector<double>& levels) {
  json arr = json::array();
  for (const auto& pt : band) {
    json entry;
    entry["t"] = pt.time;
    entry["s_nominal"] = pt.s_nominal;
    entry["s_best"] = pt.s_best;
    json ci;
    for (double level : levels) {
      auto it = pt.ci.find(level);
      ci[level_key(level)] = {it->second.first, it->second.second};
    }
    entry["ci"] = ci;
    arr.push_back(entry);
  }
  return arr;
}

struct CurveResult {
  std::vector<std::pair<UncertaintyMode, std::vector<CurvePoint>>> bands;
  std::vector<std::pair<double, double>> censor_marks;
  std::vector<double> censor_times;
};

CurveResult compute_curve(const std::vector<PatientRecord>& patients, const InclusionRange& range,
                          const std::vector<UncertaintyMode>& modes,
                          const std::vector<double>& levels) {
  Problem prob = build_problem(patients, range);
  CurveResult res;
  for (auto mode : modes) res.bands.emplace_back(mode, confidence_band(prob, levels, mode));

  auto nominal = nominal_curve(prob.table, prob.nominal_inclusion);
  for (size_t j = 0; j < patients.size(); ++j) {
    if (!patients[j].censored || !prob.nominal_inclusion[j]) continue;
    double t = patients[j].survival_time;
    double s = 1.0;
    for (const auto& [tt, ss] : nominal) {
      if (tt <= t) s = ss;
    }
    res.censor_marks.emplace_back(t, s);
    res.censor_times.push_back(t);
  }
  return res;
}

json curve_to_json(const CurveResult& res, const std::vector<double>& levels) {
  json mode_bands;
  for (const auto& [mode, band] : res.bands) mode_bands[mode_name(mode)] = band_to_json(band, levels);
  json out;
  out["mode_bands"] = mode_bands;
  out["censor_times"] = res.censor_times;
  return out;
}

void add_curve_to_plot(PlotSpec& plot, const CurveResult& res, const std::string& color,
                       const std::string& label, const std::vector<double>& levels) {
  bool has_full = false;
  for (const auto& [mode, band] : res.bands) has_full |= mode == UncertaintyMode::full;

  double level_max = levels.empty() ? 0.95 : *std::max_element(levels.begin(), levels.end());
  for (const auto& [mode, band] : res.bands) {
    if (band.empty()) continue;
    for (double level : levels) {
      PlotBand pb;
      pb.color = color;
      // isolation bands are hatched when drawn on top of the combined band
      pb.hatched = has_full && mode != UncertaintyMode::full;
      pb.opacity = mode == UncertaintyMode::full ? (level == level_max ? 0.18 : 0.32) : 0.45;
      for (const auto& pt : band) {
        auto ci = pt.ci.at(level);
        pb.lower.times.push_back(pt.time);
        pb.lower.values.push_back(ci.first);
        pb.upper.times.push_back(pt.time);
        pb.upper.values.push_back(ci.second);
      }
      std::ostringstream lab;
      lab << label << ' ' << int(level * 100 + 0.5) << "% ";
      lab << (mode == UncertaintyMode::full
                  ? "full"
                  : (mode == UncertaintyMode::binomial_only ? "binomial" : "patient-wise"));
      pb.label = lab.str();
      plot.bands.push_back(std::move(pb));
    }
  }

  const auto& first_band = res.bands.front().second;
  PlotCurve nominal;
  nominal.color = color;
  nominal.dashed = true;
  nominal.label = label + " nominal";
  PlotCurve best;
  best.color = color;
  best.label = label + " best fit";
  bool best_differs = false;
  for (const auto& pt : first_band) {
    nominal.values.times.push_back(pt.time);
    nominal.values.values.push_back(pt.s_nominal);
    best.values.times.push_back(pt.time);
    best.values.values.push_back(pt.s_best);
    best_differs |= pt.s_best != pt.s_nominal;
  }
  plot.curves.push_back(nominal);
  if (best_differs) plot.curves.push_back(best);
  for (const auto& mark : res.censor_marks) plot.censor_marks.push_back(mark);
}

int run_single(const CommonOptions& opt, double parameter_min) {
  Datacard card = load_datacard(opt.datacard_path);
  std::vector<double> levels = opt.levels.empty() ? std::vector<double>{0.68, 0.95} : opt.levels;
  auto modes = selected_modes(opt);

  InclusionRange range;
  range.lower = parameter_min;
  CurveResult res = compute_curve(card.patients, range, modes, levels);

  json out;
  out["version"] = 1;
  out["command"] = "single";
  out["parameter_min"] = parameter_min;
  out["confidence_levels"] = levels;
  json curve = curve_to_json(res, levels);
  out["mode_bands"] = curve["mode_bands"];
  out["censor_times"] = curve["censor_times"];

  PlotSpec plot;
  add_curve_to_plot(plot, res, "#1f6fb4", "curve", levels);

  std::string svg_path = svg_output_path(opt.output_path);
  write_file(svg_path, render_svg(plot));
  write_file(json_sibling_path(svg_path), out.dump(2) + "\n");
  return 0;
}

json pvalue_to_json(const PValueReport& rep) {
  json out;
  out["method"] = rep.method;
  out["p"] = rep.p;
  out["statistic"] = rep.statistic;
  out["nll_null"] = rep.nll_null;
  out["nll_alt"] = rep.nll_alt;
  out["hazard_ratio"] = rep.hazard_ratio;
  out["degenerate"] = rep.degenerate;
  return out;
}

int run_twogroups(const CommonOptions& opt, double threshold, const std::string& pvalue_method,
                  bool fix_assignments) {
  Datacard card = load_datacard(opt.datacard_path);
  std::vector<double> levels = opt.levels.empty() ? std::vector<double>{0.68, 0.95} : opt.levels;
  auto modes = selected_modes(opt);

  InclusionRange below;
  below.upper = threshold;
  InclusionRange above;
  above.lower = threshold;

  size_t n_below = 0, n_above = 0;
  for (const auto& p : card.patients)
    (nominal_value(p.observable) < threshold ? n_below : n_above) += 1;

  json out;
  out["version"] = 1;
  out["command"] = "twogroups";
  out["parameter_threshold"] = threshold;
  out["confidence_levels"] = levels;

  PlotSpec plot;
  json curves = json::array();
  struct GroupDef {
    const char* label;
    const char* color;
    InclusionRange range;
    size_t n;
  };
  std::vector<GroupDef> groups = {{"below", "#c23b22", below, n_below},
                                  {"at_or_above", "#1f6fb4", above, n_above}};
  for (const auto& g : groups) {
    if (g.n == 0) {
      std::cerr << "warning: group '" << g.label << "' is empty at threshold " << threshold
                << "\n";
      continue;
    }
    CurveResult res = compute_curve(card.patients, g.range, modes, levels);
    json cj = curve_to_json(res, levels);
    cj["label"] = g.label;
    curves.push_back(cj);
    add_curve_to_plot(plot, res, g.color, g.label, levels);
  }
  out["curves"] = curves;

  if (n_below > 0 && n_above > 0) {
    TwoGroupProblem two = build_two_group_problem(card.patients, below, above);
    PValueOptions pv_opt;
    pv_opt.use_exact = pvalue_method == "exact";

    json pvj;
    json likelihood;
    likelihood["method"] = pvalue_method;
    if (!fix_assignments) {
      pv_opt.float_assignments = true;
      likelihood["floating"] = pvalue_to_json(likelihood_pvalue(two, pv_opt));
    } else {
      likelihood["floating"] = nullptr;
    }
    pv_opt.float_assignments = false;
    likelihood["fixed"] = pvalue_to_json(likelihood_pvalue(two, pv_opt));
    pvj["likelihood"] = likelihood;

    SurvivalGroup g0, g1;
    for (const auto& p : card.patients) {
      auto& g = nominal_value(p.observable) < threshold ? g0 : g1;
      g.times.push_back(p.survival_time);
      g.censored.push_back(p.censored ? 1 : 0);
    }
    LogRankResult lr = conventional_logrank(g0, g1);
    json lrj;
    lrj["u"] = lr.u;
    lrj["var_u"] = lr.var_u;
    lrj["statistic"] = lr.statistic;
    lrj["p"] = lr.p;
    lrj["degenerate"] = lr.degenerate;
    pvj["logrank"] = lrj;
    out["p_values"] = pvj;
  } else {
    std::cerr << "warning: p-values omitted (one group is empty)\n";
  }

  std::string svg_path = svg_output_path(opt.output_path);
  write_file(svg_path, render_svg(plot));
  write_file(json_sibling_path(svg_path), out.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Kaplan-Meier survival curves with likelihood-based confidence bands.\n"
      "Bands cover cohort-size (binomial) and per-patient observable\n"
      "uncertainties, separately or combined; the two-group command adds\n"
      "likelihood and conventional log-rank p-values."};
  app.require_subcommand(1);

  CommonOptions single_opt;
  double parameter_min = 0.0;
  CLI::App* single = app.add_subcommand(
      "single", "One curve: patients whose observable is at least --parameter-min");
  add_common(single, single_opt);
  single->add_option("--parameter-min", parameter_min, "Inclusion threshold on the observable")
      ->required();

  CommonOptions two_opt;
  double parameter_threshold = 0.0;
  std::string pvalue_method = "breslow";
  bool fix_assignments = false;
  CLI::App* two = app.add_subcommand(
      "twogroups", "Two curves split at --parameter-threshold, with p-values");
  add_common(two, two_opt);
  two->add_option("--parameter-threshold", parameter_threshold,
                  "Observable threshold separating the two curves")
      ->required();
  two->add_option("--p-value-method", pvalue_method, "Partial-likelihood flavor")
      ->check(CLI::IsMember({"breslow", "exact"}))
      ->capture_default_str();
  two->add_flag("--fix-assignments", fix_assignments,
                "Keep every patient in its nominal group for the p-value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitParse;
  }

  try {
    if (single->parsed()) return run_single(single_opt, parameter_min);
    return run_twogroups(two_opt, parameter_threshold, pvalue_method, fix_assignments);
  } catch (const DatacardError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  }
}
