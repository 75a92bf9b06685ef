#include "cred/workflow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "cred/error.hpp"

namespace cred {
namespace {

using nlohmann::json;

std::string staged(const char* stage, const std::exception& e) {
  return std::string(stage) + ": " + e.what();
}

// Runs f and re-throws any library error with the stage name prefixed,
// keeping its type.
template <class F>
auto in_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ValidationError& e) {
    throw ValidationError(staged(stage, e));
  } catch (const InfeasibleError& e) {
    throw InfeasibleError(staged(stage, e));
  } catch (const ConfigError& e) {
    throw ConfigError(staged(stage, e));
  } catch (const ContractError& e) {
    throw ContractError(staged(stage, e));
  } catch (const InsufficientDataError& e) {
    throw InsufficientDataError(staged(stage, e));
  } catch (const RangeError& e) {
    throw RangeError(staged(stage, e));
  } catch (const BuildError& e) {
    throw BuildError(staged(stage, e));
  } catch (const DegenerateEigenvalueError& e) {
    throw DegenerateEigenvalueError(staged(stage, e));
  } catch (const TrackingError& e) {
    throw TrackingError(staged(stage, e));
  } catch (const NumericalError& e) {
    throw NumericalError(staged(stage, e));
  }
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

json complex_json(Complex c) { return json::array({c.real(), c.imag()}); }

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

const char* to_string(GainMode m) {
  switch (m) {
    case GainMode::kAuto: return "auto";
    case GainMode::kWorstCase: return "worst_case";
    case GainMode::kMeanOnly: return "mean_only";
  }
  return "unknown";
}

const char* to_string(Branch b) {
  switch (b) {
    case Branch::kNoAttack: return "no_attack";
    case Branch::kPrecheckStable: return "precheck_stable";
    case Branch::kCredApplied: return "cred_applied";
    case Branch::kCredInfeasibleShed: return "cred_infeasible_shed";
  }
  return "unknown";
}

GainMode parse_gain_mode(const std::string& s) {
  if (s == "auto") return GainMode::kAuto;
  if (s == "worst_case") return GainMode::kWorstCase;
  if (s == "mean_only") return GainMode::kMeanOnly;
  throw ConfigError("unknown gain mode '" + s + "' (auto, worst_case, mean_only)");
}

const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::kVulnerableFraction: return "vulnerable_fraction";
    case SweepAxis::kWindCapacity: return "wind_capacity";
    case SweepAxis::kEta: return "eta";
  }
  return "unknown";
}

SweepAxis parse_sweep_axis(const std::string& s) {
  if (s == "vulnerable_fraction") return SweepAxis::kVulnerableFraction;
  if (s == "wind_capacity") return SweepAxis::kWindCapacity;
  if (s == "eta") return SweepAxis::kEta;
  throw ConfigError("unknown sweep axis '" + s + "' (vulnerable_fraction, wind_capacity, eta)");
}

void WorkflowConfig::validate() const {
  if (!(threshold >= 0.0)) throw ConfigError("detection threshold r0 must be non-negative");
  if (!std::isfinite(score)) throw ConfigError("detection score must be finite");
  ConfidenceSpec check(eta);
  (void)check;
  if (!(eps_lim > 0.0)) throw ConfigError("eps_lim must be positive");
  if (!(step_divisions >= 4.0)) throw ConfigError("step divisions must be at least 4");
  if (!(strict_margin > 0.0)) throw ConfigError("strict margin must be positive");
  if (stability_margin && *stability_margin < 0.0) throw ConfigError("stability margin must be non-negative");
}

WorkflowInputs load_inputs(const WorkflowConfig& cfg) {
  WorkflowInputs in;
  in.scenario = in_stage("load scenario", [&] { return load_scenario(cfg.scenario_path); });
  if (cfg.samples_path) {
    const auto samples = in_stage("load samples", [&] {
      return load_samples(*cfg.samples_path, in.scenario.dispatch.areas());
    });
    in.estimate = in_stage("sample moments", [&] {
      return moments_from_samples(samples, in.scenario.dispatch.areas());
    });
  }
  return in;
}

ResolvedGains resolve_gains(const WorkflowInputs& in, const WorkflowConfig& cfg,
                            std::vector<std::string>* warnings) {
  const ScenarioFile& s = in.scenario;
  const SystemModel& m = s.dispatch.model;
  const std::size_t n = m.areas();
  ResolvedGains out;
  out.budget = worst_case_gain(m, s.attack.areas, s.attack.static_component);

  std::optional<AttackEstimate> est = in.estimate;
  if (!est && s.attack.estimate && cfg.mode != GainMode::kWorstCase) {
    const auto samples = synthesize_samples(*s.attack.estimate, s.attack.areas,
                                            s.attack.synthetic_samples, cfg.seed);
    est = moments_from_samples(samples, n);
  }
  out.estimate = est;

  std::vector<double> raw;
  if (cfg.mode == GainMode::kWorstCase || (cfg.mode == GainMode::kAuto && !est)) {
    out.source = "worst_case";
    raw = out.budget;
  } else if (!est) {
    throw ConfigError("mean_only mode needs detector samples or an estimate in the scenario");
  } else if (cfg.mode == GainMode::kMeanOnly) {
    out.source = "mean";
    raw = est->mean;
  } else {
    out.source = "robust";
    raw = robust_gain(*est, ConfidenceSpec(cfg.eta));
  }
  if (raw.size() != n) throw ConfigError("attack estimate does not match the area count");

  std::vector<bool> attacked(n, false);
  for (AreaIndex a : s.attack.areas) attacked[a] = true;
  for (std::size_t a = 0; a < n; ++a) {
    if (!attacked[a]) raw[a] = 0.0;
    if (raw[a] < 0.0) {
      if (warnings) warnings->push_back("area " + std::to_string(a) + ": negative gain estimate raised to 0");
      raw[a] = 0.0;
    }
  }
  out.gains = clamp_to_budget(raw, out.budget, warnings);
  return out;
}

WorkflowReport run_workflow(const WorkflowInputs& in, const WorkflowConfig& cfg) {
  cfg.validate();
  const DispatchScenario scn = resolve_commitment(in.scenario.dispatch);
  const std::size_t n = scn.areas();
  WorkflowReport r;
  r.eps_lim_used = cfg.eps_lim;

  r.baseline = in_stage("baseline dispatch", [&] {
    return solve_dispatch(scn, StabilityConstraintSet::none(scn.num_periods(), n), DispatchOptions{});
  });
  r.baseline_cost = r.baseline.total_cost;
  r.final_solution = r.baseline;
  r.final_cost = r.baseline_cost;

  if (cfg.score <= cfg.threshold) {
    r.branch = Branch::kNoAttack;
  } else {
    r.gains = in_stage("attack gains", [&] { return resolve_gains(in, cfg, &r.warnings); });
    const PrecheckResult pre = in_stage("stability precheck", [&] {
      std::vector<DroopSchedule> droop;
      for (std::size_t t = 0; t < scn.num_periods(); ++t) droop.push_back(r.baseline.droop(scn, t));
      return stability_precheck(scn, droop, r.gains.gains);
    });
    r.precheck = pre.periods;
    if (pre.stable) {
      r.branch = Branch::kPrecheckStable;
      in_stage("validation", [&] { validate_solution(scn, r.final_solution, r.gains.gains); });
    } else {
      double eps = cfg.eps_lim;
      for (int attempt = 0;; ++attempt) {
        TableBuildOptions topts;
        topts.eps_lim = eps;
        topts.step_divisions = cfg.step_divisions;
        topts.screening_margin = cfg.screening_margin;
        StabilityConstraintSet stab = in_stage("segment tables", [&] {
          return build_stability_constraints(scn, r.gains.gains, in.scenario.attack.areas, r.gains.budget, topts);
        });
        stab.strict_margin = cfg.strict_margin;
        stab.stability_margin = cfg.stability_margin ? *cfg.stability_margin * eps / cfg.eps_lim : eps;
        r.segment_tables = 0;
        for (const auto& t : stab.tables) r.segment_tables += t.size();

        DispatchOptions opts;
        opts.allow_shedding = false;
        r.branch = Branch::kCredApplied;
        DispatchSolution sol;
        try {
          sol = in_stage("stability-constrained dispatch", [&] { return solve_dispatch(scn, stab, opts); });
        } catch (const InfeasibleError& e) {
          r.warnings.push_back(e.what());
          opts.allow_shedding = true;
          r.branch = Branch::kCredInfeasibleShed;
          sol = in_stage("stability-constrained dispatch with shedding",
                         [&] { return solve_dispatch(scn, stab, opts); });
        }
        try {
          in_stage("validation", [&] { validate_solution(scn, sol, r.gains.gains, &stab); });
        } catch (const ValidationError& e) {
          if (attempt > 0) throw;
          r.warnings.push_back(std::string(e.what()) + "; rebuilding tables at half eps_lim");
          eps *= 0.5;
          ++r.table_rebuilds;
          continue;
        }
        r.eps_lim_used = eps;
        r.final_solution = std::move(sol);
        r.final_cost = r.final_solution.total_cost;
        break;
      }
    }
  }
  r.cost_increment = in_stage("cost increment", [&] { return cost_increment(r.baseline_cost, r.final_cost); });

  if (!cfg.output_dir.empty()) {
    const auto dir = cfg.output_dir;
    r.artifacts = {"report.json", "solution.json", "summary.csv"};
    write_text_file(dir / "solution.json", solution_to_json(r.final_solution, scn));
    write_text_file(dir / "summary.csv", summary_csv(r, scn));
    write_text_file(dir / "report.json", report_to_json(r, scn));
  }
  return r;
}

WorkflowReport run_workflow(const WorkflowConfig& cfg) { return run_workflow(load_inputs(cfg), cfg); }

std::string solution_to_json(const DispatchSolution& sol, const DispatchScenario& scn) {
  json j;
  j["total_cost"] = sol.total_cost;
  j["shedding_allowed"] = sol.shedding_allowed;
  j["node_count"] = sol.node_count;
  json periods = json::array();
  for (std::size_t t = 0; t < sol.periods.size(); ++t) {
    const PeriodDispatch& p = sol.periods[t];
    json areas = json::array();
    for (std::size_t a = 0; a < p.areas.size(); ++a) {
      const AreaDispatch& d = p.areas[a];
      areas.push_back({{"area", a},
                       {"sg_power", d.sg_power},
                       {"wind_power", d.wind_power},
                       {"ibr_ref", d.wind_power},
                       {"wind_reserve", d.wind_reserve},
                       {"droop_gain", d.droop_gain},
                       {"shed", d.shed},
                       {"charge", d.charge},
                       {"discharge", d.discharge}});
    }
    json gens = json::array();
    for (std::size_t g = 0; g < p.generator_power.size(); ++g) {
      gens.push_back({{"name", scn.generators[g].name},
                      {"committed", scn.generators[g].committed.empty() ? 1 : scn.generators[g].committed[t]},
                      {"power", p.generator_power[g]}});
    }
    periods.push_back({{"period", t}, {"cost", p.cost}, {"areas", areas}, {"generators", gens}, {"soc", p.soc}});
  }
  j["periods"] = periods;
  json segs = json::array();
  for (const SegmentChoice& s : sol.segments) {
    segs.push_back({{"period", s.period}, {"eigen_index", s.eigen_index}, {"area", s.area}, {"segment", s.segment}});
  }
  j["segments"] = segs;
  json certs = json::array();
  for (const StabilityCertificate& c : sol.certificates) {
    certs.push_back({{"period", c.period},
                     {"stable", c.stable},
                     {"max_real", c.max_real},
                     {"worst_index", c.worst_index},
                     {"worst_eigenvalue", complex_json(c.worst_eigenvalue)},
                     {"predicted_max_real", number_or_null(c.predicted_max_real)},
                     {"prediction_error", number_or_null(c.prediction_error)}});
  }
  j["certificates"] = certs;
  return j.dump(2) + "\n";
}

std::string report_to_json(const WorkflowReport& r, const DispatchScenario& scn) {
  json j;
  j["branch_taken"] = to_string(r.branch);
  j["baseline_cost"] = r.baseline_cost;
  j["final_cost"] = r.final_cost;
  j["cost_increment"] = r.cost_increment;
  j["mean_increment_per_period"] = r.periods() ? r.cost_increment / static_cast<double>(r.periods()) : 0.0;
  j["gain_source"] = r.gains.source;
  j["robust_gains"] = r.gains.gains;
  j["attack_budget"] = r.gains.budget;
  if (r.gains.estimate) {
    j["estimate"] = {{"mean", r.gains.estimate->mean}, {"std", r.gains.estimate->std}};
  }
  j["eps_lim_used"] = r.eps_lim_used;
  j["table_rebuilds"] = r.table_rebuilds;
  j["segment_tables"] = r.segment_tables;
  json pre = json::array();
  for (std::size_t t = 0; t < r.precheck.size(); ++t) {
    pre.push_back({{"period", t}, {"stable", r.precheck[t].stable}, {"max_real", r.precheck[t].max_real}});
  }
  j["precheck"] = pre;
  json periods = json::array();
  for (std::size_t t = 0; t < r.periods(); ++t) {
    const PeriodDispatch& b = r.baseline.periods[t];
    const PeriodDispatch& f = r.final_solution.periods[t];
    json droop = json::array(), reserve = json::array(), shed = json::array();
    for (std::size_t a = 0; a < scn.areas(); ++a) {
      droop.push_back(f.areas[a].droop_gain);
      reserve.push_back(f.areas[a].wind_reserve);
      shed.push_back(f.areas[a].shed);
    }
    periods.push_back({{"period", t},
                       {"baseline_cost", b.cost},
                       {"final_cost", f.cost},
                       {"droop_gain", droop},
                       {"wind_reserve", reserve},
                       {"shed", shed}});
  }
  j["periods"] = periods;
  json certs = json::array();
  for (const StabilityCertificate& c : r.final_solution.certificates) {
    certs.push_back({{"period", c.period}, {"stable", c.stable}, {"max_real", c.max_real}});
  }
  j["certificates"] = certs;
  j["warnings"] = r.warnings;
  j["artifacts"] = r.artifacts;
  return j.dump(2) + "\n";
}

std::string summary_csv(const WorkflowReport& r, const DispatchScenario& scn) {
  std::ostringstream os;
  os << "period,area,baseline_cost,final_cost,sg_power_mw,wind_power_mw,wind_reserve_mw,droop_gain,shed_mw\n";
  for (std::size_t t = 0; t < r.periods(); ++t) {
    const PeriodDispatch& f = r.final_solution.periods[t];
    for (std::size_t a = 0; a < scn.areas(); ++a) {
      const AreaDispatch& d = f.areas[a];
      os << t << ',' << a << ',' << fmt(r.baseline.periods[t].cost) << ',' << fmt(f.cost) << ','
         << fmt(d.sg_power) << ',' << fmt(d.wind_power) << ',' << fmt(d.wind_reserve) << ','
         << fmt(d.droop_gain) << ',' << fmt(d.shed) << '\n';
    }
  }
  return os.str();
}

std::vector<SweepRow> sweep_study(const WorkflowInputs& in, const WorkflowConfig& cfg, SweepAxis axis,
                                  const std::vector<double>& grid) {
  std::vector<SweepRow> rows;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    SweepRow row;
    row.value = grid[k];
    try {
      WorkflowInputs point = in;
      WorkflowConfig c = cfg;
      switch (axis) {
        case SweepAxis::kVulnerableFraction: set_vulnerable_fraction(point.scenario, grid[k]); break;
        case SweepAxis::kWindCapacity: set_wind_capacity(point.scenario, grid[k]); break;
        case SweepAxis::kEta: c.eta = grid[k]; break;
      }
      if (!cfg.output_dir.empty()) c.output_dir = cfg.output_dir / ("point_" + std::to_string(k));
      const WorkflowReport r = run_workflow(point, c);
      row.ok = true;
      row.branch = to_string(r.branch);
      row.baseline_cost = r.baseline_cost;
      row.final_cost = r.final_cost;
      row.cost_increment = r.cost_increment;
      row.mean_increment = r.cost_increment / static_cast<double>(std::max<std::size_t>(1, r.periods()));
      row.shed = r.final_solution.total_shed();
    } catch (const Error& e) {
      row.ok = false;
      row.branch = "error";
      row.message = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows, SweepAxis axis) {
  std::ostringstream os;
  os << to_string(axis) << ",status,branch,baseline_cost,final_cost,cost_increment,mean_increment,shed_mw,message\n";
  for (const SweepRow& r : rows) {
    std::string msg = r.message;
    std::replace(msg.begin(), msg.end(), '"', '\'');
    os << fmt(r.value) << ',' << (r.ok ? "ok" : "failed") << ',' << r.branch << ',' << fmt(r.baseline_cost)
       << ',' << fmt(r.final_cost) << ',' << fmt(r.cost_increment) << ',' << fmt(r.mean_increment) << ','
       << fmt(r.shed) << ",\"" << msg << "\"\n";
  }
  return os.str();
}

}  // namespace cred
