// Command-line front end: analyze, linearize, dispatch, simulate, workflow, sweep.
//
// Exit codes: 0 success, 2 validation failure, 3 infeasible, 4 input error,
// 1 anything else.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cred/dispatch.hpp"
#include "cred/error.hpp"
#include "cred/linearization.hpp"
#include "cred/scenario_io.hpp"
#include "cred/simulation.hpp"
#include "cred/stability.hpp"
#include "cred/workflow.hpp"

namespace {

using namespace cred;
namespace fs = std::filesystem;

struct Common {
  std::string scenario;
  std::string samples;
  std::string out = "out";
  double eta = kDefaultEta;
  std::uint64_t seed = 1;
  bool worst_case = false;
  double eps_lim = kDefaultEpsLim;
  std::optional<double> stability_margin;
  std::size_t period = 0;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--scenario", c.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  app->add_option("--samples", c.samples, "Detector sample JSON file")->check(CLI::ExistingFile);
  app->add_option("--out", c.out, "Output directory")->capture_default_str();
  app->add_option("--eta", c.eta, "Confidence level in (0, 1)")->capture_default_str();
  app->add_option("--seed", c.seed, "Seed for sample synthesis")->capture_default_str();
  app->add_flag("--worst-case", c.worst_case, "Use the budget-saturating attack gains");
  app->add_option("--eps-lim", c.eps_lim, "Linearization error bound")->capture_default_str();
  app->add_option("--stability-margin", c.stability_margin, "Clearance of the predicted max Re (default: eps-lim)");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("cannot parse '" + item + "' as a number");
    }
  }
  return out;
}

WorkflowConfig to_config(const Common& c) {
  WorkflowConfig cfg;
  cfg.scenario_path = c.scenario;
  if (!c.samples.empty()) cfg.samples_path = fs::path(c.samples);
  cfg.eta = c.eta;
  cfg.seed = c.seed;
  cfg.eps_lim = c.eps_lim;
  cfg.stability_margin = c.stability_margin;
  cfg.output_dir = c.out;
  if (c.worst_case) cfg.mode = GainMode::kWorstCase;
  return cfg;
}

// Attack gains for the single-point subcommands: worst case on request,
// robust gains when an estimate is available, none otherwise.
std::vector<double> point_gains(const Common& c, const WorkflowInputs& in) {
  WorkflowConfig cfg = to_config(c);
  const bool have_estimate = in.estimate || in.scenario.attack.estimate;
  if (!c.worst_case && !have_estimate) return std::vector<double>(in.scenario.dispatch.areas(), 0.0);
  std::vector<std::string> warnings;
  ResolvedGains g = resolve_gains(in, cfg, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  return g.gains;
}

DroopSchedule droop_from(const std::string& list, std::size_t n) {
  DroopSchedule d = DroopSchedule::none(n);
  if (list.empty()) return d;
  d.droop_gain = parse_list(list);
  if (d.droop_gain.size() != n) throw ConfigError("--droop needs one value per area");
  return d;
}

int run_analyze(const Common& c, const std::string& droop) {
  WorkflowInputs in = load_inputs(to_config(c));
  const DispatchScenario scn = resolve_commitment(in.scenario.dispatch);
  const SystemModel m = period_model(scn, c.period);
  const std::vector<double> gains = point_gains(c, in);
  const StateSpace ss = build_state_space(m, AttackProfile::from_gains(gains), droop_from(droop, m.areas()));
  const EigenSolution eig = eigen_decompose(ss);
  const StabilityVerdict v = is_stable(eig);

  std::ostringstream ev;
  ev << "index,real,imag,damping_ratio\n";
  for (std::size_t i = 0; i < eig.size(); ++i) {
    const Complex l = eig.eigenvalues[i];
    const double zeta = std::abs(l) > 0.0 ? -l.real() / std::abs(l) : 0.0;
    ev << i << ',' << fmt(l.real()) << ',' << fmt(l.imag()) << ',' << fmt(zeta) << '\n';
  }
  std::ostringstream sv;
  sv << "eigen_index,area,dkl_real,dkl_imag,dkc_real,dkc_imag\n";
  for (std::size_t i = 0; i < eig.size(); ++i) {
    for (AreaIndex a = 0; a < m.areas(); ++a) {
      try {
        const SensitivityRecord r = sensitivity(ss, eig, i, a);
        sv << i << ',' << a << ',' << fmt(r.d_lambda_dKL.real()) << ',' << fmt(r.d_lambda_dKL.imag()) << ','
           << fmt(r.d_lambda_dKC.real()) << ',' << fmt(r.d_lambda_dKC.imag()) << '\n';
      } catch (const DegenerateEigenvalueError& e) {
        std::cerr << "warning: eigenvalue " << i << " skipped: " << e.what() << '\n';
        break;
      }
    }
  }
  const fs::path out(c.out);
  write_text_file(out / "eigenvalues.csv", ev.str());
  write_text_file(out / "sensitivities.csv", sv.str());
  std::cout << (v.stable ? "stable" : "unstable") << " max_real=" << fmt(v.max_real) << '\n';
  return 0;
}

int run_linearize(const Common& c, long area_opt, long eigen_opt, double range_opt, double divisions) {
  WorkflowInputs in = load_inputs(to_config(c));
  const DispatchScenario scn = resolve_commitment(in.scenario.dispatch);
  const SystemModel m = period_model(scn, c.period);
  const std::vector<double> budget =
      worst_case_gain(m, in.scenario.attack.areas, in.scenario.attack.static_component);

  std::vector<AreaIndex> areas;
  if (area_opt >= 0) {
    areas.push_back(static_cast<AreaIndex>(area_opt));
  } else {
    areas = in.scenario.attack.areas;
  }
  std::vector<double> range(m.areas(), 0.0);
  for (AreaIndex a : areas) {
    if (a >= m.areas()) throw ConfigError("--area is out of range");
    range[a] = range_opt != 0.0 ? range_opt : budget[a];
    if (range[a] == 0.0) throw ConfigError("area " + std::to_string(a) + " has no attack budget; pass --range");
  }
  std::vector<CriticalPair> pairs;
  if (eigen_opt >= 0) {
    for (AreaIndex a : areas) pairs.push_back({static_cast<std::size_t>(eigen_opt), a});
  } else {
    pairs = select_critical_pairs(m, areas, range, std::numeric_limits<double>::infinity());
  }

  std::ostringstream seg, audit;
  seg << "eigen_index,area,segment,abscissa,eig_real,eig_imag,slope_real,slope_imag\n";
  audit << "eigen_index,area,abscissa,true_real,true_imag,estimate_real,estimate_imag,error,segment\n";
  for (const CriticalPair& p : pairs) {
    const double r = range[p.area];
    const SegmentTable t = build_segment_table(m, p.eigen_index, p.area, r, c.eps_lim, std::abs(r) / divisions);
    for (std::size_t k = 0; k < t.points.size(); ++k) {
      const auto& pt = t.points[k];
      seg << p.eigen_index << ',' << p.area << ',' << k << ',' << fmt(pt.abscissa) << ','
          << fmt(pt.eigenvalue.real()) << ',' << fmt(pt.eigenvalue.imag()) << ',' << fmt(pt.slope.real())
          << ',' << fmt(pt.slope.imag()) << '\n';
    }
    for (const auto& e : t.audit) {
      audit << p.eigen_index << ',' << p.area << ',' << fmt(e.abscissa) << ',' << fmt(e.true_eigenvalue.real())
            << ',' << fmt(e.true_eigenvalue.imag()) << ',' << fmt(e.estimate.real()) << ','
            << fmt(e.estimate.imag()) << ',' << fmt(e.error) << ',' << e.segment << '\n';
    }
    std::cout << "eigenvalue " << p.eigen_index << " area " << p.area << ": " << t.points.size()
              << " segments, max error " << fmt(t.max_error) << '\n';
  }
  const fs::path out(c.out);
  write_text_file(out / "segments.csv", seg.str());
  write_text_file(out / "sweep_audit.csv", audit.str());
  return 0;
}

void print_report(const WorkflowReport& r) {
  std::cout << "branch=" << to_string(r.branch) << " baseline_cost=" << fmt(r.baseline_cost)
            << " final_cost=" << fmt(r.final_cost) << " increment=" << fmt(r.cost_increment) << '\n';
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
}

int run_workflow_cmd(const Common& c, WorkflowConfig cfg) {
  const WorkflowReport r = run_workflow(cfg);
  print_report(r);
  (void)c;
  return 0;
}

int run_simulate(const Common& c, const std::string& droop, const std::string& solution, double step_mw,
                 long step_area, double t_end, double dt) {
  WorkflowInputs in = load_inputs(to_config(c));
  const DispatchScenario scn = resolve_commitment(in.scenario.dispatch);
  const SystemModel m = period_model(scn, c.period);
  const std::size_t n = m.areas();
  const std::vector<double> gains = point_gains(c, in);

  DroopSchedule d = droop_from(droop, n);
  if (!solution.empty()) {
    const auto doc = nlohmann::json::parse(read_text_file(solution));
    const auto& areas = doc.at("periods").at(c.period).at("areas");
    for (std::size_t a = 0; a < n; ++a) {
      d.droop_gain[a] = areas.at(a).at("droop_gain").get<double>();
      d.power_ref[a] = areas.at(a).at("ibr_ref").get<double>() / m.base_power;
    }
  }
  const StateSpace ss = build_state_space(m, AttackProfile::from_gains(gains), d);

  AreaIndex area = step_area >= 0 ? static_cast<AreaIndex>(step_area)
                                  : (in.scenario.attack.areas.empty() ? 0 : in.scenario.attack.areas.front());
  if (area >= n) throw ConfigError("--step-area is out of range");
  StepDisturbance step;
  step.delta_p.assign(n, 0.0);
  const double mw = step_mw > 0.0 ? step_mw : 0.01 * scn.periods.at(c.period).demand[area];
  step.delta_p[area] = mw / m.base_power;
  if (dt <= 0.0) dt = std::min(0.01, max_stable_step(ss));

  const Trajectory traj = simulate(ss, step, t_end, dt);
  std::ostringstream os;
  os << "t";
  for (std::size_t a = 0; a < n; ++a) os << ",omega_" << a;
  for (std::size_t a = 0; a < n; ++a) os << ",delta_" << a;
  os << '\n';
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    os << fmt(traj.times[k]);
    for (std::size_t a = 0; a < n; ++a) os << ',' << fmt(traj.omega(k, a));
    for (std::size_t a = 0; a < n; ++a) os << ',' << fmt(traj.delta(k, a));
    os << '\n';
  }
  write_text_file(fs::path(c.out) / "trajectory.csv", os.str());
  try {
    const Classification cls = classify_trajectory(traj);
    std::cout << "classification=" << to_string(cls.verdict) << " rate=" << fmt(cls.rate)
              << " peaks=" << cls.peaks << (traj.diverged ? " diverged" : "") << '\n';
  } catch (const NumericalError& e) {
    std::cout << "classification=indeterminate (" << e.what() << ")\n";
  }
  return 0;
}

int run_sweep(const Common& c, WorkflowConfig cfg, const std::string& axis, const std::string& values) {
  const SweepAxis ax = parse_sweep_axis(axis);
  const std::vector<double> grid = parse_list(values);
  const WorkflowInputs in = load_inputs(cfg);
  const fs::path out(c.out);
  cfg.output_dir.clear();
  const auto rows = sweep_study(in, cfg, ax, grid);
  write_text_file(out / "sweep.csv", sweep_to_csv(rows, ax));
  for (const auto& r : rows) {
    std::cout << to_string(ax) << '=' << fmt(r.value) << ' ' << r.branch << " increment=" << fmt(r.cost_increment)
              << " shed=" << fmt(r.shed) << (r.ok ? "" : " error: " + r.message) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cyber-resilient economic dispatch toolkit"};
  app.require_subcommand(1);

  Common c;
  std::string droop, solution, mode = "auto", axis, values;
  long area = -1, eigen = -1, step_area = -1;
  double range = 0.0, divisions = kDefaultStepDivisions, step_mw = 0.0, t_end = 30.0, dt = 0.0;
  double score = 1.0, threshold = 0.5;

  auto* analyze = app.add_subcommand("analyze", "Eigenvalues and sensitivities of one period");
  add_common(analyze, c);
  analyze->add_option("--period", c.period, "Period index");
  analyze->add_option("--droop", droop, "Comma-separated K^C per area (p.u.)");

  auto* linearize = app.add_subcommand("linearize", "Segment tables by recursive linearization");
  add_common(linearize, c);
  linearize->add_option("--period", c.period, "Period index");
  linearize->add_option("--area", area, "Area (default: every attacked area)");
  linearize->add_option("--eigen", eigen, "Eigenvalue index (default: all in the upper half plane)");
  linearize->add_option("--range", range, "Sweep end (default: attack budget)");
  linearize->add_option("--divisions", divisions, "Grid steps over the range")->capture_default_str();

  auto* dispatch = app.add_subcommand("dispatch", "Stability-constrained dispatch");
  add_common(dispatch, c);
  dispatch->add_option("--mode", mode, "Gain mode: auto, worst_case, mean_only")->capture_default_str();

  auto* sim = app.add_subcommand("simulate", "Step response of one period");
  add_common(sim, c);
  sim->add_option("--period", c.period, "Period index");
  sim->add_option("--droop", droop, "Comma-separated K^C per area (p.u.)");
  sim->add_option("--solution", solution, "Take droop from a solution.json")->check(CLI::ExistingFile);
  sim->add_option("--step-mw", step_mw, "Load step in MW (default 1% of area demand)");
  sim->add_option("--step-area", step_area, "Area receiving the step");
  sim->add_option("--t-end", t_end, "Simulation horizon in s")->capture_default_str();
  sim->add_option("--dt", dt, "Step size in s (default: min(0.01, resolution guard))");

  auto* wf = app.add_subcommand("workflow", "Detection-gated operational workflow");
  add_common(wf, c);
  wf->add_option("--score", score, "Detection score r")->capture_default_str();
  wf->add_option("--threshold", threshold, "Detection threshold r0")->capture_default_str();
  wf->add_option("--mode", mode, "Gain mode: auto, worst_case, mean_only")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "Cost increment along one parameter axis");
  add_common(sweep, c);
  sweep->add_option("--axis", axis, "vulnerable_fraction, wind_capacity or eta")->required();
  sweep->add_option("--values", values, "Comma-separated grid")->required();
  sweep->add_option("--mode", mode, "Gain mode: auto, worst_case, mean_only")->capture_default_str();
  sweep->add_option("--score", score, "Detection score r")->capture_default_str();
  sweep->add_option("--threshold", threshold, "Detection threshold r0")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 4;
  }

  try {
    auto config = [&] {
      WorkflowConfig cfg = to_config(c);
      if (!c.worst_case) cfg.mode = parse_gain_mode(mode);
      cfg.score = score;
      cfg.threshold = threshold;
      return cfg;
    };
    if (*analyze) return run_analyze(c, droop);
    if (*linearize) return run_linearize(c, area, eigen, range, divisions);
    if (*sim) return run_simulate(c, droop, solution, step_mw, step_area, t_end, dt);
    if (*dispatch) {
      WorkflowConfig cfg = config();
      cfg.score = 1.0;
      cfg.threshold = 0.0;
      return run_workflow_cmd(c, cfg);
    }
    if (*wf) return run_workflow_cmd(c, config());
    if (*sweep) return run_sweep(c, config(), axis, values);
  } catch (const ValidationError& e) {
    std::cerr << "validation failure: " << e.what() << '\n';
    return 2;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 4;
  } catch (const ContractError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 4;
  } catch (const InsufficientDataError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 4;
  } catch (const RangeError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 4;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
