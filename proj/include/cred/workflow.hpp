#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cred/dispatch.hpp"
#include "cred/dr_uncertainty.hpp"
#include "cred/scenario_io.hpp"

namespace cred {

enum class GainMode { kAuto, kWorstCase, kMeanOnly };
enum class Branch { kNoAttack, kPrecheckStable, kCredApplied, kCredInfeasibleShed };

const char* to_string(GainMode m);
const char* to_string(Branch b);
GainMode parse_gain_mode(const std::string& s);

struct WorkflowConfig {
  std::filesystem::path scenario_path;
  std::optional<std::filesystem::path> samples_path;
  double score = 1.0;      // detection score r
  double threshold = 0.5;  // r0
  double eta = kDefaultEta;
  GainMode mode = GainMode::kAuto;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir;  // empty writes nothing
  double eps_lim = kDefaultEpsLim;
  double step_divisions = kDefaultStepDivisions;
  double strict_margin = 1e-6;
  // Clearance demanded of the predicted spectrum; defaults to eps_lim.
  std::optional<double> stability_margin;
  double screening_margin = 0.5;

  void validate() const;
};

struct WorkflowInputs {
  ScenarioFile scenario;
  // Moments from detector samples. When absent, the scenario's own estimate
  // (if any) is sampled with the configured seed.
  std::optional<AttackEstimate> estimate;
};

struct ResolvedGains {
  std::vector<double> gains;
  std::vector<double> budget;
  std::string source;  // worst_case, robust, mean
  std::optional<AttackEstimate> estimate;
};

ResolvedGains resolve_gains(const WorkflowInputs& in, const WorkflowConfig& cfg,
                            std::vector<std::string>* warnings);

struct WorkflowReport {
  Branch branch = Branch::kNoAttack;
  double baseline_cost = 0.0;
  double final_cost = 0.0;
  double cost_increment = 0.0;
  ResolvedGains gains;
  double eps_lim_used = 0.0;
  std::size_t table_rebuilds = 0;
  std::size_t segment_tables = 0;
  DispatchSolution baseline;
  DispatchSolution final_solution;
  std::vector<StabilityVerdict> precheck;
  std::vector<std::string> warnings;
  std::vector<std::string> artifacts;

  std::size_t periods() const { return baseline.periods.size(); }
};

// Full operational sequence: baseline dispatch, detection gate, stability
// precheck, stability-constrained redispatch with exact validation. Errors
// carry the name of the failing stage.
WorkflowReport run_workflow(const WorkflowInputs& in, const WorkflowConfig& cfg);
// Loads the scenario and samples named in cfg first.
WorkflowReport run_workflow(const WorkflowConfig& cfg);

WorkflowInputs load_inputs(const WorkflowConfig& cfg);

std::string report_to_json(const WorkflowReport& r, const DispatchScenario& scn);
std::string solution_to_json(const DispatchSolution& sol, const DispatchScenario& scn);
std::string summary_csv(const WorkflowReport& r, const DispatchScenario& scn);

enum class SweepAxis { kVulnerableFraction, kWindCapacity, kEta };
const char* to_string(SweepAxis a);
SweepAxis parse_sweep_axis(const std::string& s);

struct SweepRow {
  double value = 0.0;
  bool ok = false;
  std::string branch;
  double baseline_cost = 0.0;
  double final_cost = 0.0;
  double cost_increment = 0.0;      // whole horizon
  double mean_increment = 0.0;      // per period
  double shed = 0.0;                // MW summed over the horizon
  std::string message;
};

// One workflow run per grid value; failures are recorded and the sweep
// carries on. Runs are sequential and write under output_dir/point_k when an
// output directory is configured.
std::vector<SweepRow> sweep_study(const WorkflowInputs& in, const WorkflowConfig& cfg, SweepAxis axis,
                                  const std::vector<double>& grid);
std::string sweep_to_csv(const std::vector<SweepRow>& rows, SweepAxis axis);

}  // namespace cred
