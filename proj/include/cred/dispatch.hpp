#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "cred/grid_model.hpp"
#include "cred/linearization.hpp"
#include "cred/milp.hpp"
#include "cred/stability.hpp"

namespace cred {

// Aggregated synchronous unit. Powers in MW, cost per MWh.
struct Generator {
  std::string name;
  AreaIndex area = 0;
  double marginal_cost = 0.0;
  double p_min = 0.0;
  double p_max = 0.0;
  // One 0/1 entry per period. Empty means "commit automatically".
  std::vector<int> committed;
};

struct Storage {
  std::string name;
  AreaIndex area = 0;
  double soc_min = 0.0;      // fraction of energy
  double soc_max = 1.0;
  double soc_initial = 0.5;
  double efficiency = 1.0;   // applied on charge and on discharge
  double power_limit = 0.0;  // MW
  double energy = 0.0;       // MWh
};

struct Period {
  std::vector<double> demand;          // MW per area
  std::vector<double> wind_available;  // MW per area
};

struct DispatchScenario {
  // Dynamics with every synchronous unit online.
  SystemModel model;
  std::vector<Period> periods;
  std::vector<Generator> generators;
  std::vector<Storage> storage;
  double shed_cost = 1000.0;
  // Per area, committed SG capacity never falls below this share of the
  // installed SG capacity.
  double min_online_fraction = 0.0;
  // Automatic commitment covers net demand times (1 + reserve_margin).
  double reserve_margin = 0.1;
  // Scale SG inertia and governor gains of an area by its committed share.
  bool scale_dynamics_with_commitment = true;

  std::size_t num_periods() const { return periods.size(); }
  std::size_t areas() const { return model.areas(); }
  void validate() const;
};

// Fills every empty commitment vector: per-area online floors first (cheapest
// units of each area), then system merit order until net demand times
// (1 + reserve_margin) is covered. Explicit vectors are kept.
DispatchScenario resolve_commitment(const DispatchScenario& scn);

// Committed share of installed SG capacity per area in period t (1 for areas
// without synchronous units).
std::vector<double> committed_share(const DispatchScenario& scn, std::size_t t);

// Dynamics of period t under its commitment.
SystemModel period_model(const DispatchScenario& scn, std::size_t t);

struct StabilityConstraintSet {
  // Segment tables per period, one per critical (eigenvalue, area) pair of
  // that period's model. A period with no tables gets no stability rows and
  // its droop gains stay at zero.
  std::vector<std::vector<SegmentTable>> tables;
  std::vector<double> robust_gains;  // per area, K^L substituted in the rows
  double big_m = 0.0;                // 0 sizes it per table automatically
  double strict_margin = 1e-6;
  // Extra clearance demanded of the predicted real parts.
  double stability_margin = 0.0;

  static StabilityConstraintSet none(std::size_t periods, std::size_t areas);
  bool empty() const;
};

struct DispatchOptions {
  bool allow_shedding = true;
  milp::SolverOptions solver;
};

// Variable map of a built instance. npos marks variables that do not exist.
struct CredLayout {
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  struct SegmentBinaries {
    std::size_t period = 0;
    std::size_t table = 0;
    std::vector<std::size_t> z;  // per kept segment
  };
  std::vector<std::size_t> periods;  // scenario period of each block
  std::vector<std::vector<std::size_t>> sg;        // [block][generator]
  std::vector<std::vector<std::size_t>> wind;      // [block][area]
  std::vector<std::vector<std::size_t>> droop;     // [block][area]
  std::vector<std::vector<std::size_t>> shed;      // [block][area]
  std::vector<std::vector<std::size_t>> charge;    // [block][storage]
  std::vector<std::vector<std::size_t>> discharge; // [block][storage]
  std::vector<std::vector<std::size_t>> soc;       // [block][storage], MWh
  std::vector<SegmentBinaries> segments;
};

struct CredMilp {
  milp::MixedIntegerProgram mip;
  CredLayout layout;
};

// Assembles the dispatch MIP over `periods` (all periods when empty). Storage
// couples periods, so a scenario with storage must be built over all of them.
CredMilp build_cred_milp(const DispatchScenario& scn, const StabilityConstraintSet& stab,
                         const DispatchOptions& opts, std::vector<std::size_t> periods = {});

struct AreaDispatch {
  double sg_power = 0.0;      // MW
  double wind_power = 0.0;    // MW, also the IBR reference P^{C*}
  double wind_reserve = 0.0;  // MW held back for droop, K^C omega_max base
  double droop_gain = 0.0;    // p.u.
  double shed = 0.0;          // MW
  double charge = 0.0;
  double discharge = 0.0;
};

struct SegmentChoice {
  std::size_t period = 0;
  std::size_t eigen_index = 0;
  AreaIndex area = 0;
  std::size_t segment = 0;
};

struct StabilityCertificate {
  std::size_t period = 0;
  bool stable = false;
  double max_real = 0.0;
  std::size_t worst_index = 0;
  Complex worst_eigenvalue;
  // Largest piecewise-predicted real part over the period's stability rows,
  // and its distance to the exact value of the same eigenvalue. NaN when the
  // period carries no rows.
  double predicted_max_real = std::numeric_limits<double>::quiet_NaN();
  double prediction_error = std::numeric_limits<double>::quiet_NaN();
};

struct PeriodDispatch {
  std::vector<AreaDispatch> areas;
  std::vector<double> generator_power;
  std::vector<double> soc;  // fraction, end of period
  double cost = 0.0;
};

struct DispatchSolution {
  std::vector<PeriodDispatch> periods;
  std::vector<SegmentChoice> segments;
  std::vector<StabilityCertificate> certificates;
  double total_cost = 0.0;
  std::size_t node_count = 0;
  bool shedding_allowed = false;

  double total_shed() const;
  // Per-period droop schedule in p.u., P^{C*} taken from the wind dispatch.
  DroopSchedule droop(const DispatchScenario& scn, std::size_t t) const;
};

// Builds and solves, one MIP per period unless storage couples them. Throws
// InfeasibleError when some block has no feasible point and IterationLimit
// surfaces as NumericalError.
DispatchSolution solve_dispatch(const DispatchScenario& scn, const StabilityConstraintSet& stab,
                                const DispatchOptions& opts = {});

struct PrecheckResult {
  bool stable = true;
  std::vector<StabilityVerdict> periods;
};

// Exact eigen-check of every period with the given droop (one schedule per
// period, or none for zero droop) under the robust gains.
PrecheckResult stability_precheck(const DispatchScenario& scn,
                                  const std::vector<DroopSchedule>& droop,
                                  const std::vector<double>& gains);

// Rebuilds every period with the solved droop and the robust gains, fills
// sol.certificates, and throws ValidationError naming the first unstable
// period and eigenvalue.
void validate_solution(const DispatchScenario& scn, DispatchSolution& sol,
                       const std::vector<double>& gains,
                       const StabilityConstraintSet* stab = nullptr);

// cred_cost - baseline_cost, with round-off below zero clamped. A genuinely
// negative increment throws NumericalError.
double cost_increment(double baseline_cost, double cred_cost);

struct TableBuildOptions {
  double eps_lim = kDefaultEpsLim;
  double step_divisions = kDefaultStepDivisions;
  double screening_margin = 0.5;
  LinearizationOptions linearization;
};

// Segment tables for every period whose exact spectrum is unstable at zero
// droop under `gains`. Sweeps run over [0, range_end_n]; identical period
// models share their tables.
StabilityConstraintSet build_stability_constraints(const DispatchScenario& scn,
                                                   const std::vector<double>& gains,
                                                   const std::vector<AreaIndex>& attack_areas,
                                                   const std::vector<double>& range_end,
                                                   const TableBuildOptions& opts);

}  // namespace cred
