#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace cred::milp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation { kLessEqual, kEqual, kGreaterEqual };

struct LinearTerm {
  std::size_t var;
  double coef;
};

struct LinearConstraint {
  std::vector<LinearTerm> terms;
  Relation relation = Relation::kLessEqual;
  double rhs = 0.0;
  std::string name;
};

// minimize objective . x  subject to constraints and lower <= x <= upper.
struct LinearProgram {
  std::vector<double> objective;
  std::vector<LinearConstraint> constraints;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::string> names;

  std::size_t num_variables() const { return objective.size(); }
  std::size_t add_variable(double lo, double hi, double cost, std::string name = {});
  void add_constraint(std::vector<LinearTerm> terms, Relation rel, double rhs,
                      std::string name = {});
  // Throws ContractError on inconsistent sizes, NaN or inverted bounds.
  void validate() const;
  double evaluate_objective(const std::vector<double>& x) const;
  // Largest absolute violation over rows and bounds.
  double max_violation(const std::vector<double>& x) const;
};

struct MixedIntegerProgram {
  LinearProgram base;
  std::vector<std::size_t> binary_vars;

  void validate() const;
};

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

const char* to_string(SolveStatus s);

struct SolveResult {
  SolveStatus status = SolveStatus::kInfeasible;
  std::vector<double> values;
  double objective_value = 0.0;
  std::size_t node_count = 0;
  std::size_t iterations = 0;

  bool optimal() const { return status == SolveStatus::kOptimal; }
};

struct SolverOptions {
  double feasibility_tol = 1e-7;
  double integrality_tol = 1e-6;
  double absolute_gap = 1e-6;
  std::size_t max_iterations = 0;  // 0 picks a size-based cap
  std::size_t max_nodes = 200000;
};

// Two-phase dense tableau simplex. Dantzig pricing, switching to Bland's rule
// after a run of degenerate pivots.
SolveResult solve_lp(const LinearProgram& lp, const SolverOptions& opts = {});

// Best-bound branch and bound over the binary variables, branching on the
// most fractional one. Sequential and deterministic.
SolveResult solve_milp(const MixedIntegerProgram& mip, const SolverOptions& opts = {});

// Lets an external solver stand in for the built-in one.
class MilpSolver {
 public:
  virtual ~MilpSolver() = default;
  virtual SolveResult solve(const MixedIntegerProgram& mip) const = 0;
};

class BranchAndBoundSolver final : public MilpSolver {
 public:
  explicit BranchAndBoundSolver(SolverOptions opts = {}) : opts_(opts) {}
  SolveResult solve(const MixedIntegerProgram& mip) const override { return solve_milp(mip, opts_); }

 private:
  SolverOptions opts_;
};

// Plain-text dump (objective, rows, bounds, binaries) in an LP-file-like
// layout for cross-checking against external solvers.
void write_lp_text(std::ostream& os, const MixedIntegerProgram& mip);

}  // namespace cred::milp
