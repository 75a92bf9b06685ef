#include "cred/milp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <queue>
#include <sstream>
#include <utility>

#include "cred/error.hpp"

namespace cred::milp {

std::size_t LinearProgram::add_variable(double lo, double hi, double cost, std::string name) {
  objective.push_back(cost);
  lower.push_back(lo);
  upper.push_back(hi);
  if (name.empty()) name = "x" + std::to_string(objective.size() - 1);
  names.push_back(std::move(name));
  return objective.size() - 1;
}

void LinearProgram::add_constraint(std::vector<LinearTerm> terms, Relation rel, double rhs,
                                   std::string name) {
  if (name.empty()) name = "r" + std::to_string(constraints.size());
  constraints.push_back({std::move(terms), rel, rhs, std::move(name)});
}

void LinearProgram::validate() const {
  const std::size_t n = num_variables();
  if (lower.size() != n || upper.size() != n) throw ContractError("LP bound vectors have wrong size");
  if (!names.empty() && names.size() != n) throw ContractError("LP name vector has wrong size");
  for (std::size_t j = 0; j < n; ++j) {
    if (std::isnan(objective[j]) || std::isinf(objective[j])) throw ContractError("LP objective has a non-finite coefficient");
    if (std::isnan(lower[j]) || std::isnan(upper[j])) throw ContractError("LP bound is NaN");
    if (lower[j] == kInf || upper[j] == -kInf) throw ContractError("LP bound is infinite on the wrong side");
    if (lower[j] > upper[j]) throw ContractError("LP variable " + std::to_string(j) + " has lower > upper");
  }
  for (const auto& row : constraints) {
    if (!std::isfinite(row.rhs)) throw ContractError("LP row '" + row.name + "' has a non-finite rhs");
    for (const auto& t : row.terms) {
      if (t.var >= n) throw ContractError("LP row '" + row.name + "' references an unknown variable");
      if (!std::isfinite(t.coef)) throw ContractError("LP row '" + row.name + "' has a non-finite coefficient");
    }
  }
}

double LinearProgram::evaluate_objective(const std::vector<double>& x) const {
  double v = 0.0;
  for (std::size_t j = 0; j < objective.size(); ++j) v += objective[j] * x[j];
  return v;
}

double LinearProgram::max_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (std::size_t j = 0; j < num_variables(); ++j) {
    worst = std::max({worst, lower[j] - x[j], x[j] - upper[j]});
  }
  for (const auto& row : constraints) {
    double lhs = 0.0;
    for (const auto& t : row.terms) lhs += t.coef * x[t.var];
    switch (row.relation) {
      case Relation::kLessEqual: worst = std::max(worst, lhs - row.rhs); break;
      case Relation::kGreaterEqual: worst = std::max(worst, row.rhs - lhs); break;
      case Relation::kEqual: worst = std::max(worst, std::abs(lhs - row.rhs)); break;
    }
  }
  return worst;
}

void MixedIntegerProgram::validate() const {
  base.validate();
  for (std::size_t v : binary_vars) {
    if (v >= base.num_variables()) throw ContractError("binary index out of range");
    if (base.lower[v] < 0.0 || base.upper[v] > 1.0) throw ContractError("binary variable bounds exceed [0, 1]");
  }
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kIterationLimit: return "iteration_limit";
  }
  return "unknown";
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr std::size_t kDegenerateRunBeforeBland = 50;

// One standard-form column stands for sign * (x_var - offset_var).
struct ColumnOrigin {
  std::size_t var;
  double sign;
};

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : rows_(rows), width_(cols + 1), data_(rows * width_, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data_[r * width_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * width_ + c]; }
  double& rhs(std::size_t r) { return data_[r * width_ + width_ - 1]; }
  double rhs(std::size_t r) const { return data_[r * width_ + width_ - 1]; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return width_ - 1; }
  double* row(std::size_t r) { return &data_[r * width_]; }

 private:
  std::size_t rows_;
  std::size_t width_;
  std::vector<double> data_;
};

class SimplexSolver {
 public:
  SimplexSolver(const LinearProgram& lp, const SolverOptions& opts) : lp_(lp), opts_(opts) {}

  SolveResult run() {
    SolveResult result;
    build();
    iteration_cap_ = opts_.max_iterations > 0 ? opts_.max_iterations
                                              : 5000 + 20 * (tab_.rows() + tab_.cols());

    // Phase 1: minimise the sum of artificials.
    std::vector<double> phase1(tab_.cols(), 0.0);
    for (std::size_t c = first_artificial_; c < tab_.cols(); ++c) phase1[c] = 1.0;
    load_objective(phase1);
    std::vector<bool> allowed(tab_.cols(), true);
    SolveStatus st = iterate(allowed);
    result.iterations = iterations_;
    if (st == SolveStatus::kIterationLimit) {
      result.status = st;
      return result;
    }
    double bmax = 1.0;
    for (std::size_t r = 0; r < tab_.rows(); ++r) bmax = std::max(bmax, std::abs(b_original_[r]));
    if (-objective_.back() > 1e-9 * bmax) {
      result.status = SolveStatus::kInfeasible;
      return result;
    }
    drive_out_artificials();

    // Phase 2 on the original costs; artificials may never re-enter.
    for (std::size_t c = first_artificial_; c < tab_.cols(); ++c) allowed[c] = false;
    std::vector<double> phase2(tab_.cols(), 0.0);
    for (std::size_t c = 0; c < structural_; ++c) phase2[c] = cost_[c];
    load_objective(phase2);
    st = iterate(allowed);
    result.iterations = iterations_;
    if (st != SolveStatus::kOptimal) {
      result.status = st;
      return result;
    }

    std::vector<double> colval(tab_.cols(), 0.0);
    for (std::size_t r = 0; r < tab_.rows(); ++r) colval[basis_[r]] = tab_.rhs(r);
    result.values = offset_;
    for (std::size_t c = 0; c < structural_; ++c) {
      result.values[origin_[c].var] += origin_[c].sign * colval[c];
    }
    for (std::size_t j = 0; j < result.values.size(); ++j) {
      // Snap onto bounds the tableau reached up to round-off.
      if (std::isfinite(lp_.lower[j]) && std::abs(result.values[j] - lp_.lower[j]) < 1e-11) result.values[j] = lp_.lower[j];
      if (std::isfinite(lp_.upper[j]) && std::abs(result.values[j] - lp_.upper[j]) < 1e-11) result.values[j] = lp_.upper[j];
    }
    result.objective_value = lp_.evaluate_objective(result.values);
    result.status = SolveStatus::kOptimal;
    return result;
  }

 private:
  void build() {
    const std::size_t nvar = lp_.num_variables();
    offset_.assign(nvar, 0.0);
    std::vector<std::vector<std::size_t>> var_cols(nvar);
    struct UpperRow {
      std::size_t col;
      double bound;
    };
    std::vector<UpperRow> upper_rows;

    for (std::size_t j = 0; j < nvar; ++j) {
      const double lo = lp_.lower[j];
      const double hi = lp_.upper[j];
      if (std::isfinite(lo) && std::isfinite(hi) && lo == hi) {
        offset_[j] = lo;
      } else if (std::isfinite(lo)) {
        offset_[j] = lo;
        var_cols[j].push_back(origin_.size());
        if (std::isfinite(hi)) upper_rows.push_back({origin_.size(), hi - lo});
        origin_.push_back({j, 1.0});
      } else if (std::isfinite(hi)) {
        offset_[j] = hi;
        var_cols[j].push_back(origin_.size());
        origin_.push_back({j, -1.0});
      } else {
        var_cols[j].push_back(origin_.size());
        origin_.push_back({j, 1.0});
        var_cols[j].push_back(origin_.size());
        origin_.push_back({j, -1.0});
      }
    }
    structural_ = origin_.size();
    cost_.assign(structural_, 0.0);
    for (std::size_t c = 0; c < structural_; ++c) cost_[c] = lp_.objective[origin_[c].var] * origin_[c].sign;

    // Dense rows over structural columns.
    struct Row {
      std::vector<double> coef;
      Relation rel;
      double rhs;
    };
    std::vector<Row> rows;
    rows.reserve(lp_.constraints.size() + upper_rows.size());
    for (const auto& con : lp_.constraints) {
      Row row{std::vector<double>(structural_, 0.0), con.relation, con.rhs};
      for (const auto& t : con.terms) {
        row.rhs -= t.coef * offset_[t.var];
        for (std::size_t c : var_cols[t.var]) row.coef[c] += t.coef * origin_[c].sign;
      }
      rows.push_back(std::move(row));
    }
    for (const auto& ur : upper_rows) {
      Row row{std::vector<double>(structural_, 0.0), Relation::kLessEqual, ur.bound};
      row.coef[ur.col] = 1.0;
      rows.push_back(std::move(row));
    }

    const std::size_t m = rows.size();
    std::size_t slacks = 0;
    for (const auto& r : rows) slacks += (r.rel != Relation::kEqual) ? 1 : 0;

    // Rows whose slack ends up with +1 after sign normalisation start with the
    // slack basic; every other row gets an artificial.
    std::vector<double> slack_sign(m, 0.0);
    std::vector<double> row_sign(m, 1.0);
    std::size_t artificials = 0;
    for (std::size_t r = 0; r < m; ++r) {
      if (rows[r].rel == Relation::kLessEqual) slack_sign[r] = 1.0;
      if (rows[r].rel == Relation::kGreaterEqual) slack_sign[r] = -1.0;
      if (rows[r].rhs < 0.0) row_sign[r] = -1.0;
      if (!(slack_sign[r] * row_sign[r] > 0.0)) ++artificials;
    }

    first_artificial_ = structural_ + slacks;
    tab_ = Tableau(m, first_artificial_ + artificials);
    basis_.assign(m, 0);
    b_original_.assign(m, 0.0);
    std::size_t next_slack = structural_;
    std::size_t next_art = first_artificial_;
    for (std::size_t r = 0; r < m; ++r) {
      double* t = tab_.row(r);
      for (std::size_t c = 0; c < structural_; ++c) t[c] = row_sign[r] * rows[r].coef[c];
      tab_.rhs(r) = row_sign[r] * rows[r].rhs;
      b_original_[r] = tab_.rhs(r);
      if (slack_sign[r] != 0.0) {
        t[next_slack] = row_sign[r] * slack_sign[r];
        if (t[next_slack] > 0.0) basis_[r] = next_slack;
        ++next_slack;
      }
      if (!(slack_sign[r] * row_sign[r] > 0.0)) {
        t[next_art] = 1.0;
        basis_[r] = next_art;
        ++next_art;
      }
    }
  }

  void load_objective(const std::vector<double>& cost) {
    objective_.assign(tab_.cols() + 1, 0.0);
    for (std::size_t c = 0; c < tab_.cols(); ++c) objective_[c] = cost[c];
    for (std::size_t r = 0; r < tab_.rows(); ++r) {
      const double cb = cost[basis_[r]];
      if (cb == 0.0) continue;
      const double* t = tab_.row(r);
      for (std::size_t c = 0; c <= tab_.cols(); ++c) objective_[c] -= cb * t[c];
    }
  }

  void pivot(std::size_t r, std::size_t e) {
    double* pr = tab_.row(r);
    const double inv = 1.0 / pr[e];
    const std::size_t w = tab_.cols() + 1;
    for (std::size_t c = 0; c < w; ++c) pr[c] *= inv;
    pr[e] = 1.0;
    for (std::size_t i = 0; i < tab_.rows(); ++i) {
      if (i == r) continue;
      double* pi = tab_.row(i);
      const double f = pi[e];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < w; ++c) pi[c] -= f * pr[c];
      pi[e] = 0.0;
    }
    const double f = objective_[e];
    if (f != 0.0) {
      for (std::size_t c = 0; c < w; ++c) objective_[c] -= f * pr[c];
      objective_[e] = 0.0;
    }
    basis_[r] = e;
  }

  SolveStatus iterate(const std::vector<bool>& allowed) {
    std::size_t degenerate_run = 0;
    for (;;) {
      if (iterations_ >= iteration_cap_) return SolveStatus::kIterationLimit;
      const bool bland = degenerate_run >= kDegenerateRunBeforeBland;
      std::size_t enter = tab_.cols();
      double best = -kCostTol;
      for (std::size_t c = 0; c < tab_.cols(); ++c) {
        if (!allowed[c]) continue;
        if (objective_[c] < best) {
          enter = c;
          if (bland) break;
          best = objective_[c];
        }
      }
      if (enter == tab_.cols()) return SolveStatus::kOptimal;

      std::size_t leave = tab_.rows();
      double best_ratio = kInf;
      for (std::size_t r = 0; r < tab_.rows(); ++r) {
        const double a = tab_.at(r, enter);
        if (a <= kPivotTol) continue;
        const double ratio = std::max(0.0, tab_.rhs(r)) / a;
        if (leave == tab_.rows()) {
          best_ratio = ratio;
          leave = r;
          continue;
        }
        const double tie = 1e-12 * std::max(1.0, std::abs(best_ratio));
        if (ratio < best_ratio - tie ||
            (std::abs(ratio - best_ratio) <= tie && basis_[r] < basis_[leave])) {
          best_ratio = ratio;
          leave = r;
        }
      }
      if (leave == tab_.rows()) return SolveStatus::kUnbounded;
      degenerate_run = best_ratio <= 1e-12 ? degenerate_run + 1 : 0;
      pivot(leave, enter);
      ++iterations_;
    }
  }

  void drive_out_artificials() {
    for (std::size_t r = 0; r < tab_.rows(); ++r) {
      if (basis_[r] < first_artificial_) continue;
      std::size_t best = tab_.cols();
      double best_abs = 1e-7;
      for (std::size_t c = 0; c < first_artificial_; ++c) {
        const double a = std::abs(tab_.at(r, c));
        if (a > best_abs) {
          best_abs = a;
          best = c;
        }
      }
      // A row with nothing left outside the artificials is redundant; its
      // artificial stays basic at zero and is never touched again.
      if (best != tab_.cols()) pivot(r, best);
    }
  }

  const LinearProgram& lp_;
  const SolverOptions& opts_;
  std::vector<ColumnOrigin> origin_;
  std::vector<double> offset_;
  std::vector<double> cost_;
  std::size_t structural_ = 0;
  std::size_t first_artificial_ = 0;
  Tableau tab_{0, 0};
  std::vector<std::size_t> basis_;
  std::vector<double> b_original_;
  std::vector<double> objective_;
  std::size_t iterations_ = 0;
  std::size_t iteration_cap_ = 0;
};

struct Node {
  double bound;
  std::uint64_t id;
  std::vector<std::pair<std::size_t, double>> fixings;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

}  // namespace

SolveResult solve_lp(const LinearProgram& lp, const SolverOptions& opts) {
  lp.validate();
  SimplexSolver solver(lp, opts);
  return solver.run();
}

SolveResult solve_milp(const MixedIntegerProgram& mip, const SolverOptions& opts) {
  mip.validate();
  SolveResult best;
  best.status = SolveStatus::kInfeasible;
  double incumbent = kInf;

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  std::uint64_t next_id = 0;
  open.push({-kInf, next_id++, {}});
  std::size_t nodes = 0;
  std::size_t iterations = 0;
  bool hit_limit = false;

  LinearProgram relax = mip.base;
  while (!open.empty()) {
    Node node = open.top();
    open.pop();
    if (node.bound >= incumbent - opts.absolute_gap) continue;
    if (nodes >= opts.max_nodes) {
      hit_limit = true;
      break;
    }
    ++nodes;

    relax.lower = mip.base.lower;
    relax.upper = mip.base.upper;
    for (const auto& [var, value] : node.fixings) relax.lower[var] = relax.upper[var] = value;
    SolveResult lp = solve_lp(relax, opts);
    iterations += lp.iterations;

    if (lp.status == SolveStatus::kUnbounded) {
      if (nodes == 1) {
        best.status = SolveStatus::kUnbounded;
        best.node_count = nodes;
        best.iterations = iterations;
        return best;
      }
      continue;
    }
    if (lp.status == SolveStatus::kIterationLimit) {
      hit_limit = true;
      continue;
    }
    if (lp.status != SolveStatus::kOptimal) continue;
    if (lp.objective_value >= incumbent - opts.absolute_gap) continue;

    std::size_t branch_var = mip.base.num_variables();
    double most_fractional = opts.integrality_tol;
    for (std::size_t v : mip.binary_vars) {
      const double frac = std::min(lp.values[v], 1.0 - lp.values[v]);
      if (frac > most_fractional) {
        most_fractional = frac;
        branch_var = v;
      }
    }

    if (branch_var == mip.base.num_variables()) {
      for (std::size_t v : mip.binary_vars) lp.values[v] = std::round(lp.values[v]);
      incumbent = lp.objective_value;
      best.values = std::move(lp.values);
      best.objective_value = mip.base.evaluate_objective(best.values);
      best.status = SolveStatus::kOptimal;
      continue;
    }

    for (double value : {0.0, 1.0}) {
      Node child{lp.objective_value, next_id++, node.fixings};
      child.fixings.emplace_back(branch_var, value);
      open.push(std::move(child));
    }
  }

  if (hit_limit) best.status = SolveStatus::kIterationLimit;
  best.node_count = nodes;
  best.iterations = iterations;
  return best;
}

namespace {

std::string format_number(double v) {
  if (v == kInf) return "+inf";
  if (v == -kInf) return "-inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string var_name(const LinearProgram& lp, std::size_t j) {
  return j < lp.names.size() ? lp.names[j] : "x" + std::to_string(j);
}

}  // namespace

void write_lp_text(std::ostream& os, const MixedIntegerProgram& mip) {
  const LinearProgram& lp = mip.base;
  os << "minimize\n  obj:";
  for (std::size_t j = 0; j < lp.num_variables(); ++j) {
    if (lp.objective[j] != 0.0) os << ' ' << format_number(lp.objective[j]) << ' ' << var_name(lp, j);
  }
  os << "\nsubject to\n";
  for (const auto& row : lp.constraints) {
    os << "  " << row.name << ':';
    for (const auto& t : row.terms) os << ' ' << format_number(t.coef) << ' ' << var_name(lp, t.var);
    switch (row.relation) {
      case Relation::kLessEqual: os << " <= "; break;
      case Relation::kGreaterEqual: os << " >= "; break;
      case Relation::kEqual: os << " = "; break;
    }
    os << format_number(row.rhs) << '\n';
  }
  os << "bounds\n";
  for (std::size_t j = 0; j < lp.num_variables(); ++j) {
    os << "  " << format_number(lp.lower[j]) << " <= " << var_name(lp, j)
       << " <= " << format_number(lp.upper[j]) << '\n';
  }
  os << "binaries\n";
  for (std::size_t v : mip.binary_vars) os << "  " << var_name(lp, v) << '\n';
  os << "end\n";
}

}  // namespace cred::milp
