#include "cred/grid_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "cred/error.hpp"

namespace cred {
namespace {

// Slack for inclusive comparisons of quantities that are equal in exact arithmetic.
constexpr double kCompareSlack = 1e-12;

bool leq(double lhs, double rhs) {
  return lhs <= rhs + kCompareSlack * std::max({1.0, std::abs(lhs), std::abs(rhs)});
}

void check_size(const std::vector<double>& v, std::size_t n, const char* name) {
  if (v.size() != n) {
    std::ostringstream os;
    os << "field '" << name << "' has " << v.size() << " entries, expected " << n;
    throw ConfigError(os.str());
  }
}

void check_finite(const std::vector<double>& v, const char* name) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      std::ostringstream os;
      os << "field '" << name << "' entry " << i << " is not finite";
      throw ConfigError(os.str());
    }
  }
}

void check_nonnegative(const std::vector<double>& v, const char* name) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] < 0.0) {
      std::ostringstream os;
      os << "field '" << name << "' entry " << i << " is negative (" << v[i] << ")";
      throw ConfigError(os.str());
    }
  }
}

}  // namespace

void SystemModel::validate() const {
  const std::size_t n = areas();
  if (n == 0) throw ConfigError("system model has no areas");
  check_size(inertia_ibr, n, "inertia_ibr");
  check_size(damping, n, "damping");
  check_size(gov_integral, n, "gov_integral");
  check_size(gov_proportional, n, "gov_proportional");
  check_size(secure_load, n, "secure_load");
  check_size(vulnerable_load, n, "vulnerable_load");
  check_size(ibr_max_power, n, "ibr_max_power");
  for (const auto* v : {&inertia_sg, &inertia_ibr, &damping, &gov_integral, &gov_proportional,
                        &secure_load, &vulnerable_load, &ibr_max_power}) {
    check_finite(*v, "area parameter");
  }
  check_nonnegative(inertia_sg, "inertia_sg");
  check_nonnegative(inertia_ibr, "inertia_ibr");
  check_nonnegative(damping, "damping");
  // Zero integral gain is tolerated (the origin mode is then excluded from
  // stability verdicts); negative gains are not.
  check_nonnegative(gov_integral, "gov_integral");
  check_nonnegative(gov_proportional, "gov_proportional");
  check_nonnegative(secure_load, "secure_load");
  check_nonnegative(vulnerable_load, "vulnerable_load");
  check_nonnegative(ibr_max_power, "ibr_max_power");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(total_inertia(i) > 0.0)) {
      std::ostringstream os;
      os << "area " << i << " has zero total inertia; M must be invertible";
      throw ConfigError(os.str());
    }
  }
  if (susceptance.rows() != static_cast<Eigen::Index>(n) ||
      susceptance.cols() != static_cast<Eigen::Index>(n)) {
    throw ConfigError("coupling matrix must be N x N");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double b = susceptance(i, j);
      if (!std::isfinite(b)) throw ConfigError("coupling matrix has a non-finite entry");
      if (i == j) continue;
      if (b < 0.0) throw ConfigError("coupling matrix has a negative off-diagonal entry");
      if (std::abs(b - susceptance(j, i)) > 1e-12 * std::max(1.0, std::abs(b))) {
        throw ConfigError("coupling matrix is not symmetric");
      }
    }
  }
  if (!(omega_max > 0.0) || !std::isfinite(omega_max)) {
    throw ConfigError("omega_max must be positive");
  }
  if (!(base_power > 0.0) || !std::isfinite(base_power)) {
    throw ConfigError("base_power must be positive");
  }
}

Eigen::MatrixXd SystemModel::laplacian() const {
  const auto n = static_cast<Eigen::Index>(areas());
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      lap(i, j) = -susceptance(i, j);
      lap(i, i) += susceptance(i, j);
    }
  }
  return lap;
}

SystemModel SystemModel::zeros(std::size_t n) {
  SystemModel m;
  m.inertia_sg.assign(n, 0.0);
  m.inertia_ibr.assign(n, 0.0);
  m.damping.assign(n, 0.0);
  m.gov_integral.assign(n, 0.0);
  m.gov_proportional.assign(n, 0.0);
  m.susceptance = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.secure_load.assign(n, 0.0);
  m.vulnerable_load.assign(n, 0.0);
  m.ibr_max_power.assign(n, 0.0);
  return m;
}

AttackProfile AttackProfile::none(std::size_t n) {
  AttackProfile a;
  a.dyn_gain.assign(n, 0.0);
  a.static_component.assign(n, 0.0);
  return a;
}

AttackProfile AttackProfile::from_gains(const std::vector<double>& gains) {
  AttackProfile a = none(gains.size());
  a.dyn_gain = gains;
  for (std::size_t n = 0; n < gains.size(); ++n) {
    if (gains[n] > 0.0) a.attack_areas.push_back(n);
  }
  return a;
}

void AttackProfile::validate(std::size_t n) const {
  check_size(dyn_gain, n, "dyn_gain");
  check_size(static_component, n, "static_component");
  check_finite(dyn_gain, "dyn_gain");
  check_finite(static_component, "static_component");
  check_nonnegative(dyn_gain, "dyn_gain");
  std::vector<bool> attacked(n, false);
  for (AreaIndex a : attack_areas) {
    if (a >= n) throw ConfigError("attack area index out of range");
    attacked[a] = true;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!attacked[i] && (dyn_gain[i] != 0.0 || static_component[i] != 0.0)) {
      std::ostringstream os;
      os << "area " << i << " carries attack parameters but is not in the attack set";
      throw ConfigError(os.str());
    }
  }
}

DroopSchedule DroopSchedule::none(std::size_t n) {
  DroopSchedule d;
  d.droop_gain.assign(n, 0.0);
  d.power_ref.assign(n, 0.0);
  return d;
}

void DroopSchedule::validate(const SystemModel& model) const {
  const std::size_t n = model.areas();
  check_size(droop_gain, n, "droop_gain");
  check_size(power_ref, n, "power_ref");
  check_finite(droop_gain, "droop_gain");
  check_finite(power_ref, "power_ref");
  check_nonnegative(droop_gain, "droop_gain");
  check_nonnegative(power_ref, "power_ref");
  for (std::size_t i = 0; i < n; ++i) {
    if (!leq(power_ref[i], model.ibr_max_power[i])) {
      std::ostringstream os;
      os << "area " << i << " IBR reference exceeds its capacity";
      throw ConfigError(os.str());
    }
  }
}

Eigen::VectorXd StateSpace::forcing_rate() const {
  const auto n = static_cast<Eigen::Index>(areas);
  Eigen::VectorXd rate = forcing;
  // (-A)^{-1} = diag(I, -M^{-1}), and M sits on the diagonal of descriptor_a.
  for (Eigen::Index i = 0; i < n; ++i) rate(n + i) = forcing(n + i) / descriptor_a(n + i, n + i);
  return rate;
}

StateSpace build_state_space(const SystemModel& model, const AttackProfile& attack,
                             const DroopSchedule& droop) {
  model.validate();
  attack.validate(model.areas());
  droop.validate(model);

  const std::size_t areas = model.areas();
  const auto n = static_cast<Eigen::Index>(areas);
  const Eigen::MatrixXd lap = model.laplacian();

  StateSpace ss;
  ss.areas = areas;
  ss.descriptor_a = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  ss.feedback_b = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  ss.forcing = Eigen::VectorXd::Zero(2 * n);
  ss.descriptor_a.topLeftCorner(n, n).setIdentity();
  ss.feedback_b.topRightCorner(n, n).setIdentity();
  ss.feedback_b.bottomLeftCorner(n, n) = lap;

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto a = static_cast<std::size_t>(i);
    ss.descriptor_a(n + i, n + i) = -model.total_inertia(a);
    ss.feedback_b(n + i, i) += model.gov_integral[a];
    // K^L and K^C only ever appear through their difference.
    ss.feedback_b(n + i, n + i) = model.gov_proportional[a] + model.damping[a] +
                                  (droop.droop_gain[a] - attack.dyn_gain[a]);
    ss.forcing(n + i) = model.secure_load[a] + attack.static_component[a] - droop.power_ref[a];
  }

  // S = (-A)^{-1} B with (-A)^{-1} = diag(I, -M^{-1}); assemble directly so
  // that the [0 | I] block is exact.
  ss.state_matrix = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  ss.state_matrix.topRightCorner(n, n).setIdentity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double inv_m = -1.0 / model.total_inertia(static_cast<std::size_t>(i));
    ss.state_matrix.row(n + i) = inv_m * ss.feedback_b.row(n + i);
  }
  return ss;
}

StateSpace build_state_space_at(const SystemModel& model, AreaIndex area, double k_lc) {
  const std::size_t n = model.areas();
  if (area >= n) throw ContractError("area index out of range");
  AttackProfile attack = AttackProfile::none(n);
  DroopSchedule droop = DroopSchedule::none(n);
  if (k_lc >= 0.0) {
    attack.dyn_gain[area] = k_lc;
    if (k_lc > 0.0) attack.attack_areas.push_back(area);
  } else {
    droop.droop_gain[area] = -k_lc;
  }
  return build_state_space(model, attack, droop);
}

std::vector<bool> check_attack_budget(const SystemModel& model, const AttackProfile& attack) {
  const std::size_t n = model.areas();
  std::vector<bool> verdict(n, true);
  for (std::size_t i = 0; i < n; ++i) {
    const double lhs = attack.dyn_gain[i] * model.omega_max;
    const double rhs = (model.vulnerable_load[i] - attack.static_component[i]) / 2.0;
    verdict[i] = leq(lhs, rhs);
  }
  return verdict;
}

std::vector<bool> check_droop_capacity(const SystemModel& model, const DroopSchedule& droop) {
  const std::size_t n = model.areas();
  std::vector<bool> verdict(n, true);
  for (std::size_t i = 0; i < n; ++i) {
    const double swing = droop.droop_gain[i] * model.omega_max;
    verdict[i] = leq(droop.power_ref[i] + swing, model.ibr_max_power[i]) &&
                 leq(0.0, droop.power_ref[i] - swing);
  }
  return verdict;
}

}  // namespace cred
