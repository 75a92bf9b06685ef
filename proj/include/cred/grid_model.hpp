#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace cred {

using AreaIndex = std::size_t;

// Aggregated per-area physical parameters of a multi-area grid.
//
// All power-like quantities (inertia, damping, gains, susceptances, loads,
// capacities) are per-unit on `base_power` MW. Frequency is in whatever unit
// the inertia/damping figures were expressed against; `omega_max` must use the
// same unit. The scenario loader converts from MW at the file boundary.
struct SystemModel {
  std::vector<double> inertia_sg;
  std::vector<double> inertia_ibr;
  std::vector<double> damping;
  std::vector<double> gov_integral;
  std::vector<double> gov_proportional;
  // Symmetric N x N inter-area coupling b_nm >= 0. The diagonal is ignored.
  Eigen::MatrixXd susceptance;
  std::vector<double> secure_load;
  std::vector<double> vulnerable_load;
  std::vector<double> ibr_max_power;
  double omega_max = 0.0;
  double base_power = 1.0;  // MW per p.u.

  std::size_t areas() const { return inertia_sg.size(); }
  double total_inertia(AreaIndex n) const { return inertia_sg[n] + inertia_ibr[n]; }

  // Throws ConfigError describing the first violated invariant.
  void validate() const;

  // B_nn = sum_m b_nm, B_nm = -b_nm.
  Eigen::MatrixXd laplacian() const;

  // A model with every per-area vector sized for `n` areas and zero-filled.
  static SystemModel zeros(std::size_t n);
};

struct AttackProfile {
  std::vector<double> dyn_gain;          // K^L_nn
  std::vector<double> static_component;  // epsilon^L_n
  std::vector<AreaIndex> attack_areas;

  static AttackProfile none(std::size_t n);
  // Dynamic attack with the given per-area gains; areas with a positive gain
  // form the attack set.
  static AttackProfile from_gains(const std::vector<double>& gains);
  void validate(std::size_t n) const;
};

struct DroopSchedule {
  std::vector<double> droop_gain;  // K^C_nn
  std::vector<double> power_ref;   // P^{C*}_n

  static DroopSchedule none(std::size_t n);
  void validate(const SystemModel& model) const;
};

// Closed-loop dynamics (-A) xdot = B x + f with x = [delta; omega].
struct StateSpace {
  Eigen::MatrixXd descriptor_a;  // -A = diag(I, -M)
  Eigen::MatrixXd feedback_b;    // [[0, I], [K^I + B, K^P + D - K^L + K^C]]
  Eigen::MatrixXd state_matrix;  // S = (-A)^{-1} B
  Eigen::VectorXd forcing;       // [0; P^LS + eps^L - P^{C*}], in descriptor form
  std::size_t areas = 0;

  std::size_t dimension() const { return 2 * areas; }
  // Forcing mapped through (-A)^{-1}, so that xdot = S x + forcing_rate().
  Eigen::VectorXd forcing_rate() const;
};

StateSpace build_state_space(const SystemModel& model, const AttackProfile& attack,
                             const DroopSchedule& droop);

// Net destabilising gain K^{L-C} in a single area, every other area at zero.
// Positive values are realised as an attack gain, negative ones as droop.
StateSpace build_state_space_at(const SystemModel& model, AreaIndex area, double k_lc);

// Per-area verdict of K^L_nn * omega_max <= (P^LV_n - eps^L_n) / 2.
std::vector<bool> check_attack_budget(const SystemModel& model, const AttackProfile& attack);

// Per-area verdict of the two droop headroom rows:
//   P^{C*} + K^C omega_max <= P^{C,max}  and  P^{C*} - K^C omega_max >= 0.
std::vector<bool> check_droop_capacity(const SystemModel& model, const DroopSchedule& droop);

}  // namespace cred
