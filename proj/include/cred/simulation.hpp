#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cred/grid_model.hpp"

namespace cred {

// Load step of delta_p (p.u., positive = more load) per area at t_step.
struct StepDisturbance {
  std::vector<double> delta_p;
  double t_step = 1.0;

  std::string describe() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;  // [delta; omega]
  std::size_t areas = 0;
  double dt = 0.0;
  double t_step = 0.0;
  bool diverged = false;
  std::string disturbance;
  Eigen::VectorXd equilibrium_pre;
  Eigen::VectorXd equilibrium_post;

  double omega(std::size_t k, AreaIndex n) const { return states[k](static_cast<Eigen::Index>(areas + n)); }
  double delta(std::size_t k, AreaIndex n) const { return states[k](static_cast<Eigen::Index>(n)); }
};

inline constexpr double kDivergenceNorm = 1e6;

// Classic RK4 on xdot = S x + r(t), where r picks up the load step at t_step.
// Starts at the pre-step equilibrium. Integration stops early once the state
// norm exceeds kDivergenceNorm and the trajectory is flagged diverged.
// Throws ContractError when dt > 1 / (10 max|lambda|) or t_end <= t_step.
Trajectory simulate(const StateSpace& ss, const StepDisturbance& step, double t_end, double dt);

// Largest step accepted by simulate for this system.
double max_stable_step(const StateSpace& ss);

enum class TrajectoryClass { kDecaying, kGrowing, kMarginal };

const char* to_string(TrajectoryClass c);

struct Classification {
  TrajectoryClass verdict = TrajectoryClass::kMarginal;
  double rate = 0.0;  // fitted log-amplitude slope, 1/s
  std::size_t peaks = 0;
  AreaIndex area = 0;
};

inline constexpr double kClassifyTolerance = 0.01;

// Least-squares slope of log peak amplitudes of |omega - omega_post| in the
// area with the largest excursion, over the latter two thirds of the
// post-step window. Diverged trajectories are growing. Fewer than three
// usable peaks throws NumericalError.
Classification classify_trajectory(const Trajectory& traj, double tol = kClassifyTolerance);

}  // namespace cred
