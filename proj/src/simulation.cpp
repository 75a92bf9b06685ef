#include "cred/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cred/error.hpp"
#include "cred/stability.hpp"

namespace cred {
namespace {

// Steady state of S x + r = 0; least squares when S is singular (zero
// integral gain leaves the angle reference free).
Eigen::VectorXd equilibrium(const Eigen::MatrixXd& s, const Eigen::VectorXd& rate) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(s);
  if (lu.isInvertible()) return lu.solve(-rate);
  return s.completeOrthogonalDecomposition().solve(-rate);
}

}  // namespace

std::string StepDisturbance::describe() const {
  std::ostringstream os;
  os << "load step at t=" << t_step << " s, delta_p=[";
  for (std::size_t i = 0; i < delta_p.size(); ++i) os << (i ? ", " : "") << delta_p[i];
  os << "] p.u.";
  return os.str();
}

double max_stable_step(const StateSpace& ss) {
  double rho = 0.0;
  for (const Complex& l : eigen_decompose(ss).eigenvalues) rho = std::max(rho, std::abs(l));
  return rho > 0.0 ? 1.0 / (10.0 * rho) : std::numeric_limits<double>::infinity();
}

Trajectory simulate(const StateSpace& ss, const StepDisturbance& step, double t_end, double dt) {
  const std::size_t n = ss.areas;
  if (step.delta_p.size() != n) throw ContractError("disturbance needs one entry per area");
  if (!(dt > 0.0)) throw ContractError("dt must be positive");
  if (!(t_end > step.t_step) || step.t_step < 0.0) throw ContractError("need 0 <= t_step < t_end");
  const double dt_max = max_stable_step(ss);
  if (dt > dt_max * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "dt = " << dt << " exceeds the resolution guard 1/(10 max|lambda|) = " << dt_max;
    throw ContractError(os.str());
  }

  const Eigen::MatrixXd& s = ss.state_matrix;
  const Eigen::VectorXd r0 = ss.forcing_rate();
  StateSpace stepped = ss;
  for (std::size_t a = 0; a < n; ++a) stepped.forcing(static_cast<Eigen::Index>(n + a)) += step.delta_p[a];
  const Eigen::VectorXd r1 = stepped.forcing_rate();

  Trajectory traj;
  traj.areas = n;
  traj.dt = dt;
  traj.t_step = step.t_step;
  traj.disturbance = step.describe();
  traj.equilibrium_pre = equilibrium(s, r0);
  traj.equilibrium_post = equilibrium(s, r1);

  const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  Eigen::VectorXd x = traj.equilibrium_pre;
  traj.times.push_back(0.0);
  traj.states.push_back(x);

  for (std::size_t k = 0; k < steps; ++k) {
    // The forcing is held constant over a step; the jump applies from the
    // first grid point at or after t_step.
    const double t = static_cast<double>(k) * dt;
    const Eigen::VectorXd& r = (t >= step.t_step - 1e-9 * dt) ? r1 : r0;
    const Eigen::VectorXd k1 = s * x + r;
    const Eigen::VectorXd k2 = s * (x + 0.5 * dt * k1) + r;
    const Eigen::VectorXd k3 = s * (x + 0.5 * dt * k2) + r;
    const Eigen::VectorXd k4 = s * (x + dt * k3) + r;
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    traj.times.push_back(static_cast<double>(k + 1) * dt);
    traj.states.push_back(x);
    if (!x.allFinite() || x.norm() > kDivergenceNorm) {
      traj.diverged = true;
      break;
    }
  }
  return traj;
}

const char* to_string(TrajectoryClass c) {
  switch (c) {
    case TrajectoryClass::kDecaying: return "decaying";
    case TrajectoryClass::kGrowing: return "growing";
    case TrajectoryClass::kMarginal: return "marginal";
  }
  return "unknown";
}

Classification classify_trajectory(const Trajectory& traj, double tol) {
  Classification out;
  if (traj.diverged) {
    out.verdict = TrajectoryClass::kGrowing;
    out.rate = std::numeric_limits<double>::infinity();
    return out;
  }
  if (traj.states.size() < 3) throw NumericalError("trajectory too short to classify");
  const std::size_t n = traj.areas;
  auto dev = [&](std::size_t k, AreaIndex a) {
    return std::abs(traj.omega(k, a) - traj.equilibrium_post(static_cast<Eigen::Index>(n + a)));
  };

  double largest = -1.0;
  for (AreaIndex a = 0; a < n; ++a) {
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
      if (traj.times[k] < traj.t_step) continue;
      if (dev(k, a) > largest) {
        largest = dev(k, a);
        out.area = a;
      }
    }
  }
  if (!(largest > 0.0)) throw NumericalError("trajectory never leaves equilibrium; classification is indeterminate");

  const double t_from = traj.t_step + (traj.times.back() - traj.t_step) / 3.0;
  const double floor = 1e-12 * largest;
  std::vector<double> pt;
  std::vector<double> pa;
  for (std::size_t k = 1; k + 1 < traj.states.size(); ++k) {
    if (traj.times[k] < t_from) continue;
    const double v = dev(k, out.area);
    if (v > dev(k - 1, out.area) && v >= dev(k + 1, out.area) && v > floor) {
      pt.push_back(traj.times[k]);
      pa.push_back(std::log(v));
    }
  }
  out.peaks = pt.size();
  if (pt.size() < 3) {
    throw NumericalError("only " + std::to_string(pt.size()) +
                         " oscillation peaks found; classification is indeterminate");
  }
  const auto m = static_cast<double>(pt.size());
  double st = 0.0, sa = 0.0;
  for (std::size_t i = 0; i < pt.size(); ++i) {
    st += pt[i];
    sa += pa[i];
  }
  const double tbar = st / m, abar = sa / m;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < pt.size(); ++i) {
    num += (pt[i] - tbar) * (pa[i] - abar);
    den += (pt[i] - tbar) * (pt[i] - tbar);
  }
  out.rate = den > 0.0 ? num / den : 0.0;
  if (out.rate < -tol) {
    out.verdict = TrajectoryClass::kDecaying;
  } else if (out.rate > tol) {
    out.verdict = TrajectoryClass::kGrowing;
  } else {
    out.verdict = TrajectoryClass::kMarginal;
  }
  return out;
}

}  // namespace cred
