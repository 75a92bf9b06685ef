#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "cred/dispatch.hpp"
#include "cred/milp.hpp"
#include "cred/scenario_io.hpp"

namespace fixture {

inline std::string data_path(const std::string& file) { return std::string(CRED_DATA_DIR) + "/" + file; }

// One area with M = 1, K^I = 5, K^P + D = 2, budget 3 (P^LV = 0.6, omega_max
// = 0.1), 2 MW of wind and a single 10 $/MWh unit covering 4 MW of demand.
inline cred::DispatchScenario toy() {
  cred::DispatchScenario s;
  s.model = cred::SystemModel::zeros(1);
  s.model.inertia_sg = {1.0};
  s.model.gov_integral = {5.0};
  s.model.gov_proportional = {1.5};
  s.model.damping = {0.5};
  s.model.secure_load = {3.4};
  s.model.vulnerable_load = {0.6};
  s.model.ibr_max_power = {2.0};
  s.model.omega_max = 0.1;
  s.model.base_power = 1.0;
  s.periods = {cred::Period{{4.0}, {2.0}}};
  s.generators = {cred::Generator{"G1", 0, 10.0, 0.0, 10.0, {}}};
  s.reserve_margin = 0.0;
  return s;
}

struct Enumeration {
  bool feasible = false;
  double objective = INFINITY;
  std::size_t lp_solves = 0;
};

// Fixes every binary pattern in turn and keeps the best LP.
inline Enumeration enumerate_binaries(const cred::milp::MixedIntegerProgram& mip) {
  Enumeration out;
  const std::size_t nb = mip.binary_vars.size();
  cred::milp::LinearProgram lp = mip.base;
  for (std::size_t mask = 0; mask < (std::size_t{1} << nb); ++mask) {
    for (std::size_t k = 0; k < nb; ++k) {
      const double v = static_cast<double>((mask >> k) & 1u);
      lp.lower[mip.binary_vars[k]] = v;
      lp.upper[mip.binary_vars[k]] = v;
    }
    const auto r = cred::milp::solve_lp(lp);
    ++out.lp_solves;
    if (r.optimal() && r.objective_value < out.objective) {
      out.feasible = true;
      out.objective = r.objective_value;
    }
  }
  return out;
}

}  // namespace fixture
