#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "cred/dispatch.hpp"
#include "cred/dr_uncertainty.hpp"
#include "cred/error.hpp"
#include "cred/scenario_io.hpp"
#include "fixtures.hpp"

using namespace cred;

namespace {

StabilityConstraintSet toy_constraints(const DispatchScenario& scn, double margin) {
  StabilityConstraintSet set = build_stability_constraints(scn, {3.0}, {0}, {3.0}, TableBuildOptions{});
  set.stability_margin = margin;
  return set;
}

// Merit-order oracle for a single uncoupled period without droop.
double merit_order_cost(const DispatchScenario& scn, std::size_t t) {
  const DispatchScenario s = resolve_commitment(scn);
  const Period& p = s.periods[t];
  double residual = std::accumulate(p.demand.begin(), p.demand.end(), 0.0) -
                    std::accumulate(p.wind_available.begin(), p.wind_available.end(), 0.0);
  std::vector<const Generator*> on;
  double cost = 0.0;
  for (const Generator& g : s.generators) {
    if (g.committed[t]) {
      on.push_back(&g);
      residual -= g.p_min;
      cost += g.marginal_cost * g.p_min;
    }
  }
  std::sort(on.begin(), on.end(), [](auto a, auto b) { return a->marginal_cost < b->marginal_cost; });
  for (const Generator* g : on) {
    const double take = std::clamp(residual, 0.0, g->p_max - g->p_min);
    cost += take * g->marginal_cost;
    residual -= take;
  }
  // Wind surplus is curtailed for free; a shortfall is shed.
  if (residual > 0.0) cost += residual * s.shed_cost;
  return cost;
}

}  // namespace

TEST_CASE("toy droop sits just past the stability boundary") {
  const DispatchScenario scn = fixture::toy();
  const StabilityConstraintSet set = toy_constraints(scn, 0.0);
  REQUIRE(set.tables[0].size() == 1);
  CHECK(set.tables[0][0].points.size() == 1);
  DispatchOptions opts;
  opts.allow_shedding = false;
  DispatchSolution sol = solve_dispatch(scn, set, opts);
  const double kc = sol.periods[0].areas[0].droop_gain;
  CHECK(std::abs(kc - (1.0 + 2.0 * set.strict_margin)) < 1e-6);
  // K^C omega_max base of wind is held back and replaced by the 10 $/MWh unit.
  CHECK(sol.total_cost == doctest::Approx(20.0 + 10.0 * 0.1 * kc).epsilon(1e-12));
  CHECK(sol.periods[0].areas[0].wind_reserve == doctest::Approx(0.1 * kc));
  validate_solution(scn, sol, {3.0}, &set);
  REQUIRE(sol.certificates.size() == 1);
  CHECK(sol.certificates[0].stable);
  CHECK(sol.certificates[0].max_real == doctest::Approx(-set.strict_margin).epsilon(1e-6));
  CHECK(sol.certificates[0].prediction_error < 1e-9);
}

TEST_CASE("margin shifts the toy droop by two per unit of clearance") {
  const DispatchScenario scn = fixture::toy();
  for (double margin : {0.0, 0.02, 0.1, 0.3}) {
    const DispatchSolution sol = solve_dispatch(scn, toy_constraints(scn, margin));
    CHECK(sol.periods[0].areas[0].droop_gain ==
          doctest::Approx(1.0 + 2.0 * (1e-6 + margin)).epsilon(1e-9));
  }
}

TEST_CASE("toy without enough wind headroom must shed") {
  DispatchScenario scn = fixture::toy();
  scn.periods[0].wind_available = {0.05};
  const StabilityConstraintSet set = toy_constraints(scn, 0.0);
  DispatchOptions strict;
  strict.allow_shedding = false;
  CHECK_THROWS_AS(solve_dispatch(scn, set, strict), InfeasibleError);
}

TEST_CASE("corrupted droop is rejected by exact validation") {
  const DispatchScenario scn = fixture::toy();
  const StabilityConstraintSet set = toy_constraints(scn, 0.0);
  DispatchSolution sol = solve_dispatch(scn, set);
  DispatchSolution bad = sol;
  bad.periods[0].areas[0].droop_gain = 0.5;
  CHECK_THROWS_AS(validate_solution(scn, bad, {3.0}, &set), ValidationError);
  REQUIRE(bad.certificates.size() == 1);
  CHECK_FALSE(bad.certificates[0].stable);
  CHECK(bad.certificates[0].max_real == doctest::Approx(0.25));
  CHECK_NOTHROW(validate_solution(scn, sol, {3.0}, &set));
}

TEST_CASE("baseline dispatch follows merit order") {
  const ScenarioFile f = load_scenario(fixture::data_path("desk_3area.json"));
  const DispatchScenario& scn = f.dispatch;
  const DispatchSolution sol = solve_dispatch(scn, StabilityConstraintSet::none(scn.num_periods(), scn.areas()));
  for (std::size_t t = 0; t < scn.num_periods(); ++t) {
    CHECK(sol.periods[t].cost == doctest::Approx(merit_order_cost(scn, t)).epsilon(1e-9));
    for (const AreaDispatch& a : sol.periods[t].areas) CHECK(a.droop_gain == 0.0);
  }
  CHECK(sol.total_shed() == 0.0);
}

TEST_CASE("CRED instances match binary enumeration") {
  const ScenarioFile f = load_scenario(fixture::data_path("desk_3area.json"));
  const DispatchScenario scn = resolve_commitment(f.dispatch);
  const std::vector<double> budget = worst_case_gain(scn.model, f.attack.areas);
  std::size_t instances = 0;
  for (double g : {budget[1], 19.68, 15.0}) {
    std::vector<double> gains(3, 0.0);
    gains[1] = g;
    StabilityConstraintSet full = build_stability_constraints(scn, gains, f.attack.areas, budget, TableBuildOptions{});
    full.stability_margin = 0.02;
    for (std::size_t t = 0; t < scn.num_periods(); ++t) {
      for (std::size_t k = 0; k < full.tables[t].size(); ++k) {
        StabilityConstraintSet one = full;
        for (auto& v : one.tables) v.clear();
        one.tables[t] = {full.tables[t][k]};
        const CredMilp inst = build_cred_milp(scn, one, DispatchOptions{}, {t});
        if (inst.mip.binary_vars.size() > 12) continue;
        const auto bb = milp::solve_milp(inst.mip);
        const auto en = fixture::enumerate_binaries(inst.mip);
        ++instances;
        REQUIRE(en.feasible == bb.optimal());
        if (en.feasible) CHECK(std::abs(bb.objective_value - en.objective) < 1e-6);
      }
    }
  }
  CHECK(instances >= 3);
}

TEST_CASE("droop stays within wind headroom") {
  const ScenarioFile f = load_scenario(fixture::data_path("desk_3area.json"));
  const DispatchScenario scn = resolve_commitment(f.dispatch);
  const std::vector<double> budget = worst_case_gain(scn.model, f.attack.areas);
  StabilityConstraintSet set = build_stability_constraints(scn, budget, f.attack.areas, budget, TableBuildOptions{});
  set.stability_margin = 0.02;
  DispatchSolution sol = solve_dispatch(scn, set);
  const double to_mw = scn.model.omega_max * scn.model.base_power;
  for (std::size_t t = 0; t < scn.num_periods(); ++t) {
    for (std::size_t a = 0; a < scn.areas(); ++a) {
      const AreaDispatch& d = sol.periods[t].areas[a];
      CHECK(d.wind_power + d.droop_gain * to_mw <= scn.periods[t].wind_available[a] + 1e-6);
      CHECK(d.wind_power - d.droop_gain * to_mw >= -1e-6);
      CHECK(d.droop_gain <= budget[a] + 1e-9);
    }
    CHECK(check_droop_capacity(period_model(scn, t), sol.droop(scn, t))[1]);
  }
  CHECK_NOTHROW(validate_solution(scn, sol, budget, &set));
  for (const auto& c : sol.certificates) {
    CHECK(c.stable);
    CHECK(c.max_real < 0.0);
  }
}

TEST_CASE("automatic commitment meets area floors then merit order") {
  DispatchScenario scn;
  scn.model = SystemModel::zeros(2);
  scn.periods = {Period{{100.0, 100.0}, {0.0, 0.0}}};
  scn.generators = {Generator{"cheap_a", 0, 10.0, 0.0, 100.0, {}},
                    Generator{"cheap_b", 0, 11.0, 0.0, 100.0, {}},
                    Generator{"dear_a", 1, 50.0, 0.0, 100.0, {}},
                    Generator{"dear_b", 1, 60.0, 0.0, 100.0, {}}};
  scn.reserve_margin = 0.0;
  scn.min_online_fraction = 0.0;
  DispatchScenario r = resolve_commitment(scn);
  CHECK(r.generators[0].committed[0] == 1);
  CHECK(r.generators[1].committed[0] == 1);
  CHECK(r.generators[2].committed[0] == 0);
  scn.min_online_fraction = 0.25;
  r = resolve_commitment(scn);
  // The floor brings dear_a online first, so cheap_a alone closes the gap.
  CHECK(r.generators[0].committed[0] == 1);
  CHECK(r.generators[1].committed[0] == 0);
  CHECK(r.generators[2].committed[0] == 1);
  CHECK(r.generators[3].committed[0] == 0);
  CHECK(committed_share(r, 0) == std::vector<double>{0.5, 0.5});
  scn.generators[3].committed = {1};
  r = resolve_commitment(scn);
  CHECK(r.generators[3].committed[0] == 1);
}

TEST_CASE("period dynamics scale with the committed share") {
  DispatchScenario scn = fixture::toy();
  scn.generators = {Generator{"a", 0, 10.0, 0.0, 5.0, {1}}, Generator{"b", 0, 12.0, 0.0, 5.0, {0}}};
  const SystemModel m = period_model(scn, 0);
  CHECK(m.inertia_sg[0] == doctest::Approx(0.5));
  CHECK(m.gov_integral[0] == doctest::Approx(2.5));
  CHECK(m.gov_proportional[0] == doctest::Approx(0.75));
  CHECK(m.damping[0] == doctest::Approx(0.5));
  scn.scale_dynamics_with_commitment = false;
  CHECK(period_model(scn, 0).inertia_sg[0] == doctest::Approx(1.0));
}

TEST_CASE("storage keeps its state of charge consistent") {
  DispatchScenario scn = fixture::toy();
  scn.periods = {Period{{4.0}, {0.0}}, Period{{4.0}, {2.0}}, Period{{4.0}, {0.0}}};
  scn.generators = {Generator{"cheap", 0, 10.0, 0.0, 3.0, {1, 1, 1}},
                    Generator{"dear", 0, 80.0, 0.0, 10.0, {1, 1, 1}}};
  scn.storage = {Storage{"bat", 0, 0.1, 0.9, 0.5, 0.9, 1.0, 4.0}};
  const DispatchSolution sol = solve_dispatch(scn, StabilityConstraintSet::none(3, 1));
  double soc = 0.5 * 4.0;
  for (std::size_t t = 0; t < 3; ++t) {
    const AreaDispatch& a = sol.periods[t].areas[0];
    soc += 0.9 * a.charge - a.discharge / 0.9;
    CHECK(sol.periods[t].soc[0] * 4.0 == doctest::Approx(soc));
    CHECK(sol.periods[t].soc[0] >= 0.1 - 1e-9);
    CHECK(sol.periods[t].soc[0] <= 0.9 + 1e-9);
    const double supply = a.sg_power + a.wind_power + a.discharge - a.charge + a.shed;
    CHECK(supply == doctest::Approx(4.0));
  }
  CHECK(sol.periods[2].soc[0] >= 0.5 - 1e-9);
  // Charging from cheap wind in the middle period displaces the dear unit.
  const double no_storage = solve_dispatch([&] {
    DispatchScenario s = scn;
    s.storage.clear();
    return s;
  }(), StabilityConstraintSet::none(3, 1)).total_cost;
  CHECK(sol.total_cost < no_storage);
  CHECK_THROWS_AS(build_cred_milp(resolve_commitment(scn), StabilityConstraintSet::none(3, 1), {}, {1}), BuildError);
}

TEST_CASE("cost increment clamps round-off only") {
  CHECK(cost_increment(100.0, 105.0) == doctest::Approx(5.0));
  CHECK(cost_increment(1e5, 1e5 - 1e-3) == 0.0);
  CHECK_THROWS_AS(cost_increment(100.0, 90.0), NumericalError);
}

TEST_CASE("precheck agrees with the exact spectrum per period") {
  const ScenarioFile f = load_scenario(fixture::data_path("desk_3area.json"));
  const std::vector<double> budget = worst_case_gain(f.dispatch.model, f.attack.areas);
  const PrecheckResult attacked = stability_precheck(f.dispatch, {}, budget);
  CHECK_FALSE(attacked.stable);
  const PrecheckResult quiet = stability_precheck(f.dispatch, {}, std::vector<double>(3, 0.0));
  CHECK(quiet.stable);
}
