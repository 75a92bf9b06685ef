#include "cred/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "cred/error.hpp"

namespace cred {
namespace {

using milp::LinearTerm;
using milp::Relation;
constexpr std::size_t npos = CredLayout::npos;

std::string tag(const char* stem, std::size_t t, std::size_t k) {
  std::ostringstream os;
  os << stem << '_' << t << '_' << k;
  return os.str();
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

bool committed(const Generator& g, std::size_t t) { return g.committed.at(t) != 0; }

}  // namespace

void DispatchScenario::validate() const {
  model.validate();
  const std::size_t n = areas();
  require(!periods.empty(), "dispatch scenario has no periods");
  for (std::size_t t = 0; t < periods.size(); ++t) {
    const Period& p = periods[t];
    require(p.demand.size() == n && p.wind_available.size() == n,
            "period " + std::to_string(t) + " needs one demand and one wind entry per area");
    for (std::size_t a = 0; a < n; ++a) {
      require(std::isfinite(p.demand[a]) && p.demand[a] >= 0.0,
              "period " + std::to_string(t) + " has a negative or non-finite demand");
      require(std::isfinite(p.wind_available[a]) && p.wind_available[a] >= 0.0,
              "period " + std::to_string(t) + " has a negative or non-finite wind availability");
      require(p.wind_available[a] <= model.ibr_max_power[a] * model.base_power * (1.0 + 1e-9) + 1e-9,
              "period " + std::to_string(t) + " wind availability exceeds installed IBR capacity");
    }
  }
  for (const Generator& g : generators) {
    require(g.area < n, "generator '" + g.name + "' sits in an unknown area");
    require(g.p_min >= 0.0 && g.p_min <= g.p_max, "generator '" + g.name + "' needs 0 <= p_min <= p_max");
    require(std::isfinite(g.marginal_cost), "generator '" + g.name + "' has a non-finite cost");
    require(g.committed.empty() || g.committed.size() == periods.size(),
            "generator '" + g.name + "' commitment must list every period");
    for (int c : g.committed) require(c == 0 || c == 1, "commitment entries must be 0 or 1");
  }
  for (const Storage& s : storage) {
    require(s.area < n, "storage '" + s.name + "' sits in an unknown area");
    require(0.0 <= s.soc_min && s.soc_min < s.soc_max && s.soc_max <= 1.0,
            "storage '" + s.name + "' needs 0 <= soc_min < soc_max <= 1");
    require(s.soc_initial >= s.soc_min && s.soc_initial <= s.soc_max,
            "storage '" + s.name + "' initial SoC lies outside its bounds");
    require(s.efficiency > 0.0 && s.efficiency <= 1.0, "storage '" + s.name + "' efficiency must lie in (0, 1]");
    require(s.power_limit >= 0.0 && s.energy > 0.0, "storage '" + s.name + "' needs power >= 0 and energy > 0");
  }
  require(shed_cost >= 0.0 && std::isfinite(shed_cost), "shed cost must be non-negative");
  require(min_online_fraction >= 0.0 && min_online_fraction <= 1.0, "min_online_fraction must lie in [0, 1]");
  require(reserve_margin >= 0.0, "reserve_margin must be non-negative");
}

DispatchScenario resolve_commitment(const DispatchScenario& scn) {
  DispatchScenario out = scn;
  const std::size_t periods = scn.num_periods();
  std::vector<std::size_t> automatic;
  for (std::size_t g = 0; g < out.generators.size(); ++g) {
    if (out.generators[g].committed.empty()) {
      automatic.push_back(g);
      out.generators[g].committed.assign(periods, 0);
    }
  }
  if (automatic.empty()) return out;
  std::stable_sort(automatic.begin(), automatic.end(), [&](std::size_t a, std::size_t b) {
    return out.generators[a].marginal_cost < out.generators[b].marginal_cost;
  });

  const std::size_t n = scn.areas();
  std::vector<double> installed(n, 0.0);
  for (const Generator& g : out.generators) installed[g.area] += g.p_max;

  for (std::size_t t = 0; t < periods; ++t) {
    const Period& p = scn.periods[t];
    const double demand = std::accumulate(p.demand.begin(), p.demand.end(), 0.0);
    const double wind = std::accumulate(p.wind_available.begin(), p.wind_available.end(), 0.0);
    const double required = std::max(0.0, demand - wind) * (1.0 + scn.reserve_margin);

    double online = 0.0;
    std::vector<double> area_online(n, 0.0);
    auto commit = [&](std::size_t g) {
      out.generators[g].committed[t] = 1;
      online += out.generators[g].p_max;
      area_online[out.generators[g].area] += out.generators[g].p_max;
    };
    for (const Generator& g : out.generators) {
      if (committed(g, t)) {
        online += g.p_max;
        area_online[g.area] += g.p_max;
      }
    }
    // Area floors first, cheapest units of each area; then system merit order.
    for (std::size_t g : automatic) {
      const Generator& gen = out.generators[g];
      if (gen.committed[t]) continue;
      if (area_online[gen.area] + 1e-9 < scn.min_online_fraction * installed[gen.area]) commit(g);
    }
    for (std::size_t g : automatic) {
      if (online >= required) break;
      if (!out.generators[g].committed[t]) commit(g);
    }
  }
  return out;
}

std::vector<double> committed_share(const DispatchScenario& scn, std::size_t t) {
  const std::size_t n = scn.areas();
  std::vector<double> installed(n, 0.0);
  std::vector<double> online(n, 0.0);
  for (const Generator& g : scn.generators) {
    if (g.committed.size() != scn.num_periods()) {
      throw ContractError("commitment of generator '" + g.name + "' is unresolved");
    }
    installed[g.area] += g.p_max;
    if (committed(g, t)) online[g.area] += g.p_max;
  }
  std::vector<double> share(n, 1.0);
  for (std::size_t a = 0; a < n; ++a) {
    if (installed[a] > 0.0) share[a] = online[a] / installed[a];
  }
  return share;
}

SystemModel period_model(const DispatchScenario& scn, std::size_t t) {
  if (t >= scn.num_periods()) throw ContractError("period index out of range");
  SystemModel m = scn.model;
  if (!scn.scale_dynamics_with_commitment) return m;
  const std::vector<double> share = committed_share(scn, t);
  for (std::size_t a = 0; a < m.areas(); ++a) {
    m.inertia_sg[a] *= share[a];
    m.gov_proportional[a] *= share[a];
    m.gov_integral[a] *= share[a];
  }
  return m;
}

StabilityConstraintSet StabilityConstraintSet::none(std::size_t periods, std::size_t areas) {
  StabilityConstraintSet s;
  s.tables.resize(periods);
  s.robust_gains.assign(areas, 0.0);
  return s;
}

bool StabilityConstraintSet::empty() const {
  return std::all_of(tables.begin(), tables.end(), [](const auto& v) { return v.empty(); });
}

CredMilp build_cred_milp(const DispatchScenario& scn, const StabilityConstraintSet& stab,
                         const DispatchOptions& opts, std::vector<std::size_t> periods) {
  const std::size_t n = scn.areas();
  const std::size_t horizon = scn.num_periods();
  if (periods.empty()) {
    periods.resize(horizon);
    std::iota(periods.begin(), periods.end(), std::size_t{0});
  }
  if (!scn.storage.empty() && periods.size() != horizon) {
    throw BuildError("storage couples periods; the instance must span the whole horizon");
  }
  for (std::size_t k = 0; k < periods.size(); ++k) {
    if (periods[k] >= horizon) throw BuildError("period index out of range");
    if (!scn.storage.empty() && periods[k] != k) throw BuildError("storage instances need periods in order");
  }
  if (stab.robust_gains.size() != n) throw BuildError("robust gains need one entry per area");
  if (!stab.tables.empty() && stab.tables.size() != horizon) {
    throw BuildError("stability tables need one entry per period");
  }
  if (!(stab.strict_margin > 0.0)) throw BuildError("strict margin must be positive");
  if (stab.stability_margin < 0.0) throw BuildError("stability margin must be non-negative");
  for (const Generator& g : scn.generators) {
    if (g.committed.size() != horizon) throw BuildError("commitment of '" + g.name + "' is unresolved");
  }

  CredMilp out;
  milp::LinearProgram& lp = out.mip.base;
  CredLayout& L = out.layout;
  const double kc_to_mw = scn.model.omega_max * scn.model.base_power;
  const std::size_t blocks = periods.size();
  L.periods = periods;
  L.sg.assign(blocks, {});
  L.wind.assign(blocks, std::vector<std::size_t>(n, npos));
  L.droop.assign(blocks, std::vector<std::size_t>(n, npos));
  L.shed.assign(blocks, std::vector<std::size_t>(n, npos));
  L.charge.assign(blocks, {});
  L.discharge.assign(blocks, {});
  L.soc.assign(blocks, {});

  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t t = periods[b];
    const Period& p = scn.periods[t];
    const std::vector<SegmentTable> no_tables;
    const std::vector<SegmentTable>& tables = stab.tables.empty() ? no_tables : stab.tables[t];

    std::vector<LinearTerm> balance;
    for (std::size_t g = 0; g < scn.generators.size(); ++g) {
      const Generator& gen = scn.generators[g];
      const bool on = committed(gen, t);
      const std::size_t v = lp.add_variable(on ? gen.p_min : 0.0, on ? gen.p_max : 0.0,
                                            gen.marginal_cost, tag("pg", t, g));
      L.sg[b].push_back(v);
      balance.push_back({v, 1.0});
    }
    for (std::size_t a = 0; a < n; ++a) {
      L.wind[b][a] = lp.add_variable(0.0, p.wind_available[a], 0.0, tag("pw", t, a));
      balance.push_back({L.wind[b][a], 1.0});
      if (opts.allow_shedding) {
        L.shed[b][a] = lp.add_variable(0.0, p.demand[a], scn.shed_cost, tag("ps", t, a));
        balance.push_back({L.shed[b][a], 1.0});
      }
    }
    for (std::size_t s = 0; s < scn.storage.size(); ++s) {
      const Storage& st = scn.storage[s];
      const std::size_t ch = lp.add_variable(0.0, st.power_limit, 0.0, tag("pch", t, s));
      const std::size_t dis = lp.add_variable(0.0, st.power_limit, 0.0, tag("pdis", t, s));
      const std::size_t soc =
          lp.add_variable(st.soc_min * st.energy, st.soc_max * st.energy, 0.0, tag("soc", t, s));
      L.charge[b].push_back(ch);
      L.discharge[b].push_back(dis);
      L.soc[b].push_back(soc);
      balance.push_back({dis, 1.0});
      balance.push_back({ch, -1.0});
      std::vector<LinearTerm> rec{{soc, 1.0}, {ch, -st.efficiency}, {dis, 1.0 / st.efficiency}};
      double rhs = 0.0;
      if (b == 0) {
        rhs = st.soc_initial * st.energy;
      } else {
        rec.push_back({L.soc[b - 1][s], -1.0});
      }
      lp.add_constraint(std::move(rec), Relation::kEqual, rhs, tag("soc_rec", t, s));
      if (b + 1 == blocks) {
        lp.add_constraint({{soc, 1.0}}, Relation::kGreaterEqual, st.soc_initial * st.energy,
                          tag("soc_end", t, s));
      }
    }
    const double demand = std::accumulate(p.demand.begin(), p.demand.end(), 0.0);
    lp.add_constraint(std::move(balance), Relation::kEqual, demand, "balance_" + std::to_string(t));

    // Droop gains exist only where an attacked area carries stability rows.
    for (const SegmentTable& tab : tables) {
      const AreaIndex a = tab.area;
      if (a >= n) throw BuildError("segment table refers to an unknown area");
      const double g = stab.robust_gains[a];
      if (g <= 0.0 || L.droop[b][a] != npos) continue;
      L.droop[b][a] = lp.add_variable(0.0, g, 0.0, tag("kc", t, a));
      lp.add_constraint({{L.wind[b][a], 1.0}, {L.droop[b][a], kc_to_mw}}, Relation::kLessEqual,
                        p.wind_available[a], tag("droop_up", t, a));
      lp.add_constraint({{L.wind[b][a], 1.0}, {L.droop[b][a], -kc_to_mw}}, Relation::kGreaterEqual,
                        0.0, tag("droop_dn", t, a));
    }

    // eigen index -> (terms, Re lambda0)
    std::map<std::size_t, std::pair<std::vector<LinearTerm>, double>> rows;
    for (std::size_t k = 0; k < tables.size(); ++k) {
      const SegmentTable& tab = tables[k];
      const AreaIndex a = tab.area;
      const double g = stab.robust_gains[a];
      auto& row = rows.try_emplace(tab.eigen_index, std::vector<LinearTerm>{}, tab.base_eigenvalue.real())
                      .first->second;
      if (g <= 0.0) continue;
      if (tab.direction() < 0.0 || tab.range_end < g * (1.0 - 1e-12)) {
        std::ostringstream os;
        os << "segment table for eigenvalue " << tab.eigen_index << ", area " << a
           << " covers [0, " << tab.range_end << "] but the robust gain is " << g;
        throw BuildError(os.str());
      }
      if (tab.points.empty()) throw BuildError("segment table has no points");

      std::size_t kept = 0;
      while (kept < tab.points.size() && tab.points[kept].abscissa <= g) ++kept;
      const double max_abs = std::abs(tab.range_end);
      const double big_m = stab.big_m > 0.0 ? stab.big_m : 2.0 * (max_abs + std::max(max_abs, g) + g);
      if (big_m <= 2.0 * (std::min(max_abs, g) + g) * (1.0 - 1e-12)) {
        throw BuildError("big-M constant is too small for the segment range");
      }
      const double eps = stab.strict_margin;
      const std::size_t kc = L.droop[b][a];
      // Rows below are written in K^C with x = g - K^C.
      CredLayout::SegmentBinaries seg{t, k, {}};
      std::vector<LinearTerm> one_hot;
      for (std::size_t m = 0; m < kept; ++m) {
        const LinearizationPoint& pt = tab.points[m];
        const double s = pt.slope.real();
        const double c = (pt.eigenvalue - tab.base_eigenvalue).real();
        if (kept == 1) {
          // Single interval: z is identically one and the product is K^C itself.
          seg.z.push_back(npos);
          row.first.push_back({kc, -s});
          row.second += s * g + c - s * pt.abscissa;
          continue;
        }
        const std::size_t z = lp.add_variable(0.0, 1.0, 0.0, tag("z", t, k) + "_" + std::to_string(m));
        out.mip.binary_vars.push_back(z);
        seg.z.push_back(z);
        one_hot.push_back({z, 1.0});

        std::vector<LinearTerm> link{{z, 1.0}};
        double link_rhs = -1.0;
        if (m > 0) {
          const double phi = pt.abscissa;
          const std::size_t z1 = lp.add_variable(0.0, 1.0, 0.0, tag("z1", t, k) + "_" + std::to_string(m));
          out.mip.binary_vars.push_back(z1);
          lp.add_constraint({{kc, -1.0}, {z1, -big_m}}, Relation::kGreaterEqual, phi - big_m - g);
          lp.add_constraint({{kc, -1.0}, {z1, -big_m}}, Relation::kLessEqual, phi - eps - g);
          link.push_back({z1, -1.0});
        } else {
          link_rhs += 1.0;
        }
        if (m + 1 < kept) {
          const double phi = tab.points[m + 1].abscissa;
          const std::size_t z2 = lp.add_variable(0.0, 1.0, 0.0, tag("z2", t, k) + "_" + std::to_string(m));
          out.mip.binary_vars.push_back(z2);
          lp.add_constraint({{kc, -1.0}, {z2, big_m}}, Relation::kLessEqual, phi - eps + big_m - g);
          lp.add_constraint({{kc, -1.0}, {z2, big_m}}, Relation::kGreaterEqual, phi - g);
          link.push_back({z2, -1.0});
        } else {
          link_rhs += 1.0;
        }
        // z = z1 + z2 - 1
        lp.add_constraint(std::move(link), Relation::kEqual, link_rhs);

        // u = K^C z
        const std::size_t u = lp.add_variable(0.0, g, 0.0, tag("u", t, k) + "_" + std::to_string(m));
        lp.add_constraint({{u, 1.0}, {z, -g}}, Relation::kLessEqual, 0.0);
        lp.add_constraint({{u, 1.0}, {kc, -1.0}}, Relation::kLessEqual, 0.0);
        lp.add_constraint({{u, 1.0}, {kc, -1.0}, {z, -g}}, Relation::kGreaterEqual, -g);

        row.first.push_back({z, s * g + c - s * pt.abscissa});
        row.first.push_back({u, -s});
      }
      if (!one_hot.empty()) lp.add_constraint(std::move(one_hot), Relation::kEqual, 1.0);
      L.segments.push_back(std::move(seg));
    }
    for (auto& [i, row] : rows) {
      if (row.first.empty()) {
        if (row.second > -stab.strict_margin - stab.stability_margin) {
          // Constant row that cannot hold: encode it so the solver reports infeasible.
          const std::size_t dummy = lp.add_variable(0.0, 0.0, 0.0, tag("infeasible", t, i));
          row.first.push_back({dummy, 1.0});
        } else {
          continue;
        }
      }
      lp.add_constraint(std::move(row.first), Relation::kLessEqual,
                        -stab.strict_margin - stab.stability_margin - row.second,
                        tag("stab", t, i));
    }
  }
  out.mip.validate();
  return out;
}

double DispatchSolution::total_shed() const {
  double s = 0.0;
  for (const auto& p : periods) {
    for (const auto& a : p.areas) s += a.shed;
  }
  return s;
}

DroopSchedule DispatchSolution::droop(const DispatchScenario& scn, std::size_t t) const {
  const std::size_t n = scn.areas();
  DroopSchedule d = DroopSchedule::none(n);
  const PeriodDispatch& p = periods.at(t);
  for (std::size_t a = 0; a < n; ++a) {
    d.droop_gain[a] = p.areas[a].droop_gain;
    d.power_ref[a] = p.areas[a].wind_power / scn.model.base_power;
  }
  return d;
}

DispatchSolution solve_dispatch(const DispatchScenario& input, const StabilityConstraintSet& stab,
                                const DispatchOptions& opts) {
  const DispatchScenario scn = resolve_commitment(input);
  scn.validate();
  const std::size_t n = scn.areas();
  const std::size_t horizon = scn.num_periods();

  std::vector<std::vector<std::size_t>> blocks;
  if (!scn.storage.empty()) {
    blocks.emplace_back(horizon);
    std::iota(blocks.back().begin(), blocks.back().end(), std::size_t{0});
  } else {
    for (std::size_t t = 0; t < horizon; ++t) blocks.push_back({t});
  }

  DispatchSolution sol;
  sol.shedding_allowed = opts.allow_shedding;
  sol.periods.resize(horizon);
  for (const auto& block : blocks) {
    const CredMilp inst = build_cred_milp(scn, stab, opts, block);
    const milp::SolveResult res = milp::solve_milp(inst.mip, opts.solver);
    sol.node_count += res.node_count;
    if (res.status == milp::SolveStatus::kInfeasible) {
      std::ostringstream os;
      os << "no feasible dispatch in period " << block.front()
         << (opts.allow_shedding ? "" : " without load shedding");
      throw InfeasibleError(os.str());
    }
    if (res.status == milp::SolveStatus::kUnbounded) throw BuildError("dispatch instance is unbounded");
    if (res.status == milp::SolveStatus::kIterationLimit) {
      throw NumericalError("dispatch solve hit its iteration or node limit in period " +
                           std::to_string(block.front()));
    }
    const CredLayout& L = inst.layout;
    const auto& x = res.values;
    auto val = [&](std::size_t v) { return v == npos ? 0.0 : x[v]; };
    const double kc_to_mw = scn.model.omega_max * scn.model.base_power;
    for (std::size_t b = 0; b < L.periods.size(); ++b) {
      const std::size_t t = L.periods[b];
      PeriodDispatch& pd = sol.periods[t];
      pd.areas.assign(n, AreaDispatch{});
      pd.generator_power.assign(scn.generators.size(), 0.0);
      for (std::size_t g = 0; g < scn.generators.size(); ++g) {
        const double pg = val(L.sg[b][g]);
        pd.generator_power[g] = pg;
        pd.areas[scn.generators[g].area].sg_power += pg;
        pd.cost += scn.generators[g].marginal_cost * pg;
      }
      for (std::size_t a = 0; a < n; ++a) {
        AreaDispatch& ad = pd.areas[a];
        ad.wind_power = val(L.wind[b][a]);
        ad.droop_gain = val(L.droop[b][a]);
        ad.wind_reserve = ad.droop_gain * kc_to_mw;
        ad.shed = val(L.shed[b][a]);
        pd.cost += scn.shed_cost * ad.shed;
      }
      for (std::size_t s = 0; s < scn.storage.size(); ++s) {
        const AreaIndex a = scn.storage[s].area;
        pd.areas[a].charge += val(L.charge[b][s]);
        pd.areas[a].discharge += val(L.discharge[b][s]);
        pd.soc.push_back(val(L.soc[b][s]) / scn.storage[s].energy);
      }
    }
    for (const auto& seg : L.segments) {
      const SegmentTable& tab = stab.tables[seg.period][seg.table];
      std::size_t chosen = 0;
      for (std::size_t m = 0; m < seg.z.size(); ++m) {
        if (seg.z[m] == npos || x[seg.z[m]] > 0.5) chosen = m;
      }
      sol.segments.push_back({seg.period, tab.eigen_index, tab.area, chosen});
    }
  }
  for (const auto& p : sol.periods) sol.total_cost += p.cost;
  return sol;
}

PrecheckResult stability_precheck(const DispatchScenario& input,
                                  const std::vector<DroopSchedule>& droop,
                                  const std::vector<double>& gains) {
  const DispatchScenario scn = resolve_commitment(input);
  if (!droop.empty() && droop.size() != scn.num_periods()) {
    throw ContractError("precheck needs one droop schedule per period");
  }
  PrecheckResult out;
  const AttackProfile attack = AttackProfile::from_gains(gains);
  for (std::size_t t = 0; t < scn.num_periods(); ++t) {
    const SystemModel m = period_model(scn, t);
    const DroopSchedule d = droop.empty() ? DroopSchedule::none(m.areas()) : droop[t];
    const EigenSolution eig = eigen_decompose(build_state_space(m, attack, d));
    out.periods.push_back(is_stable(eig));
    out.stable = out.stable && out.periods.back().stable;
  }
  return out;
}

void validate_solution(const DispatchScenario& input, DispatchSolution& sol,
                       const std::vector<double>& gains, const StabilityConstraintSet* stab) {
  const DispatchScenario scn = resolve_commitment(input);
  if (sol.periods.size() != scn.num_periods()) throw ContractError("solution does not match the horizon");
  const AttackProfile attack = AttackProfile::from_gains(gains);
  sol.certificates.clear();
  std::string failure;
  for (std::size_t t = 0; t < scn.num_periods(); ++t) {
    const SystemModel m = period_model(scn, t);
    const EigenSolution eig = eigen_decompose(build_state_space(m, attack, sol.droop(scn, t)));
    const StabilityVerdict v = is_stable(eig);

    StabilityCertificate cert;
    cert.period = t;
    cert.stable = v.stable;
    cert.max_real = v.max_real;
    for (std::size_t i = 0; i < eig.size(); ++i) {
      if (std::find(v.excluded_zero_modes.begin(), v.excluded_zero_modes.end(), i) !=
          v.excluded_zero_modes.end()) {
        continue;
      }
      if (eig.eigenvalues[i].real() == v.max_real) {
        cert.worst_index = i;
        cert.worst_eigenvalue = eig.eigenvalues[i];
        break;
      }
    }

    if (stab && !stab->tables.empty() && !stab->tables[t].empty()) {
      std::map<std::size_t, Complex> predicted;
      for (const SegmentTable& tab : stab->tables[t]) {
        auto it = predicted.try_emplace(tab.eigen_index, tab.base_eigenvalue).first;
        const double g = gains.at(tab.area);
        if (g <= 0.0) continue;
        const double x = std::clamp(g - sol.periods[t].areas[tab.area].droop_gain, 0.0, g);
        it->second += evaluate_piecewise(tab, x);
      }
      for (const auto& [i, lam] : predicted) {
        if (!std::isnan(cert.predicted_max_real) && lam.real() <= cert.predicted_max_real) continue;
        double best = std::numeric_limits<double>::infinity();
        Complex exact;
        for (const Complex& l : eig.eigenvalues) {
          if (std::abs(l - lam) < best) {
            best = std::abs(l - lam);
            exact = l;
          }
        }
        cert.predicted_max_real = lam.real();
        cert.prediction_error = std::abs(exact.real() - lam.real());
      }
    }
    sol.certificates.push_back(cert);
    if (!v.stable && failure.empty()) {
      std::ostringstream os;
      os << "period " << t << ": eigenvalue " << cert.worst_index << " = " << cert.worst_eigenvalue.real()
         << (cert.worst_eigenvalue.imag() < 0 ? " - " : " + ") << std::abs(cert.worst_eigenvalue.imag())
         << "i is not in the open left half-plane";
      failure = os.str();
    }
  }
  if (!failure.empty()) throw ValidationError(failure);
}

double cost_increment(double baseline_cost, double cred_cost) {
  const double d = cred_cost - baseline_cost;
  const double tol = 1e-6 * std::max(1.0, std::abs(baseline_cost));
  if (d < -tol) {
    std::ostringstream os;
    os << "stability-constrained cost " << cred_cost << " is below the baseline " << baseline_cost;
    throw NumericalError(os.str());
  }
  return std::max(0.0, d);
}

StabilityConstraintSet build_stability_constraints(const DispatchScenario& input,
                                                   const std::vector<double>& gains,
                                                   const std::vector<AreaIndex>& attack_areas,
                                                   const std::vector<double>& range_end,
                                                   const TableBuildOptions& opts) {
  const DispatchScenario scn = resolve_commitment(input);
  const std::size_t n = scn.areas();
  if (gains.size() != n || range_end.size() != n) {
    throw ContractError("gains and range ends need one entry per area");
  }
  StabilityConstraintSet set = StabilityConstraintSet::none(scn.num_periods(), n);
  set.robust_gains = gains;
  const AttackProfile attack = AttackProfile::from_gains(gains);

  std::vector<AreaIndex> areas;
  for (AreaIndex a : attack_areas) {
    if (a >= n) throw ContractError("attack area out of range");
    if (gains[a] > 0.0) areas.push_back(a);
  }

  std::map<std::vector<double>, std::vector<SegmentTable>> cache;
  for (std::size_t t = 0; t < scn.num_periods(); ++t) {
    const SystemModel m = period_model(scn, t);
    const EigenSolution eig = eigen_decompose(build_state_space(m, attack, DroopSchedule::none(n)));
    if (is_stable(eig).stable || areas.empty()) continue;

    const std::vector<double> key = scn.scale_dynamics_with_commitment ? committed_share(scn, t)
                                                                       : std::vector<double>{};
    auto hit = cache.find(key);
    if (hit == cache.end()) {
      std::vector<double> screen(n, 0.0);
      for (AreaIndex a : areas) screen[a] = gains[a];
      std::vector<CriticalPair> pairs = select_critical_pairs(m, areas, screen, opts.screening_margin);
      if (pairs.empty()) {
        pairs = select_critical_pairs(m, areas, screen, std::numeric_limits<double>::infinity());
      }
      std::vector<SegmentTable> tables;
      for (const CriticalPair& cp : pairs) {
        const double r = range_end[cp.area];
        if (r < gains[cp.area]) throw ContractError("range end below the robust gain");
        tables.push_back(build_segment_table(m, cp.eigen_index, cp.area, r, opts.eps_lim,
                                             r / opts.step_divisions, opts.linearization));
      }
      hit = cache.emplace(key, std::move(tables)).first;
    }
    set.tables[t] = hit->second;
  }
  return set;
}

}  // namespace cred
