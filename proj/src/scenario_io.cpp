#include "cred/scenario_io.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "cred/error.hpp"

namespace cred {
namespace {

using nlohmann::json;

const json& need(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ConfigError(where + ": missing key '" + key + "'");
  }
  return obj.at(key);
}

double number(const json& obj, const char* key, const std::string& where) {
  const json& v = need(obj, key, where);
  if (!v.is_number()) throw ConfigError(where + ": key '" + key + "' must be a number");
  return v.get<double>();
}

double number_or(const json& obj, const char* key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return number(obj, key, where);
}

std::vector<double> numbers(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + " must be an array of numbers");
  std::vector<double> out;
  for (const json& e : v) {
    if (!e.is_number()) throw ConfigError(where + " must contain only numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::size_t index(const json& v, const std::string& where) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(where + " must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(what) + " is not valid JSON: " + e.what());
  }
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

ScenarioFile parse_scenario(const std::string& text) {
  const json doc = parse_json(text, "scenario");
  if (!doc.is_object()) throw ConfigError("scenario must be a JSON object");
  ScenarioFile out;
  out.name = doc.value("name", std::string("scenario"));

  const double base = number(doc, "base_power", "scenario");
  if (!(base > 0.0)) throw ConfigError("scenario: base_power must be positive");
  out.frequency_base = number_or(doc, "frequency_base_hz", 1.0, "scenario");
  if (!(out.frequency_base > 0.0)) throw ConfigError("scenario: frequency_base_hz must be positive");
  // Coefficients per Hz become p.u. per frequency unit.
  const double per_hz = out.frequency_base / base;

  const json& areas = need(doc, "areas", "scenario");
  if (!areas.is_array() || areas.empty()) throw ConfigError("scenario: 'areas' must be a non-empty array");
  const std::size_t n = areas.size();
  SystemModel& m = out.dispatch.model;
  m = SystemModel::zeros(n);
  m.base_power = base;
  m.omega_max = number(doc, "omega_max", "scenario") / out.frequency_base;
  for (std::size_t a = 0; a < n; ++a) {
    const json& ar = areas[a];
    const std::string where = "areas[" + std::to_string(a) + "]";
    m.inertia_sg[a] = number(ar, "inertia_sg", where) * per_hz;
    m.inertia_ibr[a] = number_or(ar, "inertia_ibr", 0.0, where) * per_hz;
    m.damping[a] = number(ar, "damping", where) * per_hz;
    m.gov_integral[a] = number(ar, "gov_integral", where) * per_hz;
    m.gov_proportional[a] = number(ar, "gov_proportional", where) * per_hz;
    m.secure_load[a] = number(ar, "secure_load", where) / base;
    m.vulnerable_load[a] = number(ar, "vulnerable_load", where) / base;
    m.ibr_max_power[a] = number_or(ar, "ibr_max_power", 0.0, where) / base;
  }
  const json& coupling = need(doc, "coupling", "scenario");
  if (!coupling.is_array() || coupling.size() != n) throw ConfigError("scenario: 'coupling' must be N x N");
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> row = numbers(coupling[i], "coupling row " + std::to_string(i));
    if (row.size() != n) throw ConfigError("scenario: 'coupling' must be N x N");
    for (std::size_t j = 0; j < n; ++j) {
      m.susceptance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j] * per_hz;
    }
  }

  AttackSetup& atk = out.attack;
  atk.static_component.assign(n, 0.0);
  if (doc.contains("attack")) {
    const json& a = doc.at("attack");
    for (const json& v : need(a, "areas", "attack")) {
      const std::size_t idx = index(v, "attack.areas entry");
      if (idx >= n) throw ConfigError("attack.areas entry " + std::to_string(idx) + " is out of range");
      atk.areas.push_back(idx);
    }
    if (a.contains("static_component")) {
      atk.static_component = numbers(a.at("static_component"), "attack.static_component");
      if (atk.static_component.size() != n) throw ConfigError("attack.static_component needs one entry per area");
      for (double& v : atk.static_component) v /= base;
    }
    if (a.contains("estimate")) {
      const json& e = a.at("estimate");
      AttackEstimate est;
      est.mean = numbers(need(e, "mean", "attack.estimate"), "attack.estimate.mean");
      est.std = numbers(need(e, "std", "attack.estimate"), "attack.estimate.std");
      if (est.mean.size() != n || est.std.size() != n) {
        throw ConfigError("attack.estimate needs one mean and one std per area");
      }
      est.sample_count.assign(n, 0);
      atk.estimate = est;
      if (e.contains("samples")) atk.synthetic_samples = index(e.at("samples"), "attack.estimate.samples");
    }
  }

  DispatchScenario& d = out.dispatch;
  const json& disp = need(doc, "dispatch", "scenario");
  d.shed_cost = number_or(disp, "shed_cost", d.shed_cost, "dispatch");
  d.min_online_fraction = number_or(disp, "min_online_fraction", d.min_online_fraction, "dispatch");
  d.reserve_margin = number_or(disp, "reserve_margin", d.reserve_margin, "dispatch");
  if (disp.contains("scale_dynamics_with_commitment")) {
    d.scale_dynamics_with_commitment = disp.at("scale_dynamics_with_commitment").get<bool>();
  }
  const json& periods = need(disp, "periods", "dispatch");
  if (!periods.is_array()) throw ConfigError("dispatch.periods must be an array");
  for (std::size_t t = 0; t < periods.size(); ++t) {
    const std::string where = "dispatch.periods[" + std::to_string(t) + "]";
    const json& p = periods[t];
    Period per;
    per.demand = numbers(need(p, "demand", where), where + ".demand");
    std::vector<double> cf(n, 0.0);
    if (p.contains("wind_cf")) {
      cf = numbers(p.at("wind_cf"), where + ".wind_cf");
      if (cf.size() != n) throw ConfigError(where + ".wind_cf needs one entry per area");
      per.wind_available.resize(n);
      for (std::size_t a = 0; a < n; ++a) {
        if (cf[a] < 0.0 || cf[a] > 1.0) throw ConfigError(where + ".wind_cf entries must lie in [0, 1]");
        per.wind_available[a] = cf[a] * m.ibr_max_power[a] * base;
      }
    } else {
      per.wind_available = numbers(need(p, "wind_available", where), where + ".wind_available");
      if (per.wind_available.size() != n) throw ConfigError(where + ".wind_available needs one entry per area");
      for (std::size_t a = 0; a < n; ++a) {
        const double cap = m.ibr_max_power[a] * base;
        cf[a] = cap > 0.0 ? per.wind_available[a] / cap : 0.0;
      }
    }
    d.periods.push_back(std::move(per));
    out.wind_cf.push_back(std::move(cf));
  }
  for (const json& g : need(disp, "generators", "dispatch")) {
    const std::string where = "generator '" + g.value("name", std::string("?")) + "'";
    Generator gen;
    gen.name = g.value("name", "G" + std::to_string(d.generators.size()));
    gen.area = index(need(g, "area", where), where + ".area");
    gen.marginal_cost = number(g, "marginal_cost", where);
    gen.p_min = number_or(g, "p_min", 0.0, where);
    gen.p_max = number(g, "p_max", where);
    if (g.contains("committed")) {
      for (const json& c : g.at("committed")) {
        if (c.is_boolean()) {
          gen.committed.push_back(c.get<bool>() ? 1 : 0);
        } else {
          gen.committed.push_back(static_cast<int>(index(c, where + ".committed entry")));
        }
      }
    }
    d.generators.push_back(std::move(gen));
  }
  if (disp.contains("storage")) {
    for (const json& s : disp.at("storage")) {
      const std::string where = "storage '" + s.value("name", std::string("?")) + "'";
      Storage st;
      st.name = s.value("name", "S" + std::to_string(d.storage.size()));
      st.area = index(need(s, "area", where), where + ".area");
      st.soc_min = number_or(s, "soc_min", st.soc_min, where);
      st.soc_max = number_or(s, "soc_max", st.soc_max, where);
      st.soc_initial = number_or(s, "soc_initial", st.soc_initial, where);
      st.efficiency = number_or(s, "efficiency", st.efficiency, where);
      st.power_limit = number(s, "power_limit", where);
      st.energy = number(s, "energy", where);
      d.storage.push_back(std::move(st));
    }
  }
  try {
    d.validate();
    AttackProfile probe = AttackProfile::none(n);
    probe.static_component = atk.static_component;
    probe.attack_areas = atk.areas;
    probe.validate(n);
  } catch (const ConfigError& e) {
    throw ConfigError("scenario '" + out.name + "': " + e.what());
  }
  return out;
}

ScenarioFile load_scenario(const std::filesystem::path& path) {
  try {
    return parse_scenario(read_text_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::map<AreaIndex, std::vector<double>> parse_samples(const std::string& text, std::size_t areas) {
  const json doc = parse_json(text, "sample file");
  if (!doc.is_array()) throw ConfigError("sample file must be an array of {area, samples} records");
  std::map<AreaIndex, std::vector<double>> out;
  for (const json& rec : doc) {
    const std::size_t a = index(need(rec, "area", "sample record"), "sample record area");
    if (a >= areas) throw ConfigError("sample record area " + std::to_string(a) + " is out of range");
    const std::vector<double> s = numbers(need(rec, "samples", "sample record"), "sample record samples");
    auto& dst = out[a];
    dst.insert(dst.end(), s.begin(), s.end());
  }
  return out;
}

std::map<AreaIndex, std::vector<double>> load_samples(const std::filesystem::path& path,
                                                      std::size_t areas) {
  return parse_samples(read_text_file(path), areas);
}

std::map<AreaIndex, std::vector<double>> synthesize_samples(const AttackEstimate& est,
                                                            const std::vector<AreaIndex>& areas,
                                                            std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::map<AreaIndex, std::vector<double>> out;
  for (AreaIndex a : areas) {
    if (a >= est.mean.size()) throw ContractError("estimate does not cover attack area");
    std::normal_distribution<double> dist(est.mean[a], est.std[a]);
    auto& v = out[a];
    v.reserve(count);
    for (std::size_t k = 0; k < count; ++k) v.push_back(est.std[a] > 0.0 ? dist(rng) : est.mean[a]);
  }
  return out;
}

void set_vulnerable_fraction(ScenarioFile& scn, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("vulnerable fraction must lie in [0, 1]");
  SystemModel& m = scn.dispatch.model;
  for (std::size_t a = 0; a < m.areas(); ++a) {
    const double total = m.secure_load[a] + m.vulnerable_load[a];
    m.vulnerable_load[a] = fraction * total;
    m.secure_load[a] = total - m.vulnerable_load[a];
  }
}

void set_wind_capacity(ScenarioFile& scn, double total_mw) {
  if (!(total_mw >= 0.0)) throw ConfigError("wind capacity must be non-negative");
  SystemModel& m = scn.dispatch.model;
  const std::size_t n = m.areas();
  double current = 0.0;
  for (double c : m.ibr_max_power) current += c;
  for (std::size_t a = 0; a < n; ++a) {
    const double share = current > 0.0 ? m.ibr_max_power[a] / current : 1.0 / static_cast<double>(n);
    m.ibr_max_power[a] = share * total_mw / m.base_power;
  }
  for (std::size_t t = 0; t < scn.dispatch.periods.size(); ++t) {
    for (std::size_t a = 0; a < n; ++a) {
      scn.dispatch.periods[t].wind_available[a] = scn.wind_cf[t][a] * m.ibr_max_power[a] * m.base_power;
    }
  }
}

}  // namespace cred
