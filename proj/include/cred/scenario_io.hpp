#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cred/dispatch.hpp"
#include "cred/dr_uncertainty.hpp"

namespace cred {

struct AttackSetup {
  std::vector<AreaIndex> areas;
  std::vector<double> static_component;  // p.u., one per area
  // Moment estimate (p.u.) from which detector samples can be synthesised.
  std::optional<AttackEstimate> estimate;
  std::size_t synthetic_samples = 1000;
};

struct ScenarioFile {
  std::string name;
  DispatchScenario dispatch;
  AttackSetup attack;
  double frequency_base = 1.0;  // Hz per internal frequency unit
  // Wind capacity factor per period and area, kept so capacity can be rescaled.
  std::vector<std::vector<double>> wind_cf;
};

// Reads a scenario JSON document. Physical values are SI (MW, MW*s/Hz,
// MW/Hz, Hz) and are converted to p.u. on `base_power` here. When
// `frequency_base_hz` is present, frequency is expressed in p.u. of it.
// Throws ConfigError with the offending key on malformed input.
ScenarioFile parse_scenario(const std::string& text);
ScenarioFile load_scenario(const std::filesystem::path& path);

// Detector samples: a JSON array of {"area": n, "samples": [...]} records,
// gains in p.u. Records for the same area are concatenated.
std::map<AreaIndex, std::vector<double>> parse_samples(const std::string& text, std::size_t areas);
std::map<AreaIndex, std::vector<double>> load_samples(const std::filesystem::path& path,
                                                      std::size_t areas);

// Normal draws around the estimate for every attacked area, reproducible
// from `seed`.
std::map<AreaIndex, std::vector<double>> synthesize_samples(const AttackEstimate& est,
                                                            const std::vector<AreaIndex>& areas,
                                                            std::size_t count, std::uint64_t seed);

// Sets every area's vulnerable load to `fraction` of its total load, keeping
// the total fixed.
void set_vulnerable_fraction(ScenarioFile& scn, double fraction);

// Rescales installed wind capacity (and availability) to `total_mw`, keeping
// the area shares; an all-zero fleet is spread evenly.
void set_wind_capacity(ScenarioFile& scn, double total_mw);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace cred
