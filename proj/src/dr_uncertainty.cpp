#include "cred/dr_uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cred/error.hpp"

namespace cred {

ConfidenceSpec::ConfidenceSpec(double eta) : eta_(eta) {
  if (!(eta > 0.0 && eta < 1.0)) {
    std::ostringstream os;
    os << "confidence level eta = " << eta << " is outside (0, 1)";
    throw ContractError(os.str());
  }
}

double ConfidenceSpec::k_eta() const { return std::sqrt(eta_ / (1.0 - eta_)); }

AttackEstimate moments_from_samples(const std::map<AreaIndex, std::vector<double>>& samples,
                                    std::size_t areas) {
  AttackEstimate est;
  est.mean.assign(areas, 0.0);
  est.std.assign(areas, 0.0);
  est.sample_count.assign(areas, 0);
  for (const auto& [area, values] : samples) {
    if (area >= areas) throw ContractError("sample area index out of range");
    if (values.size() < 2) {
      std::ostringstream os;
      os << "area " << area << " has " << values.size() << " samples; at least 2 are required";
      throw InsufficientDataError(os.str());
    }
    const auto count = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / count;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    est.mean[area] = mean;
    est.std[area] = std::sqrt(ss / (count - 1.0));
    est.sample_count[area] = values.size();
  }
  return est;
}

std::vector<double> robust_gain(const AttackEstimate& est, const ConfidenceSpec& conf) {
  if (est.mean.size() != est.std.size()) throw ContractError("estimate moment sizes differ");
  const double k = conf.k_eta();
  std::vector<double> out(est.mean.size());
  for (std::size_t n = 0; n < out.size(); ++n) {
    if (est.std[n] < 0.0) throw ContractError("negative standard deviation");
    out[n] = est.mean[n] + k * est.std[n];
  }
  return out;
}

std::vector<double> worst_case_gain(const SystemModel& model,
                                    const std::vector<AreaIndex>& attack_areas,
                                    const std::vector<double>& static_component) {
  if (!(model.omega_max > 0.0)) throw ContractError("omega_max must be positive");
  const std::size_t n = model.areas();
  std::vector<double> out(n, 0.0);
  for (AreaIndex a : attack_areas) {
    if (a >= n) throw ContractError("attack area out of range");
    const double eps = static_component.empty() ? 0.0 : static_component.at(a);
    out[a] = std::max(0.0, (model.vulnerable_load[a] - eps) / (2.0 * model.omega_max));
  }
  return out;
}

std::vector<double> clamp_to_budget(const std::vector<double>& gains,
                                    const std::vector<double>& budget,
                                    std::vector<std::string>* warnings) {
  if (gains.size() != budget.size()) throw ContractError("gain/budget sizes differ");
  std::vector<double> out = gains;
  for (std::size_t n = 0; n < out.size(); ++n) {
    if (out[n] > budget[n]) {
      if (warnings) {
        std::ostringstream os;
        os << "area " << n << ": gain " << out[n] << " exceeds the attack budget " << budget[n]
           << "; clamped";
        warnings->push_back(os.str());
      }
      out[n] = budget[n];
    }
  }
  return out;
}

}  // namespace cred
