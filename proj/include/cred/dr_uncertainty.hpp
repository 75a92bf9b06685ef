#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "cred/grid_model.hpp"

namespace cred {

// Two-moment description of the estimated attack gain per area. Areas are
// independent; no cross-covariance is carried.
struct AttackEstimate {
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<std::size_t> sample_count;
};

// Confidence level eta, strictly inside (0, 1).
class ConfidenceSpec {
 public:
  explicit ConfidenceSpec(double eta);
  double eta() const { return eta_; }
  // k_eta = sqrt(eta / (1 - eta)).
  double k_eta() const;

 private:
  double eta_;
};

inline constexpr double kDefaultEta = 0.95;

// Sample mean and (n - 1) standard deviation per area. Areas absent from the
// map get zero moments and zero count; present areas need at least 2 samples.
AttackEstimate moments_from_samples(const std::map<AreaIndex, std::vector<double>>& samples,
                                    std::size_t areas);

// mean + k_eta * std, per area.
std::vector<double> robust_gain(const AttackEstimate& est, const ConfidenceSpec& conf);

// Budget-saturating gain (P^LV_n - eps^L_n) / (2 omega_max) for attacked
// areas, zero elsewhere (and never negative).
std::vector<double> worst_case_gain(const SystemModel& model,
                                    const std::vector<AreaIndex>& attack_areas,
                                    const std::vector<double>& static_component = {});

// Caps gains at the physical budget and appends a warning line per clamped area.
std::vector<double> clamp_to_budget(const std::vector<double>& gains,
                                    const std::vector<double>& budget,
                                    std::vector<std::string>* warnings);

}  // namespace cred
