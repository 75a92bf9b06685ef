#pragma once

#include <cstddef>
#include <vector>

#include "cred/grid_model.hpp"
#include "cred/stability.hpp"

namespace cred {

struct LinearizationPoint {
  double abscissa = 0.0;  // K^{L-C}_nn at which the eigenvalue was re-linearised
  Complex eigenvalue;
  Complex slope;          // d lambda / d K^L_nn at that abscissa
};

// One visited grid abscissa of the construction sweep.
struct SweepAuditEntry {
  double abscissa = 0.0;
  Complex true_eigenvalue;
  Complex estimate;       // from the anchoring linearization point
  double error = 0.0;     // |Re(true) - Re(estimate)|
  std::size_t segment = 0;
};

// Piecewise-linear model of one eigenvalue as a function of the net gain
// K^{L-C} in one area, all other areas held at zero.
//
// Point m anchors the interval that starts at its abscissa (inclusive) and
// extends away from zero up to the next point (exclusive); the last interval
// is closed at range_end.
struct SegmentTable {
  std::size_t eigen_index = 0;
  AreaIndex area = 0;
  std::vector<LinearizationPoint> points;
  double range_end = 0.0;
  Complex base_eigenvalue;
  double tolerance = 0.0;  // eps_lim
  double step = 0.0;       // eps_phi
  std::vector<SweepAuditEntry> audit;
  double max_error = 0.0;

  double direction() const { return range_end < 0.0 ? -1.0 : 1.0; }
  // Index of the segment whose interval contains k_lc. No range check.
  std::size_t segment_of(double k_lc) const;
};

struct LinearizationOptions {
  // Continuity gate for eigenvalue tracking between grid steps is
  // gate_slope_factor * eps_phi * |slope| + gate_offset.
  double gate_slope_factor = 10.0;
  double gate_offset = 0.1;
};

inline constexpr double kDefaultEpsLim = 0.02;
inline constexpr double kDefaultStepDivisions = 200.0;

// Recursive linearization sweep of eigenvalue `i` (ordering of the base
// system) in area `n` from 0 toward `range_end` with fixed step `eps_phi`.
SegmentTable build_segment_table(const SystemModel& model, std::size_t i, AreaIndex n,
                                 double range_end, double eps_lim, double eps_phi,
                                 const LinearizationOptions& opts = {});

// Eigenvalue shift F_n(k_lc) relative to the base eigenvalue. Throws
// RangeError outside [min(0, range_end), max(0, range_end)].
Complex evaluate_piecewise(const SegmentTable& table, double k_lc);

struct CriticalPair {
  std::size_t eigen_index = 0;
  AreaIndex area = 0;
  friend bool operator==(const CriticalPair&, const CriticalPair&) = default;
};

// Eigenvalue/area pairs whose first-order real-part shift over [0, range_end_n]
// can reach -Re(lambda0_i) - screening_margin. One member of each conjugate
// pair (the one with Im >= 0) is kept.
std::vector<CriticalPair> select_critical_pairs(const SystemModel& model,
                                                const std::vector<AreaIndex>& attack_areas,
                                                const std::vector<double>& range_end,
                                                double screening_margin);

}  // namespace cred
