#include "cred/linearization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cred/error.hpp"

namespace cred {
namespace {

struct TrackedEigen {
  std::size_t index;
  Complex value;
};

// Nearest eigenvalue to `previous`; exact ties prefer the upper half plane so
// a conjugate pair never swaps members.
TrackedEigen nearest(const EigenSolution& eig, Complex previous) {
  double min_dist = std::numeric_limits<double>::infinity();
  for (const Complex& l : eig.eigenvalues) min_dist = std::min(min_dist, std::abs(l - previous));
  const double tie = min_dist + 1e-12 * std::max(1.0, std::abs(previous));
  TrackedEigen best{eig.size(), Complex{}};
  for (std::size_t j = 0; j < eig.size(); ++j) {
    if (std::abs(eig.eigenvalues[j] - previous) > tie) continue;
    if (best.index == eig.size() || eig.eigenvalues[j].imag() > best.value.imag()) {
      best = {j, eig.eigenvalues[j]};
    }
  }
  return best;
}

std::string describe(double abscissa, std::size_t i, AreaIndex n) {
  std::ostringstream os;
  os << "eigenvalue " << i << ", area " << n << ", K^{L-C} = " << abscissa;
  return os.str();
}

}  // namespace

std::size_t SegmentTable::segment_of(double k_lc) const {
  const double dir = direction();
  std::size_t seg = 0;
  for (std::size_t m = 1; m < points.size(); ++m) {
    if (dir * points[m].abscissa <= dir * k_lc) seg = m;
  }
  return seg;
}

SegmentTable build_segment_table(const SystemModel& model, std::size_t i, AreaIndex n,
                                 double range_end, double eps_lim, double eps_phi,
                                 const LinearizationOptions& opts) {
  if (!(eps_lim > 0.0)) throw ContractError("eps_lim must be positive");
  if (!(eps_phi > 0.0)) throw ContractError("eps_phi must be positive");
  if (!std::isfinite(range_end) || range_end == 0.0) {
    throw ContractError("range_end must be finite and nonzero");
  }
  if (eps_phi > std::abs(range_end) / 4.0 * (1.0 + 1e-12)) {
    throw ContractError("eps_phi must not exceed |range_end| / 4");
  }
  if (n >= model.areas()) throw ContractError("area index out of range");

  const double dir = range_end < 0.0 ? -1.0 : 1.0;
  const double span = std::abs(range_end);
  const auto steps = static_cast<std::size_t>(std::ceil(span / eps_phi - 1e-9));

  SegmentTable table;
  table.eigen_index = i;
  table.area = n;
  table.range_end = range_end;
  table.tolerance = eps_lim;
  table.step = eps_phi;

  StateSpace base = build_state_space_at(model, n, 0.0);
  EigenSolution base_eig = eigen_decompose(base);
  if (i >= base_eig.size()) throw ContractError("eigen index out of range");
  table.base_eigenvalue = base_eig.eigenvalues[i];
  const SensitivityRecord base_sens = sensitivity(base, base_eig, i, n);
  table.points.push_back({0.0, table.base_eigenvalue, base_sens.d_lambda_dKL});
  table.audit.push_back({0.0, table.base_eigenvalue, table.base_eigenvalue, 0.0, 0});

  Complex previous = table.base_eigenvalue;
  for (std::size_t l = 1; l <= steps; ++l) {
    const double phi = (l == steps) ? range_end : dir * static_cast<double>(l) * eps_phi;
    StateSpace ss = build_state_space_at(model, n, phi);
    EigenSolution eig = eigen_decompose(ss);
    const TrackedEigen tracked = nearest(eig, previous);

    const LinearizationPoint& anchor = table.points.back();
    const double gate = opts.gate_slope_factor * eps_phi * std::abs(anchor.slope) + opts.gate_offset;
    if (std::abs(tracked.value - previous) > gate) {
      throw TrackingError("eigenvalue continuation jumped by " +
                          std::to_string(std::abs(tracked.value - previous)) + " (gate " +
                          std::to_string(gate) + ") at " + describe(phi, i, n));
    }
    const double rep_tol = kRepeatedEigenTolerance * std::max(1.0, std::abs(tracked.value));
    if (eigen_gap(eig, tracked.index) < rep_tol) {
      throw DegenerateEigenvalueError("tracked eigenvalue is repeated at " + describe(phi, i, n));
    }

    const Complex estimate = anchor.eigenvalue + anchor.slope * (phi - anchor.abscissa);
    const double error = std::abs(tracked.value.real() - estimate.real());
    if (error > eps_lim) {
      const SensitivityRecord s = sensitivity(ss, eig, tracked.index, n);
      table.points.push_back({phi, tracked.value, s.d_lambda_dKL});
      table.audit.push_back({phi, tracked.value, tracked.value, 0.0, table.points.size() - 1});
    } else {
      table.audit.push_back({phi, tracked.value, estimate, error, table.points.size() - 1});
      table.max_error = std::max(table.max_error, error);
    }
    previous = tracked.value;
  }
  return table;
}

Complex evaluate_piecewise(const SegmentTable& table, double k_lc) {
  const double lo = std::min(0.0, table.range_end);
  const double hi = std::max(0.0, table.range_end);
  const double slack = 1e-12 * std::max(1.0, std::abs(table.range_end));
  if (!(k_lc >= lo - slack && k_lc <= hi + slack)) {
    std::ostringstream os;
    os << "K^{L-C} = " << k_lc << " lies outside the swept range [" << lo << ", " << hi << "]";
    throw RangeError(os.str());
  }
  const LinearizationPoint& p = table.points[table.segment_of(k_lc)];
  return p.slope * (k_lc - p.abscissa) + (p.eigenvalue - table.base_eigenvalue);
}

std::vector<CriticalPair> select_critical_pairs(const SystemModel& model,
                                                const std::vector<AreaIndex>& attack_areas,
                                                const std::vector<double>& range_end,
                                                double screening_margin) {
  if (range_end.size() != model.areas()) throw ContractError("range_end must have one entry per area");
  StateSpace base = build_state_space(model, AttackProfile::none(model.areas()),
                                      DroopSchedule::none(model.areas()));
  EigenSolution eig = eigen_decompose(base);

  std::vector<AreaIndex> areas = attack_areas;
  std::sort(areas.begin(), areas.end());
  areas.erase(std::unique(areas.begin(), areas.end()), areas.end());

  std::vector<CriticalPair> out;
  for (std::size_t i = 0; i < eig.size(); ++i) {
    const Complex l0 = eig.eigenvalues[i];
    if (l0.imag() < -1e-12 * std::max(1.0, std::abs(l0))) continue;
    for (AreaIndex n : areas) {
      if (n >= model.areas()) throw ContractError("attack area out of range");
      if (range_end[n] == 0.0) continue;
      const SensitivityRecord s = sensitivity(base, eig, i, n);
      const double worst_shift = std::max(0.0, s.d_lambda_dKL.real() * range_end[n]);
      if (worst_shift >= -l0.real() - screening_margin) out.push_back({i, n});
    }
  }
  return out;
}

}  // namespace cred
