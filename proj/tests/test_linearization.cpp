#include <doctest.h>

#include <algorithm>

#include "cred/error.hpp"
#include "cred/linearization.hpp"
#include "oracles.hpp"

using namespace cred;

namespace {

SystemModel curved_two_area() {
  SystemModel m = SystemModel::zeros(2);
  m.inertia_sg = {2.0, 3.0};
  m.damping = {1.0, 1.0};
  m.gov_integral = {4.0, 6.0};
  m.gov_proportional = {3.0, 4.0};
  m.susceptance << 0.0, 5.0, 5.0, 0.0;
  m.secure_load = {1.0, 1.0};
  m.vulnerable_load = {1.0, 1.0};
  m.ibr_max_power = {1.0, 1.0};
  m.omega_max = 0.05;
  return m;
}

// Largest |Re| gap between the piecewise model and an independently tracked
// exact eigenvalue over a grid of `count` abscissae.
double resweep_error(const SystemModel& m, const SegmentTable& t, std::size_t count) {
  oracle::cplx prev = t.base_eigenvalue;
  double worst = 0.0;
  for (std::size_t l = 0; l <= count; ++l) {
    const double k = t.range_end * static_cast<double>(l) / static_cast<double>(count);
    std::vector<double> kl(m.areas(), 0.0), kc(m.areas(), 0.0);
    (k >= 0.0 ? kl : kc)[t.area] = std::abs(k);
    const auto roots = oracle::spectrum(m, kl, kc);
    const auto it = std::min_element(roots.begin(), roots.end(), [&](auto a, auto b) {
      return std::abs(a - prev) < std::abs(b - prev);
    });
    prev = *it;
    const Complex est = t.base_eigenvalue + evaluate_piecewise(t, k);
    worst = std::max(worst, std::abs(est.real() - prev.real()));
  }
  return worst;
}

}  // namespace

TEST_CASE("exactly linear one-area real part needs a single point") {
  const SystemModel m = oracle::one_area();
  const SegmentTable t = build_segment_table(m, 1, 0, 3.0, 0.02, 3.0 / 200.0);
  CHECK(t.points.size() == 1);
  CHECK(t.max_error < 1e-12);
  CHECK(t.audit.size() == 201);
  CHECK(std::abs(t.points[0].slope - Complex(0.5, 0.25)) < 1e-12);
  CHECK(evaluate_piecewise(t, 2.0).real() == doctest::Approx(1.0));
}

TEST_CASE("curved two-area sweep keeps every grid abscissa within eps_lim") {
  const SystemModel m = curved_two_area();
  const auto eig = eigen_decompose(build_state_space_at(m, 0, 0.0));
  std::size_t tables = 0;
  for (std::size_t i = 0; i < eig.size(); ++i) {
    if (eig.eigenvalues[i].imag() < 0.0) continue;
    const double range = 12.0;
    const SegmentTable t = build_segment_table(m, i, 0, range, 0.02, range / 200.0);
    ++tables;
    CHECK(t.max_error <= 0.02);
    for (const auto& a : t.audit) CHECK(a.error <= 0.02);
    CHECK(resweep_error(m, t, 200) <= 0.02 + 1e-9);
    // Abscissae strictly increase away from zero.
    for (std::size_t k = 1; k < t.points.size(); ++k) CHECK(t.points[k].abscissa > t.points[k - 1].abscissa);
  }
  CHECK(tables == 2);
  const SegmentTable crit = build_segment_table(m, eig.size() - 1, 0, 12.0, 0.02, 0.06);
  CHECK(crit.points.size() > 1);
}

TEST_CASE("tighter tolerance never needs fewer points") {
  const SystemModel m = curved_two_area();
  const std::size_t i = 3;
  std::size_t prev = 0;
  for (double eps : {0.1, 0.05, 0.02, 0.01, 0.005}) {
    const SegmentTable t = build_segment_table(m, i, 0, 12.0, eps, 0.06);
    CHECK(t.points.size() >= prev);
    prev = t.points.size();
  }
}

TEST_CASE("negative sweep direction mirrors the segment lookup") {
  const SystemModel m = curved_two_area();
  // Droop past about 5 p.u. splits this pair into two real modes; stop short
  // of the branch point so nearest-neighbour tracking stays unambiguous.
  const SegmentTable t = build_segment_table(m, 3, 1, -4.0, 0.01, 0.02);
  CHECK(t.direction() == -1.0);
  CHECK(t.points.size() > 1);
  for (std::size_t k = 1; k < t.points.size(); ++k) {
    CHECK(t.segment_of(t.points[k].abscissa) == k);
    CHECK(t.segment_of(t.points[k].abscissa + 1e-9) == k - 1);
  }
  CHECK(resweep_error(m, t, 200) <= 0.01 + 1e-9);
}

TEST_CASE("piecewise evaluation is continuous at zero and checks its range") {
  const SegmentTable t = build_segment_table(oracle::one_area(), 1, 0, 3.0, 0.02, 0.015);
  CHECK(std::abs(evaluate_piecewise(t, 0.0)) < 1e-15);
  CHECK_THROWS_AS(evaluate_piecewise(t, -0.1), RangeError);
  CHECK_THROWS_AS(evaluate_piecewise(t, 3.1), RangeError);
  CHECK_NOTHROW(evaluate_piecewise(t, 3.0));
}

TEST_CASE("sweep rejects malformed arguments") {
  const SystemModel m = oracle::one_area();
  CHECK_THROWS_AS(build_segment_table(m, 1, 0, 3.0, 0.0, 0.01), ContractError);
  CHECK_THROWS_AS(build_segment_table(m, 1, 0, 0.0, 0.02, 0.01), ContractError);
  CHECK_THROWS_AS(build_segment_table(m, 1, 0, 3.0, 0.02, 1.0), ContractError);
  CHECK_THROWS_AS(build_segment_table(m, 1, 2, 3.0, 0.02, 0.01), ContractError);
  CHECK_THROWS_AS(build_segment_table(m, 7, 0, 3.0, 0.02, 0.01), ContractError);
}

TEST_CASE("critical pair screening keeps the upper conjugate only") {
  const SystemModel m = curved_two_area();
  const auto all = select_critical_pairs(m, {0, 1}, {12.0, 12.0}, 1e9);
  const auto eig = eigen_decompose(build_state_space_at(m, 0, 0.0));
  for (const auto& p : all) CHECK(eig.eigenvalues[p.eigen_index].imag() >= 0.0);
  CHECK(all.size() == 4);
  CHECK(select_critical_pairs(m, {0}, {0.0, 12.0}, 1e9).empty());
  // A tiny range cannot push anything near the axis.
  CHECK(select_critical_pairs(m, {0}, {0.01, 0.0}, 0.0).empty());
}
