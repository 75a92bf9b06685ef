#include <doctest.h>

#include <random>

#include "cred/error.hpp"
#include "cred/stability.hpp"
#include "oracles.hpp"

using namespace cred;

namespace {

std::vector<oracle::cplx> as_vector(const EigenSolution& e) { return e.eigenvalues; }

// Negative net gains are realised as droop, since only K^L - K^C matters.
EigenSolution spectrum_at(const SystemModel& m, std::vector<double> kl) {
  DroopSchedule droop = DroopSchedule::none(m.areas());
  for (std::size_t a = 0; a < kl.size(); ++a) {
    if (kl[a] < 0.0) {
      droop.droop_gain[a] = -kl[a];
      kl[a] = 0.0;
    }
  }
  return eigen_decompose(build_state_space(m, AttackProfile::from_gains(kl), droop));
}

Complex fd_sensitivity(const SystemModel& m, const std::vector<double>& kl, std::size_t i, AreaIndex n,
                       double h) {
  const Complex target = spectrum_at(m, kl).eigenvalues[i];
  auto nearest = [&](double dk) {
    std::vector<double> k = kl;
    k[n] += dk;
    const EigenSolution e = spectrum_at(m, k);
    Complex best = e.eigenvalues[0];
    for (const Complex& z : e.eigenvalues) {
      if (std::abs(z - target) < std::abs(best - target)) best = z;
    }
    return best;
  };
  return (nearest(h) - nearest(-h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("one-area spectrum is -1 +/- 2i") {
  const EigenSolution e = eigen_decompose(build_state_space_at(oracle::one_area(), 0, 0.0));
  REQUIRE(e.size() == 2);
  CHECK(std::abs(e.eigenvalues[0] - Complex(-1.0, -2.0)) < 1e-12);
  CHECK(std::abs(e.eigenvalues[1] - Complex(-1.0, 2.0)) < 1e-12);
}

TEST_CASE("spectra agree with characteristic polynomial roots") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 40; ++k) {
    const std::size_t n = 1 + k % 3;
    const SystemModel m = oracle::random_model(rng, n);
    std::vector<double> kl(n, 0.0);
    kl[k % n] = 5.0 * u(rng);
    const EigenSolution e = eigen_decompose(build_state_space(m, AttackProfile::from_gains(kl), DroopSchedule::none(n)));
    const auto roots = oracle::spectrum(m, kl);
    double scale = 1.0;
    for (const auto& r : roots) scale = std::max(scale, std::abs(r));
    CHECK(oracle::multiset_distance(as_vector(e), roots) < 1e-7 * scale);
  }
}

TEST_CASE("eigenpairs satisfy the pencil and the left normalization") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 10; ++k) {
    const SystemModel m = oracle::random_model(rng, 3);
    const StateSpace ss = build_state_space_at(m, 1, 2.0);
    const EigenSolution e = eigen_decompose(ss);
    const Eigen::MatrixXcd a = ss.descriptor_a.cast<Complex>();
    const Eigen::MatrixXcd b = ss.feedback_b.cast<Complex>();
    for (std::size_t i = 0; i < e.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const Eigen::VectorXcd z = e.right_vectors.col(ii);
      const Eigen::VectorXcd y = e.left_vectors.col(ii);
      CHECK(std::abs(z.norm() - 1.0) < 1e-10);
      CHECK((e.eigenvalues[i] * a * z - b * z).norm() < 1e-8);
      CHECK((e.eigenvalues[i] * y.transpose() * a - y.transpose() * b).norm() < 1e-8 * std::max(1.0, y.norm()));
      CHECK(std::abs(Complex(y.transpose() * a * z) - Complex(1.0, 0.0)) < 1e-9);
    }
    for (std::size_t i = 1; i < e.size(); ++i) {
      const bool ordered = e.eigenvalues[i - 1].real() < e.eigenvalues[i].real() ||
                           (e.eigenvalues[i - 1].real() == e.eigenvalues[i].real() &&
                            e.eigenvalues[i - 1].imag() <= e.eigenvalues[i].imag());
      CHECK(ordered);
    }
  }
}

TEST_CASE("one-area sensitivity from implicit differentiation") {
  // M s^2 + (K^P + D - K^L) s + K^I = 0  =>  ds/dK^L = s / (2 M s + K^P + D)
  const StateSpace ss = build_state_space_at(oracle::one_area(), 0, 0.0);
  const EigenSolution e = eigen_decompose(ss);
  const Complex s = e.eigenvalues[1];
  const Complex implicit = s / (2.0 * s + 2.0);
  const SensitivityRecord r = sensitivity(ss, e, 1, 0);
  CHECK(std::abs(r.d_lambda_dKL - Complex(0.5, 0.25)) < 1e-12);
  CHECK(std::abs(r.d_lambda_dKL - implicit) < 1e-12);
  CHECK(r.d_lambda_dKC == -r.d_lambda_dKL);
}

TEST_CASE("sensitivities match central differences") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 15; ++k) {
    const std::size_t n = 2 + k % 2;
    const SystemModel m = oracle::random_model(rng, n);
    std::vector<double> kl(n, 0.0);
    kl[0] = 3.0 * u(rng);
    const StateSpace ss = build_state_space(m, AttackProfile::from_gains(kl), DroopSchedule::none(n));
    const EigenSolution e = eigen_decompose(ss);
    for (const SensitivityRecord& r : all_sensitivities(ss, e)) {
      const Complex fd = fd_sensitivity(m, kl, r.eigen_index, r.area, 1e-5);
      CHECK(std::abs(fd - r.d_lambda_dKL) <= 1e-4 * std::max(1e-3, std::abs(r.d_lambda_dKL)) + 1e-7);
    }
  }
}

TEST_CASE("repeated eigenvalue has no sensitivity") {
  // (K^P + D)^2 = 4 M K^I gives a double root at -1.
  const SystemModel m = oracle::one_area(1.0, 1.0, 1.5, 0.5);
  const StateSpace ss = build_state_space_at(m, 0, 0.0);
  const EigenSolution e = eigen_decompose(ss);
  CHECK(eigen_gap(e, 0) < kRepeatedEigenTolerance);
  CHECK_THROWS_AS(sensitivity(ss, e, 0, 0), DegenerateEigenvalueError);
}

TEST_CASE("stability verdict honours the margin and excludes the angle mode") {
  const EigenSolution e = eigen_decompose(build_state_space_at(oracle::one_area(), 0, 0.0));
  CHECK(is_stable(e).stable);
  CHECK(is_stable(e, 0.99).stable);
  CHECK_FALSE(is_stable(e, 1.0).stable);
  CHECK(is_stable(e).max_real == doctest::Approx(-1.0));
  CHECK_THROWS_AS(is_stable(e, -0.1), ContractError);

  const EigenSolution up = eigen_decompose(build_state_space_at(oracle::one_area(), 0, 2.5));
  const StabilityVerdict v = is_stable(up);
  CHECK_FALSE(v.stable);
  CHECK(v.offending.size() == 2);

  SystemModel no_integral = oracle::one_area(1.0, 0.0);
  const StabilityVerdict z = is_stable(eigen_decompose(build_state_space_at(no_integral, 0, 0.0)));
  CHECK(z.stable);
  CHECK(z.excluded_zero_modes.size() == 1);
}

TEST_CASE("first-order estimate is exact for the one-area real part") {
  const SystemModel m = oracle::one_area();
  const StateSpace ss = build_state_space_at(m, 0, 0.0);
  const EigenSolution e = eigen_decompose(ss);
  const auto sens = all_sensitivities(ss, e);
  for (double g : {0.5, 1.0, 2.5}) {
    DroopSchedule droop = DroopSchedule::none(1);
    droop.droop_gain = {0.3};
    const auto est = estimate_eigenvalue_first_order(e, sens, AttackProfile::from_gains({g}), droop);
    const auto exact = oracle::spectrum(m, {g}, {0.3});
    CHECK(est[1].real() == doctest::Approx(oracle::max_real(exact)).epsilon(1e-12));
  }
}

TEST_CASE("destabilisation threshold K^L > K^P + D + K^C") {
  const SystemModel m = oracle::one_area();
  for (int k = 0; k < 50; ++k) {
    const double kc = 0.1 * k;
    for (double off : {-1e-3, 1e-3}) {
      const double kl = 2.0 + kc + off;
      AttackProfile atk = AttackProfile::from_gains({kl});
      DroopSchedule d = DroopSchedule::none(1);
      d.droop_gain = {kc};
      const bool stable = is_stable(eigen_decompose(build_state_space(m, atk, d))).stable;
      CHECK(stable == (off < 0.0));
      CHECK(stable == (oracle::max_real(oracle::spectrum(m, {kl}, {kc})) < 0.0));
    }
  }
}
