#include <doctest.h>

#include <cmath>
#include <random>

#include "cred/error.hpp"
#include "cred/simulation.hpp"
#include "cred/stability.hpp"
#include "oracles.hpp"

using namespace cred;

namespace {

// exp(S t) for a 2x2 matrix with eigenvalues alpha +/- i beta, beta > 0.
Eigen::Matrix2d expm_2x2(const Eigen::Matrix2d& s, double t) {
  const double alpha = 0.5 * s.trace();
  const double det = s.determinant();
  const double beta = std::sqrt(det - alpha * alpha);
  const Eigen::Matrix2d shifted = s - alpha * Eigen::Matrix2d::Identity();
  return std::exp(alpha * t) * (std::cos(beta * t) * Eigen::Matrix2d::Identity() + std::sin(beta * t) / beta * shifted);
}

StateSpace one_area_at(double k_lc) { return build_state_space_at(oracle::one_area(), 0, k_lc); }

}  // namespace

TEST_CASE("RK4 tracks the closed-form one-area step response") {
  const StateSpace ss = one_area_at(0.0);
  const StepDisturbance step{{0.2}, 1.0};
  const Trajectory tr = simulate(ss, step, 8.0, 0.001);
  REQUIRE_FALSE(tr.diverged);
  // Pre-step: delta = -P / K^I with secure load 1.
  CHECK(tr.equilibrium_pre(0) == doctest::Approx(-1.0 / 5.0));
  CHECK(tr.equilibrium_post(0) == doctest::Approx(-1.2 / 5.0));
  CHECK(tr.equilibrium_post(1) == doctest::Approx(0.0).epsilon(1e-12));
  const Eigen::Matrix2d s = ss.state_matrix;
  const Eigen::Vector2d x_post = tr.equilibrium_post;
  const Eigen::Vector2d x_pre = tr.equilibrium_pre;
  double worst = 0.0;
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const double t = tr.times[k];
    const Eigen::Vector2d ref = t < 1.0 ? x_pre : Eigen::Vector2d(x_post + expm_2x2(s, t - 1.0) * (x_pre - x_post));
    worst = std::max(worst, (tr.states[k] - ref).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-8);
  // More load pulls frequency down first.
  double min_omega = 0.0;
  for (std::size_t k = 0; k < tr.times.size(); ++k) min_omega = std::min(min_omega, tr.omega(k, 0));
  CHECK(min_omega < 0.0);
}

TEST_CASE("equilibria solve S x + r = 0 on coupled systems") {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 10; ++k) {
    const SystemModel m = oracle::random_model(rng, 3);
    const StateSpace ss = build_state_space_at(m, 1, 1.0);
    const double dt = std::min(0.01, max_stable_step(ss));
    StepDisturbance step{{0.0, 0.05, 0.0}, 0.5};
    const Trajectory tr = simulate(ss, step, 1.0, dt);
    Eigen::VectorXd r = ss.forcing_rate();
    CHECK((ss.state_matrix * tr.equilibrium_pre + r).norm() < 1e-9);
    // The disturbance lands in the forcing of area 1 only.
    r(4) += 0.05 / ss.descriptor_a(4, 4);
    CHECK((ss.state_matrix * tr.equilibrium_post + r).norm() < 1e-9);
    // Frequencies agree across areas at steady state.
    CHECK(std::abs(tr.equilibrium_post(3) - tr.equilibrium_post(5)) < 1e-9);
  }
}

TEST_CASE("step size guard and horizon are enforced") {
  const StateSpace ss = one_area_at(0.0);
  const double h = max_stable_step(ss);
  CHECK(h == doctest::Approx(1.0 / (10.0 * std::sqrt(5.0))));
  CHECK_THROWS_AS(simulate(ss, {{0.1}, 1.0}, 5.0, 1.01 * h), ContractError);
  CHECK_NOTHROW(simulate(ss, {{0.1}, 1.0}, 5.0, h));
  CHECK_THROWS_AS(simulate(ss, {{0.1}, 1.0}, 1.0, 0.01), ContractError);
  CHECK_THROWS_AS(simulate(ss, {{0.1, 0.2}, 1.0}, 5.0, 0.01), ContractError);
  CHECK_THROWS_AS(simulate(ss, {{0.1}, 1.0}, 5.0, 0.0), ContractError);
}

TEST_CASE("classification follows the sign of the dominant real part") {
  struct Case {
    double k_lc;
    TrajectoryClass expect;
  };
  for (const Case& c : {Case{1.8, TrajectoryClass::kDecaying}, Case{2.2, TrajectoryClass::kGrowing},
                        Case{2.0, TrajectoryClass::kMarginal}}) {
    const StateSpace ss = one_area_at(c.k_lc);
    const Trajectory tr = simulate(ss, {{0.05}, 1.0}, 30.0, 0.005);
    const Classification cl = classify_trajectory(tr);
    CHECK(cl.verdict == c.expect);
    // Peak envelope grows like exp(Re lambda t), Re lambda = (k - 2) / 2.
    CHECK(cl.rate == doctest::Approx((c.k_lc - 2.0) / 2.0).epsilon(1e-3).scale(1.0));
    CHECK(cl.peaks >= 3);
  }
}

TEST_CASE("runaway trajectories stop early and count as growing") {
  const StateSpace ss = one_area_at(6.0);
  const Trajectory tr = simulate(ss, {{1.0}, 0.5}, 200.0, 0.005);
  CHECK(tr.diverged);
  CHECK(tr.times.back() < 200.0);
  CHECK(classify_trajectory(tr).verdict == TrajectoryClass::kGrowing);
}

TEST_CASE("overdamped response has too few peaks to classify") {
  // K^P + D = 10, K^I = 5: two real modes.
  const SystemModel m = oracle::one_area(1.0, 5.0, 9.5, 0.5);
  const StateSpace ss = build_state_space_at(m, 0, 0.0);
  const Trajectory tr = simulate(ss, {{0.1}, 1.0}, 20.0, 0.005);
  CHECK_THROWS_AS(classify_trajectory(tr), NumericalError);
}

TEST_CASE("disturbance description is readable") {
  const StepDisturbance s{{0.0, 0.01}, 2.0};
  CHECK(s.describe().find("2") != std::string::npos);
}
