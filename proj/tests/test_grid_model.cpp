#include <doctest.h>

#include <random>

#include "cred/error.hpp"
#include "cred/grid_model.hpp"
#include "oracles.hpp"

using namespace cred;

TEST_CASE("laplacian rows sum to zero and stay symmetric") {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 20; ++k) {
    const SystemModel m = oracle::random_model(rng, 2 + k % 3);
    const Eigen::MatrixXd lap = m.laplacian();
    CHECK(lap.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
    CHECK((lap - lap.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    // Positive semidefinite with a single zero eigenvalue on a connected graph.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap);
    CHECK(es.eigenvalues()(0) > -1e-10);
    CHECK(std::abs(es.eigenvalues()(0)) < 1e-10);
    CHECK(es.eigenvalues()(1) > 1e-6);
  }
}

TEST_CASE("state matrix matches the written-out swing equations") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 20; ++k) {
    const std::size_t n = 1 + k % 3;
    SystemModel m = oracle::random_model(rng, n);
    std::vector<double> kl(n, 0.0), kc(n, 0.0);
    kl[0] = 3.0;
    kc[n - 1] = 1.25;
    AttackProfile atk = AttackProfile::from_gains(kl);
    DroopSchedule droop = DroopSchedule::none(n);
    droop.droop_gain = kc;
    const StateSpace ss = build_state_space(m, atk, droop);
    const Eigen::MatrixXd ref = oracle::state_matrix(m, kl, kc);
    CHECK((ss.state_matrix - ref).cwiseAbs().maxCoeff() < 1e-12);
    // S = (-A)^{-1} B
    const Eigen::MatrixXd s2 = ss.descriptor_a.inverse() * ss.feedback_b;
    CHECK((ss.state_matrix - s2).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("attack and droop enter only through their difference") {
  const SystemModel m = oracle::one_area();
  const StateSpace a = build_state_space_at(m, 0, 0.7);
  const StateSpace b = build_state_space_at(m, 0, -0.7);
  CHECK(a.state_matrix(1, 1) == doctest::Approx(-(2.0 - 0.7)));
  CHECK(b.state_matrix(1, 1) == doctest::Approx(-(2.0 + 0.7)));
  AttackProfile atk = AttackProfile::from_gains({2.0});
  DroopSchedule droop = DroopSchedule::none(1);
  droop.droop_gain = {1.3};
  const StateSpace c = build_state_space(m, atk, droop);
  const StateSpace d = build_state_space_at(m, 0, 0.7);
  CHECK((c.state_matrix - d.state_matrix).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("forcing combines secure load, static attack and IBR reference") {
  SystemModel m = oracle::one_area(2.0);
  m.secure_load = {0.8};
  AttackProfile atk = AttackProfile::none(1);
  atk.static_component = {0.1};
  atk.attack_areas = {0};
  DroopSchedule droop = DroopSchedule::none(1);
  droop.power_ref = {0.3};
  const StateSpace ss = build_state_space(m, atk, droop);
  CHECK(ss.forcing(1) == doctest::Approx(0.6));
  CHECK(ss.forcing_rate()(1) == doctest::Approx(-0.3));
}

TEST_CASE("model validation names the broken invariant") {
  SystemModel m = oracle::one_area();
  m.inertia_sg = {0.0};
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = oracle::one_area();
  m.damping = {-1.0};
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = oracle::one_area();
  m.omega_max = 0.0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  std::mt19937_64 rng(3);
  m = oracle::random_model(rng, 2);
  m.susceptance(0, 1) = 5.0;
  m.susceptance(1, 0) = 4.0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m = oracle::one_area();
  m.secure_load.clear();
  CHECK_THROWS_AS(m.validate(), ConfigError);
}

TEST_CASE("attack outside its declared set is rejected") {
  AttackProfile a = AttackProfile::none(2);
  a.dyn_gain = {0.0, 1.0};
  CHECK_THROWS_AS(a.validate(2), ConfigError);
  a.attack_areas = {1};
  CHECK_NOTHROW(a.validate(2));
  a.dyn_gain = {0.0, -1.0};
  CHECK_THROWS_AS(a.validate(2), ConfigError);
}

TEST_CASE("attack budget and droop headroom checks") {
  SystemModel m = oracle::one_area();
  m.vulnerable_load = {0.6};
  m.omega_max = 0.1;
  // Budget K^L <= 0.6 / (2 * 0.1) = 3
  CHECK(check_attack_budget(m, AttackProfile::from_gains({3.0}))[0]);
  CHECK_FALSE(check_attack_budget(m, AttackProfile::from_gains({3.01}))[0]);

  m.ibr_max_power = {1.0};
  DroopSchedule d = DroopSchedule::none(1);
  d.power_ref = {0.5};
  d.droop_gain = {5.0};  // swing 0.5
  CHECK(check_droop_capacity(m, d)[0]);
  d.droop_gain = {5.1};
  CHECK_FALSE(check_droop_capacity(m, d)[0]);
  d.power_ref = {0.2};
  d.droop_gain = {2.5};
  CHECK_FALSE(check_droop_capacity(m, d)[0]);
}
