#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "cred/grid_model.hpp"

namespace cred {

using Complex = std::complex<double>;

// Full spectrum of the pencil (lambda (-A) - B) with left and right
// eigenvectors, ordered by (Re, Im) ascending.
//
// Right vectors z_i have unit 2-norm. Left vectors y_i are scaled so that
// y_i^T (-A) z_i = 1, which makes the first-order perturbation of lambda_i
// under a change dB read simply y_i^T dB z_i.
struct EigenSolution {
  std::vector<Complex> eigenvalues;
  Eigen::MatrixXcd right_vectors;
  Eigen::MatrixXcd left_vectors;
  // Reciprocal condition estimate of the right-vector matrix. Near zero when
  // the matrix is defective and the left vectors are meaningless.
  double vector_rcond = 0.0;

  std::size_t size() const { return eigenvalues.size(); }
};

struct SensitivityRecord {
  std::size_t eigen_index = 0;
  AreaIndex area = 0;
  Complex d_lambda_dKL;
  Complex d_lambda_dKC;  // always exactly -d_lambda_dKL
};

struct StabilityVerdict {
  bool stable = true;
  double max_real = 0.0;  // over the non-excluded eigenvalues
  std::vector<std::size_t> offending;  // indices with Re >= -margin
  std::vector<std::size_t> excluded_zero_modes;
};

// Eigenvalues closer than this are treated as repeated.
inline constexpr double kRepeatedEigenTolerance = 1e-6;

EigenSolution eigen_decompose(const StateSpace& ss);

// d lambda_i / d K^L_nn at the operating point of `ss`. Throws
// DegenerateEigenvalueError when lambda_i is repeated.
SensitivityRecord sensitivity(const StateSpace& ss, const EigenSolution& eig, std::size_t i,
                              AreaIndex n);

// All (i, n) records of a decomposition, row-major in i.
std::vector<SensitivityRecord> all_sensitivities(const StateSpace& ss, const EigenSolution& eig);

// Stable iff every eigenvalue has Re < -margin. Eigenvalues sitting at the
// origin (the angle-reference mode that appears when some K^I is zero) are
// excluded and reported separately.
StabilityVerdict is_stable(const EigenSolution& eig, double margin = 0.0);

// First-order spectrum estimate
//   lambda_hat_i = lambda0_i + sum_n dKL_in K^L_nn + sum_n dKC_in K^C_nn.
// Every area with a nonzero gain must have a record for every eigenvalue.
std::vector<Complex> estimate_eigenvalue_first_order(const EigenSolution& eig,
                                                     const std::vector<SensitivityRecord>& sens,
                                                     const AttackProfile& attack,
                                                     const DroopSchedule& droop);

// Distance from lambda_i to the nearest other eigenvalue (infinity if alone).
double eigen_gap(const EigenSolution& eig, std::size_t i);

}  // namespace cred
