#include "cred/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <utility>

#include <Eigen/Eigenvalues>

#include "cred/error.hpp"

namespace cred {

EigenSolution eigen_decompose(const StateSpace& ss) {
  const Eigen::MatrixXd& s = ss.state_matrix;
  if (!s.allFinite()) throw NumericalError("state matrix has non-finite entries");
  const Eigen::Index dim = s.rows();

  Eigen::EigenSolver<Eigen::MatrixXd> solver(s, /*computeEigenvectors=*/true);
  if (solver.info() != Eigen::Success) {
    std::ostringstream os;
    os << "QR iteration failed to converge on a " << dim << "x" << dim
       << " state matrix (norm " << s.norm() << ")";
    throw NumericalError(os.str());
  }

  const Eigen::VectorXcd values = solver.eigenvalues();
  const Eigen::MatrixXcd vectors = solver.eigenvectors();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(dim));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (values(a).real() != values(b).real()) return values(a).real() < values(b).real();
    return values(a).imag() < values(b).imag();
  });

  EigenSolution eig;
  eig.eigenvalues.resize(static_cast<std::size_t>(dim));
  eig.right_vectors.resize(dim, dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    eig.eigenvalues[static_cast<std::size_t>(k)] = values(order[static_cast<std::size_t>(k)]);
    Eigen::VectorXcd z = vectors.col(order[static_cast<std::size_t>(k)]);
    const double norm = z.norm();
    if (norm > 0.0) z /= norm;
    eig.right_vectors.col(k) = z;
  }

  // Rows of Z^{-1} are left eigenvectors w_i of S with w_i^T z_i = 1. For the
  // pencil, y_i^T (-A) = w_i^T, i.e. y_i = (-A)^{-T} w_i.
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(eig.right_vectors);
  eig.vector_rcond = lu.rcond();
  Eigen::MatrixXcd w = lu.inverse();
  Eigen::MatrixXcd y = w.transpose();
  for (Eigen::Index r = 0; r < dim; ++r) {
    y.row(r) /= Complex(ss.descriptor_a(r, r), 0.0);
  }
  eig.left_vectors = y;
  return eig;
}

double eigen_gap(const EigenSolution& eig, std::size_t i) {
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < eig.size(); ++j) {
    if (j != i) gap = std::min(gap, std::abs(eig.eigenvalues[j] - eig.eigenvalues[i]));
  }
  return gap;
}

SensitivityRecord sensitivity(const StateSpace& ss, const EigenSolution& eig, std::size_t i,
                              AreaIndex n) {
  if (i >= eig.size()) throw ContractError("eigen index out of range");
  if (n >= ss.areas) throw ContractError("area index out of range");
  const Complex lambda = eig.eigenvalues[i];
  const double tol = kRepeatedEigenTolerance * std::max(1.0, std::abs(lambda));
  if (eigen_gap(eig, i) < tol) {
    std::ostringstream os;
    os << "eigenvalue " << i << " (" << lambda.real() << (lambda.imag() < 0 ? "" : "+")
       << lambda.imag() << "i) is repeated; its sensitivity is undefined";
    throw DegenerateEigenvalueError(os.str());
  }
  // dB/dK^L_nn is -1 at (N+n, N+n) and dA/dK^L_nn = 0, so
  //   d lambda = y^T dB z = -y_{N+n} z_{N+n}.
  const auto row = static_cast<Eigen::Index>(ss.areas + n);
  const auto col = static_cast<Eigen::Index>(i);
  SensitivityRecord rec;
  rec.eigen_index = i;
  rec.area = n;
  rec.d_lambda_dKL = -eig.left_vectors(row, col) * eig.right_vectors(row, col);
  rec.d_lambda_dKC = -rec.d_lambda_dKL;
  return rec;
}

std::vector<SensitivityRecord> all_sensitivities(const StateSpace& ss, const EigenSolution& eig) {
  std::vector<SensitivityRecord> out;
  out.reserve(eig.size() * ss.areas);
  for (std::size_t i = 0; i < eig.size(); ++i) {
    for (AreaIndex n = 0; n < ss.areas; ++n) out.push_back(sensitivity(ss, eig, i, n));
  }
  return out;
}

StabilityVerdict is_stable(const EigenSolution& eig, double margin) {
  if (margin < 0.0) throw ContractError("stability margin must be non-negative");
  double scale = 1.0;
  for (const Complex& l : eig.eigenvalues) scale = std::max(scale, std::abs(l));
  const double zero_tol = 1e-9 * scale;

  StabilityVerdict v;
  v.max_real = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < eig.size(); ++i) {
    const Complex l = eig.eigenvalues[i];
    if (std::abs(l) <= zero_tol) {
      v.excluded_zero_modes.push_back(i);
      continue;
    }
    v.max_real = std::max(v.max_real, l.real());
    if (!(l.real() < -margin)) v.offending.push_back(i);
  }
  v.stable = v.offending.empty();
  return v;
}

std::vector<Complex> estimate_eigenvalue_first_order(const EigenSolution& eig,
                                                     const std::vector<SensitivityRecord>& sens,
                                                     const AttackProfile& attack,
                                                     const DroopSchedule& droop) {
  std::map<std::pair<std::size_t, AreaIndex>, const SensitivityRecord*> lookup;
  for (const auto& rec : sens) lookup[{rec.eigen_index, rec.area}] = &rec;

  const std::size_t areas = attack.dyn_gain.size();
  if (droop.droop_gain.size() != areas) throw ContractError("attack/droop area counts differ");

  std::vector<Complex> estimate = eig.eigenvalues;
  for (std::size_t i = 0; i < eig.size(); ++i) {
    for (AreaIndex n = 0; n < areas; ++n) {
      const double kl = attack.dyn_gain[n];
      const double kc = droop.droop_gain[n];
      if (kl == 0.0 && kc == 0.0) continue;
      auto it = lookup.find({i, n});
      if (it == lookup.end()) {
        std::ostringstream os;
        os << "missing sensitivity record for eigenvalue " << i << ", area " << n;
        throw ContractError(os.str());
      }
      estimate[i] += it->second->d_lambda_dKL * kl + it->second->d_lambda_dKC * kc;
    }
  }
  return estimate;
}

}  // namespace cred
