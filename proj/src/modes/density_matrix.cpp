#include "phtomo/modes/density_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "phtomo/errors.hpp"

namespace phtomo {

TemporalModeFunction::TemporalModeFunction(TimeGrid grid, CVector amplitudes)
    : grid_(grid), amplitudes_(std::move(amplitudes)) {
  if (static_cast<std::size_t>(amplitudes_.size()) != grid_.bin_count()) {
    throw InvalidInput("TemporalModeFunction: amplitude count does not match grid");
  }
  const double norm2 = amplitudes_.squaredNorm();
  if (!(std::abs(norm2 - 1.0) <= kNormTolerance)) {
    std::ostringstream msg;
    msg << "TemporalModeFunction: squared norm " << norm2 << " is not 1";
    throw InvalidInput(msg.str());
  }
}

TemporalModeFunction TemporalModeFunction::normalized(TimeGrid grid, CVector raw) {
  const double norm = raw.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw InvalidInput("TemporalModeFunction: cannot normalize a zero or non-finite vector");
  }
  raw /= norm;
  return TemporalModeFunction(grid, std::move(raw));
}

std::string DensityCheck::describe() const {
  std::ostringstream out;
  out << "hermitian_error=" << hermitian_error << " min_eigenvalue=" << min_eigenvalue
      << " max_eigenvalue=" << max_eigenvalue << " trace=" << trace;
  return out.str();
}

DensityCheck check_density_matrix(const CMatrix& m) {
  DensityCheck check;
  if (m.rows() != m.cols() || m.rows() == 0) return check;
  check.hermitian_error = (m - m.adjoint()).cwiseAbs().maxCoeff();
  check.hermitian = check.hermitian_error <= kHermitianTolerance;
  check.trace = m.trace().real();
  check.unit_trace = std::abs(check.trace - 1.0) <= kTraceTolerance &&
                     std::abs(m.trace().imag()) <= kTraceTolerance;
  const CMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h, Eigen::EigenvaluesOnly);
  check.min_eigenvalue = solver.eigenvalues().minCoeff();
  check.max_eigenvalue = solver.eigenvalues().maxCoeff();
  check.positive = check.min_eigenvalue >= -kPsdRelativeTolerance * std::max(check.max_eigenvalue, 0.0);
  return check;
}

TemporalDensityMatrix::TemporalDensityMatrix(TimeGrid grid, CMatrix matrix)
    : grid_(grid), matrix_(std::move(matrix)) {
  const auto n = static_cast<Eigen::Index>(grid_.bin_count());
  if (matrix_.rows() != n || matrix_.cols() != n) {
    throw InvalidInput("TemporalDensityMatrix: matrix shape does not match grid");
  }
  const DensityCheck check = check_density_matrix(matrix_);
  if (!check.ok()) {
    throw InvalidInput("TemporalDensityMatrix: invariants violated (" + check.describe() + ")");
  }
}

Eigensystem eigendecompose(const CMatrix& matrix) {
  if (matrix.rows() != matrix.cols() || matrix.rows() == 0) {
    throw InvalidInput("eigendecompose: matrix must be square and nonempty");
  }
  const double herm_err = (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
  if (herm_err > kHermitianTolerance) {
    throw InvalidInput("eigendecompose: matrix is not Hermitian");
  }
  const CMatrix h = 0.5 * (matrix + matrix.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
  if (solver.info() != Eigen::Success) {
    throw InvalidInput("eigendecompose: diagonalization failed");
  }
  const Eigen::Index n = h.rows();
  // Eigen returns ascending order.
  Eigensystem out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  const double lmax = out.eigenvalues(0);
  if (!(lmax > 0.0)) {
    throw InvalidInput("eigendecompose: matrix has no positive eigenvalue");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    double& p = out.eigenvalues(i);
    if (p < 0.0) {
      if (p < -kPsdRelativeTolerance * lmax) {
        throw InvalidInput("eigendecompose: matrix is not positive semidefinite");
      }
      p = 0.0;
    }
  }
  out.eigenvalues /= out.eigenvalues.sum();
  return out;
}

Eigensystem eigendecompose(const TemporalDensityMatrix& rho) { return eigendecompose(rho.matrix()); }

double purity(const TemporalDensityMatrix& rho) {
  // tr(rho^2) = sum |rho_mn|^2 for Hermitian rho.
  return rho.matrix().cwiseAbs2().sum();
}

CMatrix psd_sqrt(const CMatrix& m) {
  const CMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
  const RVector roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return solver.eigenvectors() * roots.asDiagonal() * solver.eigenvectors().adjoint();
}

double uhlmann_fidelity(const TemporalDensityMatrix& a, const TemporalDensityMatrix& b) {
  if (!(a.grid() == b.grid())) {
    throw InvalidInput("uhlmann_fidelity: density matrices live on different grids");
  }
  // tr sqrt(sqrt(a) b sqrt(a)) = || sqrt(a) sqrt(b) ||_1. The trace-norm form
  // keeps round-off eigenvalues of rank-deficient inputs from contributing.
  const CMatrix product = psd_sqrt(a.matrix()) * psd_sqrt(b.matrix());
  Eigen::BDCSVD<CMatrix> svd(product);
  const double f = svd.singularValues().sum();
  return std::clamp(f, 0.0, 1.0);
}

}  // namespace phtomo
