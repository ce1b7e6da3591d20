#pragma once

#include <string>
#include <vector>

#include "phtomo/linalg.hpp"
#include "phtomo/modes/time_grid.hpp"

namespace phtomo {

inline constexpr double kNormTolerance = 1e-12;
inline constexpr double kHermitianTolerance = 1e-10;
inline constexpr double kTraceTolerance = 1e-9;
inline constexpr double kPsdRelativeTolerance = 1e-9;

/// Pure temporal mode: amplitudes_j = phi(t_j) * sqrt(bin_width), unit norm.
class TemporalModeFunction {
 public:
  /// Throws InvalidInput if the length mismatches the grid or the norm is
  /// not 1 within kNormTolerance.
  TemporalModeFunction(TimeGrid grid, CVector amplitudes);

  /// Rescales `raw` to unit norm. Throws InvalidInput for a zero vector.
  static TemporalModeFunction normalized(TimeGrid grid, CVector raw);

  const TimeGrid& grid() const { return grid_; }
  const CVector& amplitudes() const { return amplitudes_; }

 private:
  TimeGrid grid_;
  CVector amplitudes_;
};

/// Result of checking a matrix against the density-matrix invariants.
struct DensityCheck {
  bool hermitian = false;
  bool positive = false;
  bool unit_trace = false;
  double hermitian_error = 0.0;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  double trace = 0.0;

  bool ok() const { return hermitian && positive && unit_trace; }
  std::string describe() const;
};

DensityCheck check_density_matrix(const CMatrix& m);

/// Hermitian, positive semidefinite, unit-trace matrix over the time bins.
/// Element (m, n) is rho_mn = phi*(t_m) phi(t_n) for a pure mode phi.
class TemporalDensityMatrix {
 public:
  /// Validates all invariants; throws InvalidInput on violation.
  TemporalDensityMatrix(TimeGrid grid, CMatrix matrix);

  const TimeGrid& grid() const { return grid_; }
  const CMatrix& matrix() const { return matrix_; }
  Eigen::Index size() const { return matrix_.rows(); }

 private:
  TimeGrid grid_;
  CMatrix matrix_;
};

struct Eigensystem {
  RVector eigenvalues;  ///< descending, nonnegative, summing to 1
  CMatrix eigenvectors; ///< column i pairs with eigenvalues(i); rho = sum p_i v_i v_i^dagger
};

/// Diagonalizes a density matrix. Eigenvalues within -1e-9 * lambda_max are
/// clipped to zero and the spectrum renormalized.
Eigensystem eigendecompose(const TemporalDensityMatrix& rho);

/// Same as above for a raw matrix; throws InvalidInput if it is not
/// Hermitian within kHermitianTolerance or has a significantly negative
/// eigenvalue.
Eigensystem eigendecompose(const CMatrix& matrix);

double purity(const TemporalDensityMatrix& rho);

/// F = tr sqrt(sqrt(a) b sqrt(a)), computed as the trace norm of
/// sqrt(a) sqrt(b). Throws InvalidInput if the grids differ.
double uhlmann_fidelity(const TemporalDensityMatrix& a, const TemporalDensityMatrix& b);

/// Hermitian PSD square root with negative eigenvalues clipped to zero.
CMatrix psd_sqrt(const CMatrix& m);

}  // namespace phtomo
