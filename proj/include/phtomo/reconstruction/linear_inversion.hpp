#pragma once

#include "phtomo/accumulation/reduced_set.hpp"
#include "phtomo/reconstruction/options.hpp"

namespace phtomo {

/// Per-entry solution of
///   A_d(j,k) = Re(rho_jk) cos(w_d tau) + Im(rho_jk) sin(w_d tau),  w_d = detuning_d + shift,
/// in the least-squares sense over all detunings.
struct LinearInversion {
  CMatrix rho;  ///< Hermitian, not normalized, not necessarily PSD
  /// Rank of the 2-unknown system per entry: 2 full, 1 only one combination
  /// (Im set to zero when all sines vanish), 0 no information.
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> rank;
  double estimated_efficiency = 0.0;  ///< real trace before normalization
  std::size_t rank_deficient_offdiagonal = 0;  ///< count over j < k

  bool full_rank_offdiagonal() const { return rank_deficient_offdiagonal == 0; }
};

/// Throws InvalidInput for an empty set.
LinearInversion linear_invert(const ReducedAutocorrelationSet& set, const ReconstructionOptions& opts = {});

}  // namespace phtomo
