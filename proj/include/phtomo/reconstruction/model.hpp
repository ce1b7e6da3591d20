#pragma once

#include <vector>

#include "phtomo/accumulation/reduced_set.hpp"
#include "phtomo/modes/density_matrix.hpp"

namespace phtomo {

/// Phase factors E_jk = exp(-i (detuning + shift) (t_j - t_k)).
CMatrix detuning_phases(const TimeGrid& grid, double detuning, double shift = 0.0);

/// A_jk = Re(rho_jk) cos(w (t_j - t_k)) + Im(rho_jk) sin(w (t_j - t_k)),
/// w = detuning + shift. `rho` may be any square matrix on the grid.
RMatrix model_autocorrelation(const CMatrix& rho, const TimeGrid& grid, double detuning, double shift = 0.0);
RMatrix model_autocorrelation(const TemporalDensityMatrix& rho, double detuning, double shift = 0.0);

/// Noiseless reduced set built directly from a density matrix, scaled by
/// `efficiency`. No entries are flagged.
ReducedAutocorrelationSet model_set(const TemporalDensityMatrix& rho, const std::vector<double>& detunings,
                                    double efficiency = 1.0, std::uint64_t n_samples = 1);

struct AmbiguityDemo {
  TemporalDensityMatrix rho_plus;
  TemporalDensityMatrix rho_minus;
  RMatrix a_plus;   ///< model at zero detuning for rho_plus
  RMatrix a_minus;  ///< model at zero detuning for rho_minus
};

/// Two modes shifted by +shift and -shift produce the same zero-detuning
/// autocorrelation. Throws InvalidInput for shift == 0.
AmbiguityDemo ambiguity_demo(double shift, const TimeGrid& grid, double gamma);

}  // namespace phtomo
