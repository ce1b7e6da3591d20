#pragma once

#include <optional>
#include <span>
#include <vector>

#include "phtomo/linalg.hpp"
#include "phtomo/modes/density_matrix.hpp"
#include "phtomo/modes/time_grid.hpp"

namespace phtomo {

/// Idler filter cavity. Angular frequencies in rad/s.
struct CavityParams {
  double linewidth_gamma = mhz_to_rad_s(7.0);
  /// Optional Lorentzian envelope applied to the mode spectrum.
  std::optional<double> gain_bandwidth;

  void validate() const;
};

/// Phase modulator acting on the heralded photon; the modulation phase is
/// random from shot to shot and is averaged out.
struct EomParams {
  double modulation_frequency = mhz_to_rad_s(20.0);  ///< omega_m, rad/s
  double modulation_index = 1.1;                     ///< beta

  void validate() const;
};

/// phi(t) = sqrt(gamma) exp(gamma t / 2) for t <= 0, zero after the trigger,
/// renormalized on the grid. Throws InvalidInput if gamma <= 0 or the grid
/// has no bins before the trigger.
TemporalModeFunction rising_exponential_tmf(double gamma, const TimeGrid& grid);

/// As above, then multiplies the mode's spectrum by the Lorentzian
/// 1 / (1 + (2 delta / gain_bandwidth)^2) when a gain bandwidth is set.
TemporalModeFunction rising_exponential_tmf(const CavityParams& cavity, const TimeGrid& grid);

/// Lorentzian amplitude transmission sqrt(2 / (pi gamma)) / (1 - 2 i delta / gamma).
Complex cavity_transmission(double delta, double gamma);

/// rho_mn = conj(phi_m) * phi_n.
TemporalDensityMatrix tmf_to_tdm(const TemporalModeFunction& phi);

/// rho_mn -> rho_mn * exp(i Delta (t_m - t_n)).
TemporalDensityMatrix apply_virtual_shift(const TemporalDensityMatrix& rho, double shift);

/// Phase-randomized modulated mode:
/// rho(t,t') ~ gamma e^{gamma (t+t')/2} Theta(-t) Theta(-t') J0[2 beta sin(omega_m (t-t')/2)],
/// renormalized to unit trace on the grid.
TemporalDensityMatrix eom_mixed_tdm(double gamma, const EomParams& eom, const TimeGrid& grid);

/// |sum_j a_j exp(-i delta t_j)|^2 at each requested angular detuning.
std::vector<double> mode_power_spectrum(const TemporalModeFunction& phi, std::span<const double> deltas);

}  // namespace phtomo
