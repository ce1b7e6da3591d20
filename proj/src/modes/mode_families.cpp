#include "phtomo/modes/mode_families.hpp"

#include <cmath>
#include <numbers>

#include "phtomo/errors.hpp"
#include "phtomo/modes/bessel.hpp"

namespace phtomo {
namespace {

void require_support_before_trigger(const TimeGrid& grid) {
  if (grid.trigger_index() == 0) {
    throw InvalidInput("rising exponential mode needs bins before the trigger (trigger_index = 0)");
  }
}

CVector rising_exponential_amplitudes(double gamma, const TimeGrid& grid) {
  if (!(gamma > 0.0)) throw InvalidInput("rising exponential mode: gamma must be positive");
  require_support_before_trigger(grid);
  const std::size_t n = grid.bin_count();
  CVector amp = CVector::Zero(static_cast<Eigen::Index>(n));
  const double scale = std::sqrt(gamma * grid.bin_width());
  for (std::size_t j = 0; j <= grid.trigger_index(); ++j) {
    amp(static_cast<Eigen::Index>(j)) = scale * std::exp(0.5 * gamma * grid.time(j));
  }
  return amp;
}

// Applies a real spectral envelope with a zero-padded DFT so the implied
// time-domain kernel does not wrap around the grid.
CVector apply_spectral_envelope(const CVector& amp, const TimeGrid& grid, double bandwidth) {
  const Eigen::Index n = amp.size();
  const Eigen::Index padded = 4 * n;
  const double dw = kTwoPi / (static_cast<double>(padded) * grid.bin_width());
  CVector spectrum(padded);
  for (Eigen::Index k = 0; k < padded; ++k) {
    const Eigen::Index signed_k = (k <= padded / 2) ? k : k - padded;
    const double omega = static_cast<double>(signed_k) * dw;
    Complex acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      acc += amp(j) * std::polar(1.0, -omega * static_cast<double>(j) * grid.bin_width());
    }
    const double x = 2.0 * omega / bandwidth;
    spectrum(k) = acc / (1.0 + x * x);
  }
  CVector out(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Complex acc = 0.0;
    for (Eigen::Index k = 0; k < padded; ++k) {
      const Eigen::Index signed_k = (k <= padded / 2) ? k : k - padded;
      const double omega = static_cast<double>(signed_k) * dw;
      acc += spectrum(k) * std::polar(1.0, omega * static_cast<double>(j) * grid.bin_width());
    }
    out(j) = acc / static_cast<double>(padded);
  }
  return out;
}

}  // namespace

void CavityParams::validate() const {
  if (!(linewidth_gamma > 0.0)) throw InvalidInput("CavityParams: linewidth_gamma must be positive");
  if (gain_bandwidth && !(*gain_bandwidth > linewidth_gamma)) {
    throw InvalidInput("CavityParams: gain_bandwidth must exceed linewidth_gamma");
  }
}

void EomParams::validate() const {
  if (!(modulation_frequency > 0.0)) throw InvalidInput("EomParams: modulation frequency must be positive");
  if (!(modulation_index >= 0.0)) throw InvalidInput("EomParams: modulation index must be nonnegative");
}

TemporalModeFunction rising_exponential_tmf(double gamma, const TimeGrid& grid) {
  return TemporalModeFunction::normalized(grid, rising_exponential_amplitudes(gamma, grid));
}

TemporalModeFunction rising_exponential_tmf(const CavityParams& cavity, const TimeGrid& grid) {
  cavity.validate();
  CVector amp = rising_exponential_amplitudes(cavity.linewidth_gamma, grid);
  if (cavity.gain_bandwidth) amp = apply_spectral_envelope(amp, grid, *cavity.gain_bandwidth);
  return TemporalModeFunction::normalized(grid, std::move(amp));
}

Complex cavity_transmission(double delta, double gamma) {
  const double peak = std::sqrt(2.0 / (std::numbers::pi * gamma));
  return peak / Complex(1.0, -2.0 * delta / gamma);
}

TemporalDensityMatrix tmf_to_tdm(const TemporalModeFunction& phi) {
  const CVector& a = phi.amplitudes();
  CMatrix rho = a.conjugate() * a.transpose();
  return TemporalDensityMatrix(phi.grid(), std::move(rho));
}

TemporalDensityMatrix apply_virtual_shift(const TemporalDensityMatrix& rho, double shift) {
  const TimeGrid& grid = rho.grid();
  const Eigen::Index n = rho.size();
  CVector phase(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    phase(j) = std::polar(1.0, shift * grid.time(static_cast<std::size_t>(j)));
  }
  // Diagonal unitary congruence D rho D^dagger.
  CMatrix shifted = phase.asDiagonal() * rho.matrix() * phase.conjugate().asDiagonal();
  return TemporalDensityMatrix(grid, std::move(shifted));
}

TemporalDensityMatrix eom_mixed_tdm(double gamma, const EomParams& eom, const TimeGrid& grid) {
  eom.validate();
  const CVector amp = rising_exponential_amplitudes(gamma, grid);
  const Eigen::Index n = amp.size();
  CMatrix rho = CMatrix::Zero(n, n);
  const double two_beta = 2.0 * eom.modulation_index;
  for (Eigen::Index m = 0; m < n; ++m) {
    for (Eigen::Index k = 0; k <= m; ++k) {
      const double lag = grid.time(static_cast<std::size_t>(m)) - grid.time(static_cast<std::size_t>(k));
      const double kernel = bessel_j0(two_beta * std::sin(0.5 * eom.modulation_frequency * lag));
      const Complex value = std::conj(amp(m)) * amp(k) * kernel;
      rho(m, k) = value;
      rho(k, m) = std::conj(value);
    }
  }
  rho /= rho.trace().real();
  return TemporalDensityMatrix(grid, std::move(rho));
}

std::vector<double> mode_power_spectrum(const TemporalModeFunction& phi, std::span<const double> deltas) {
  const CVector& a = phi.amplitudes();
  const TimeGrid& grid = phi.grid();
  std::vector<double> out;
  out.reserve(deltas.size());
  for (double delta : deltas) {
    Complex acc = 0.0;
    for (Eigen::Index j = 0; j < a.size(); ++j) {
      acc += a(j) * std::polar(1.0, -delta * grid.time(static_cast<std::size_t>(j)));
    }
    out.push_back(std::norm(acc));
  }
  return out;
}

}  // namespace phtomo
