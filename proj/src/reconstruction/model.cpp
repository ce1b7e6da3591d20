#include "phtomo/reconstruction/model.hpp"

#include <cmath>

#include "phtomo/errors.hpp"
#include "phtomo/modes/mode_families.hpp"

namespace phtomo {

CMatrix detuning_phases(const TimeGrid& grid, double detuning, double shift) {
  const double w = detuning + shift;
  const auto n = static_cast<Eigen::Index>(grid.bin_count());
  CMatrix e(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index j = 0; j < n; ++j) {
      // Exact lag in bins keeps E_jk a function of j - k only.
      const double tau = static_cast<double>(j - k) * grid.bin_width();
      e(j, k) = Complex(std::cos(w * tau), -std::sin(w * tau));
    }
  }
  return e;
}

RMatrix model_autocorrelation(const CMatrix& rho, const TimeGrid& grid, double detuning, double shift) {
  const auto n = static_cast<Eigen::Index>(grid.bin_count());
  if (rho.rows() != n || rho.cols() != n) throw InvalidInput("model_autocorrelation: matrix does not match grid");
  return detuning_phases(grid, detuning, shift).cwiseProduct(rho).real();
}

RMatrix model_autocorrelation(const TemporalDensityMatrix& rho, double detuning, double shift) {
  return model_autocorrelation(rho.matrix(), rho.grid(), detuning, shift);
}

ReducedAutocorrelationSet model_set(const TemporalDensityMatrix& rho, const std::vector<double>& detunings,
                                    double efficiency, std::uint64_t n_samples) {
  ReducedAutocorrelationSet set(rho.grid());
  for (double d : detunings) {
    RMatrix a = efficiency * model_autocorrelation(rho, d);
    // Exact symmetry: average with the transpose to remove rounding asymmetry.
    RMatrix sym = 0.5 * (a + a.transpose());
    set.add(ReducedEntry{d, std::move(sym), n_samples});
  }
  return set;
}

AmbiguityDemo ambiguity_demo(double shift, const TimeGrid& grid, double gamma) {
  if (shift == 0.0) throw InvalidInput("ambiguity_demo: shift must be nonzero");
  const auto rho = tmf_to_tdm(rising_exponential_tmf(gamma, grid));
  auto plus = apply_virtual_shift(rho, shift);
  auto minus = apply_virtual_shift(rho, -shift);
  RMatrix a_plus = model_autocorrelation(plus, 0.0);
  RMatrix a_minus = model_autocorrelation(minus, 0.0);
  return AmbiguityDemo{std::move(plus), std::move(minus), std::move(a_plus), std::move(a_minus)};
}

}  // namespace phtomo
