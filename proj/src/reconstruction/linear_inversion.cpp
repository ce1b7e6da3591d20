#include "phtomo/reconstruction/linear_inversion.hpp"

#include <cmath>

#include "phtomo/errors.hpp"

namespace phtomo {

void ReconstructionOptions::validate() const {
  if (max_iterations < 1) throw InvalidInput("max_iterations must be at least 1");
  if (!(cost_tolerance > 0.0)) throw InvalidInput("cost_tolerance must be positive");
  if (rank_cap && *rank_cap < 1) throw InvalidInput("rank_cap must be at least 1");
  if (!std::isfinite(virtual_shift)) throw InvalidInput("virtual_shift must be finite");
  if (!(init_perturbation >= 0.0 && init_perturbation < 1.0)) throw InvalidInput("init_perturbation must be in [0, 1)");
  if (max_pairs_per_iteration < 1) throw InvalidInput("max_pairs_per_iteration must be at least 1");
}

LinearInversion linear_invert(const ReducedAutocorrelationSet& set, const ReconstructionOptions& opts) {
  if (set.empty()) throw InvalidInput("linear_invert: no detunings");
  opts.validate();
  const auto n = static_cast<Eigen::Index>(set.grid().bin_count());
  const double dt = set.grid().bin_width();
  const auto& entries = set.entries();

  LinearInversion out;
  out.rho = CMatrix::Zero(n, n);
  out.rank.setZero(n, n);

  for (Eigen::Index lag = 0; lag < n; ++lag) {
    const double tau = static_cast<double>(lag) * dt;
    // Normal equations depend only on the lag.
    double scc = 0.0, scs = 0.0, sss = 0.0;
    std::vector<double> c(entries.size()), s(entries.size());
    for (std::size_t d = 0; d < entries.size(); ++d) {
      const double w = entries[d].detuning + opts.virtual_shift;
      c[d] = std::cos(w * tau);
      s[d] = std::sin(w * tau);
      scc += c[d] * c[d];
      scs += c[d] * s[d];
      sss += s[d] * s[d];
    }
    const double total = scc + sss;  // equals the number of detunings
    int rank = 2;
    // Eigen-decomposition of the symmetric 2x2 normal matrix.
    const double mean = 0.5 * (scc + sss);
    const double rad = std::hypot(0.5 * (scc - sss), scs);
    const double lmax = mean + rad;
    const double lmin = mean - rad;
    if (sss <= 1e-20 * total) rank = 1;  // sines vanish: Re only
    else if (lmin <= 1e-10 * lmax) rank = 1;
    if (lmax <= 0.0) rank = 0;

    for (Eigen::Index k = 0; k + lag < n; ++k) {
      const Eigen::Index j = k + lag;
      double bc = 0.0, bs = 0.0;
      for (std::size_t d = 0; d < entries.size(); ++d) {
        const double a = entries[d].values(j, k);
        bc += c[d] * a;
        bs += s[d] * a;
      }
      double re = 0.0, im = 0.0;
      if (rank == 2) {
        const double det = scc * sss - scs * scs;
        re = (sss * bc - scs * bs) / det;
        im = (scc * bs - scs * bc) / det;
      } else if (rank == 1 && sss <= 1e-20 * total) {
        re = bc / scc;
      } else if (rank == 1) {
        // Pseudo-inverse along the dominant eigenvector (u1, u2).
        double u1 = scs, u2 = lmax - scc;
        if (std::abs(u1) + std::abs(u2) == 0.0) {
          u1 = scc >= sss ? 1.0 : 0.0;
          u2 = scc >= sss ? 0.0 : 1.0;
        }
        const double norm = std::hypot(u1, u2);
        u1 /= norm;
        u2 /= norm;
        const double proj = (u1 * bc + u2 * bs) / lmax;
        re = proj * u1;
        im = proj * u2;
      }
      // Fit gives rho_jk for tau = t_j - t_k.
      out.rho(j, k) = Complex(re, im);
      out.rho(k, j) = Complex(re, -im);
      out.rank(j, k) = static_cast<std::uint8_t>(rank);
      out.rank(k, j) = static_cast<std::uint8_t>(rank);
      if (lag > 0 && rank < 2) ++out.rank_deficient_offdiagonal;
    }
  }
  out.estimated_efficiency = out.rho.diagonal().real().sum();
  return out;
}

}  // namespace phtomo
