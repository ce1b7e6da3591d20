#pragma once

#include <string>
#include <vector>

#include "phtomo/accumulation/reduced_set.hpp"
#include "phtomo/modes/density_matrix.hpp"
#include "phtomo/reconstruction/linear_inversion.hpp"
#include "phtomo/reconstruction/options.hpp"

namespace phtomo {

enum class ReconstructionStatus { converged, iteration_limit };

const char* to_string(ReconstructionStatus status);

struct ReconstructionReport {
  TemporalDensityMatrix rho_hat;
  TemporalModeFunction primary_mode;  ///< mode of the largest eigenvalue
  RVector eigenvalues;                ///< descending
  double final_cost = 0.0;
  std::vector<double> cost_history;   ///< entry 0 is the cost of the starting point
  double estimated_efficiency = 0.0;  ///< fitted scale s
  double linear_trace = 0.0;          ///< trace of the linear inversion estimate
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> condition_rank;
  std::size_t rank_deficient_offdiagonal = 0;
  std::size_t flagged_entries = 0;
  std::size_t iterations = 0;
  ReconstructionStatus status = ReconstructionStatus::iteration_limit;
  double virtual_shift = 0.0;
  std::vector<std::string> warnings;

  bool converged() const { return status == ReconstructionStatus::converged; }
};

/// Fits rho (PSD, unit trace, at most rank_cap nonzero eigenvalues) and a
/// scale s >= 0 by minimizing
///   C = sum_d sum_{j,k unflagged} (A_d(j,k) - s Re[rho_jk e^{-i (detuning_d + shift)(t_j - t_k)}])^2.
/// Each iteration adjusts the eigenvalues on the simplex with the
/// eigenvectors fixed, then rotates eigenvector pairs by 2x2 unitaries.
ReconstructionReport iterative_reconstruct(const ReducedAutocorrelationSet& set, const ReconstructionOptions& opts = {});

/// iterative_reconstruct with opts.virtual_shift = shift.
ReconstructionReport reconstruct_with_virtual_shift(const ReducedAutocorrelationSet& set, double shift,
                                                    ReconstructionOptions opts = {});

/// Cost C of a given matrix with the scale fitted in closed form.
/// Returns {cost, s}.
std::pair<double, double> reconstruction_cost(const ReducedAutocorrelationSet& set, const CMatrix& rho,
                                              double shift = 0.0);

}  // namespace phtomo
