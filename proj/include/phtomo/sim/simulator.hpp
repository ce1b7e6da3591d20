#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "phtomo/linalg.hpp"
#include "phtomo/modes/density_matrix.hpp"

namespace phtomo {

/// Quadrature units throughout: the vacuum variance of every bin is 1/2.
struct SimulatorConfig {
  double detuning = 0.0;                     ///< LO detuning delta_omega, rad/s
  double efficiency = 1.0;                   ///< eta in [0, 1]
  std::optional<double> detector_bandwidth;  ///< 3 dB bandwidth in Hz; empty = instantaneous
  double dc_bias = 0.0;
  double background_noise_rms = 0.0;
  double background_correlation_time = 0.0;  ///< seconds; 0 = white
  std::uint64_t rng_seed = 0;
  bool randomize_theta0 = true;
  double theta0 = 0.0;  ///< LO phase at t = 0 when not randomized

  void validate() const;
};

struct QuadratureTraceBatch {
  TimeGrid grid;
  double detuning = 0.0;
  RowMajorMatrix traces;  ///< one trace per row
  SimulatorConfig config_snapshot;
  std::uint64_t first_trace_index = 0;

  std::size_t size() const { return static_cast<std::size_t>(traces.rows()); }
};

/// Seed of the independent random substream owned by trace `index`.
std::uint64_t trace_substream_seed(std::uint64_t seed, std::uint64_t index);

/// Draws heralded homodyne traces for a photon in a (possibly mixed)
/// temporal mode. Each trace owns a substream derived from (seed, index),
/// so any partition of the index range reproduces the same traces.
///
/// Per trace: pick eigenmode i with probability p_i; with probability
/// 1 - eta emit vacuum; otherwise form w_j = v_ij exp(-i theta_j),
/// theta_j = detuning * t_j + theta_0, and sample x from the density
/// proportional to |w . x|^2 exp(-|x|^2). That density is a mixture over
/// the principal axes of the rank-2 form Re(w)Re(w)^T + Im(w)Im(w)^T: the
/// chosen axis coordinate has density ~ y^2 e^{-y^2} (y^2 ~ Gamma(3/2, 1)),
/// all orthogonal coordinates are N(0, 1/2).
class TraceSampler {
 public:
  TraceSampler(const TemporalDensityMatrix& rho, SimulatorConfig config);
  /// Vacuum-only sampler.
  TraceSampler(const TimeGrid& grid, SimulatorConfig config);

  const TimeGrid& grid() const { return grid_; }
  const SimulatorConfig& config() const { return config_; }

  void sample_into(std::uint64_t trace_index, std::span<double> out) const;

  /// Traces [first_index, first_index + count), split across `workers` threads.
  QuadratureTraceBatch sample(std::uint64_t first_index, std::size_t count, unsigned workers = 1) const;

 private:
  void apply_detector_and_noise(std::span<double> x, std::mt19937_64& rng) const;

  TimeGrid grid_;
  SimulatorConfig config_;
  RVector times_;
  std::vector<double> cumulative_;  // cumulative eigenvalue weights
  CMatrix modes_;                   // eigenvectors with nonzero weight
};

QuadratureTraceBatch sample_traces(const TemporalDensityMatrix& rho, const SimulatorConfig& config,
                                   std::size_t n_traces);

/// sample_traces with eta = 0.
QuadratureTraceBatch vacuum_batch(const SimulatorConfig& config, std::size_t n_traces, const TimeGrid& grid);

}  // namespace phtomo
