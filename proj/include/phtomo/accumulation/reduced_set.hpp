#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "phtomo/accumulation/autocorrelation.hpp"

namespace phtomo {

/// Half-open bin range [begin, end) assumed free of photon signal.
struct QuietRegion {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - begin; }
  bool operator==(const QuietRegion&) const = default;
};

/// Final 30% of the bins.
QuietRegion default_quiet_region(const TimeGrid& grid);

struct BackgroundSubtraction {
  RMatrix reduced;
  /// 1 where the lag had no quiet-region pairs and borrowed the baseline of
  /// the nearest available lag.
  FlagMatrix borrowed;
  /// Per-lag baseline that was subtracted.
  RVector baseline;
  std::vector<std::string> warnings;
};

/// Subtracts, for every lag l = j - k, the mean of full(j, k) over pairs with
/// both indices inside the quiet region.
///
/// Throws InvalidInput if the region is empty, out of range or shorter than
/// a quarter of the grid. A region that reaches the trigger bin or earlier
/// produces a warning.
BackgroundSubtraction subtract_background(const AutocorrelationMatrix& full, const QuietRegion& quiet);

/// Uses a separate vacuum run as the baseline source: the per-lag baseline
/// is the lag mean of the whole reference matrix. No entries are borrowed.
BackgroundSubtraction subtract_background(const AutocorrelationMatrix& full, const AutocorrelationMatrix& vacuum);

struct ReducedEntry {
  double detuning = 0.0;  ///< rad/s
  RMatrix values;         ///< reduced autocorrelation A_jk
  std::uint64_t n_samples = 0;
};

/// Reduced autocorrelation matrices at distinct detunings on one grid.
class ReducedAutocorrelationSet {
 public:
  explicit ReducedAutocorrelationSet(TimeGrid grid);

  const TimeGrid& grid() const { return grid_; }
  const std::vector<ReducedEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Throws InvalidInput on a duplicate detuning, wrong shape, non-finite or
  /// non-symmetric values.
  void add(ReducedEntry entry);

  /// Entries excluded from fitting (union over detunings).
  const FlagMatrix& flagged() const { return flagged_; }
  void flag(const FlagMatrix& mask);
  std::size_t flagged_count() const;

  const std::optional<QuietRegion>& quiet_region() const { return quiet_region_; }
  void set_quiet_region(QuietRegion region) { quiet_region_ = region; }

  std::vector<std::string>& warnings() { return warnings_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  std::vector<double> detunings() const;
  /// Multiplies every matrix by `factor`.
  ReducedAutocorrelationSet scaled(double factor) const;

 private:
  TimeGrid grid_;
  std::vector<ReducedEntry> entries_;
  FlagMatrix flagged_;
  std::optional<QuietRegion> quiet_region_;
  std::vector<std::string> warnings_;
};

/// Seed used for the detuning at position `index` of a schedule.
std::uint64_t detuning_seed(std::uint64_t base_seed, std::size_t index);

struct AcquireOptions {
  std::optional<QuietRegion> quiet_region;  ///< default_quiet_region when empty
  std::size_t chunk_size = 20000;           ///< traces held in memory at once
  unsigned workers = 1;
  /// Called with every generated chunk, e.g. to write traces to disk.
  std::function<void(std::size_t detuning_index, const QuadratureTraceBatch& chunk)> on_chunk;
};

/// Simulates, accumulates and background-subtracts n_traces at every
/// detuning. The detuning at position i uses seed detuning_seed(config.rng_seed, i).
ReducedAutocorrelationSet acquire_set(const TemporalDensityMatrix& rho, const std::vector<double>& detunings,
                                      const SimulatorConfig& config, std::size_t n_traces,
                                      const AcquireOptions& options = {});

/// Streams all traces of a sampler into an accumulator, chunk by chunk.
AutocorrelationMatrix accumulate_streaming(const TraceSampler& sampler, std::size_t n_traces,
                                           const AcquireOptions& options, std::size_t detuning_index = 0);

}  // namespace phtomo
