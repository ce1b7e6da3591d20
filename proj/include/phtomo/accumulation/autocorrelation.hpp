#pragma once

#include <cstdint>

#include "phtomo/linalg.hpp"
#include "phtomo/modes/time_grid.hpp"
#include "phtomo/sim/simulator.hpp"

namespace phtomo {

/// Mean of X_j X_k over a set of traces.
struct AutocorrelationMatrix {
  TimeGrid grid;
  double detuning = 0.0;
  RMatrix values;  ///< symmetric
  std::uint64_t n_samples = 0;
};

/// Streaming sum of outer products. Only the lower triangle is accumulated,
/// so the resulting matrix is exactly symmetric. Accumulators over disjoint
/// trace sets merge by adding sums and counts.
class AutocorrelationAccumulator {
 public:
  AutocorrelationAccumulator(TimeGrid grid, double detuning);

  const TimeGrid& grid() const { return grid_; }
  double detuning() const { return detuning_; }
  std::uint64_t n_samples() const { return n_; }

  void add(const RowMajorMatrix& traces);
  void add(const QuadratureTraceBatch& batch);
  /// Throws InvalidInput if grids or detunings differ.
  void merge(const AutocorrelationAccumulator& other);

  /// Throws InvalidInput when nothing has been accumulated.
  AutocorrelationMatrix result() const;

 private:
  TimeGrid grid_;
  double detuning_;
  RMatrix sum_;  // lower triangle
  std::uint64_t n_ = 0;
};

AutocorrelationMatrix accumulate(const QuadratureTraceBatch& batch);

}  // namespace phtomo
