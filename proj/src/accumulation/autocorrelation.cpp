#include "phtomo/accumulation/autocorrelation.hpp"

#include "phtomo/errors.hpp"

namespace phtomo {

AutocorrelationAccumulator::AutocorrelationAccumulator(TimeGrid grid, double detuning)
    : grid_(grid), detuning_(detuning) {
  const auto n = static_cast<Eigen::Index>(grid_.bin_count());
  sum_ = RMatrix::Zero(n, n);
}

void AutocorrelationAccumulator::add(const RowMajorMatrix& traces) {
  if (traces.cols() != sum_.cols()) {
    throw InvalidInput("accumulator: trace length " + std::to_string(traces.cols()) + " does not match grid (" +
                       std::to_string(sum_.cols()) + " bins)");
  }
  if (traces.rows() == 0) return;
  if (!traces.allFinite()) throw InvalidInput("accumulator: non-finite trace values");
  sum_.selfadjointView<Eigen::Lower>().rankUpdate(traces.transpose());
  n_ += static_cast<std::uint64_t>(traces.rows());
}

void AutocorrelationAccumulator::add(const QuadratureTraceBatch& batch) {
  if (!(batch.grid == grid_)) throw InvalidInput("accumulator: batch grid differs");
  if (batch.detuning != detuning_) throw InvalidInput("accumulator: batch detuning differs");
  add(batch.traces);
}

void AutocorrelationAccumulator::merge(const AutocorrelationAccumulator& other) {
  if (!(other.grid_ == grid_)) throw InvalidInput("accumulator merge: grids differ");
  if (other.detuning_ != detuning_) throw InvalidInput("accumulator merge: detunings differ");
  sum_.triangularView<Eigen::Lower>() += other.sum_;
  n_ += other.n_;
}

AutocorrelationMatrix AutocorrelationAccumulator::result() const {
  if (n_ == 0) throw InvalidInput("accumulator: no traces accumulated");
  RMatrix values = sum_.selfadjointView<Eigen::Lower>();
  values /= static_cast<double>(n_);
  return AutocorrelationMatrix{grid_, detuning_, std::move(values), n_};
}

AutocorrelationMatrix accumulate(const QuadratureTraceBatch& batch) {
  if (batch.size() == 0) throw InvalidInput("accumulate: empty batch");
  AutocorrelationAccumulator acc(batch.grid, batch.detuning);
  acc.add(batch.traces);
  return acc.result();
}

}  // namespace phtomo
