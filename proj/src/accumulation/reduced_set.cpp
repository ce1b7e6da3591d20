#include "phtomo/accumulation/reduced_set.hpp"

#include <algorithm>
#include <cmath>

#include "phtomo/errors.hpp"

namespace phtomo {
namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

BackgroundSubtraction subtract_lag_baseline(const RMatrix& values, const RVector& baseline, FlagMatrix borrowed) {
  const Eigen::Index n = values.rows();
  BackgroundSubtraction out;
  out.reduced.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index j = 0; j < n; ++j) out.reduced(j, k) = values(j, k) - baseline(std::abs(j - k));
  }
  out.borrowed = std::move(borrowed);
  out.baseline = baseline;
  return out;
}

}  // namespace

QuietRegion default_quiet_region(const TimeGrid& grid) {
  const std::size_t n = grid.bin_count();
  const auto len = static_cast<std::size_t>(std::lround(0.3 * static_cast<double>(n)));
  return QuietRegion{n - std::min(len, n), n};
}

BackgroundSubtraction subtract_background(const AutocorrelationMatrix& full, const QuietRegion& quiet) {
  const std::size_t n = full.grid.bin_count();
  if (quiet.begin >= quiet.end || quiet.end > n) {
    throw InvalidInput("quiet region [" + std::to_string(quiet.begin) + ", " + std::to_string(quiet.end) +
                       ") is empty or outside the " + std::to_string(n) + "-bin grid");
  }
  if (4 * quiet.length() < n) {
    throw InvalidInput("quiet region holds " + std::to_string(quiet.length()) + " of " + std::to_string(n) +
                       " bins; at least a quarter is required");
  }
  const std::size_t len = quiet.length();
  RVector baseline = RVector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t lag = 0; lag < len; ++lag) {
    double s = 0.0;
    for (std::size_t k = quiet.begin; k + lag < quiet.end; ++k) s += full.values(k + lag, k);
    baseline(lag) = s / static_cast<double>(len - lag);
  }
  FlagMatrix borrowed = FlagMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t lag = len; lag < n; ++lag) {
    baseline(lag) = baseline(len - 1);
    for (std::size_t k = 0; k + lag < n; ++k) {
      borrowed(k + lag, k) = 1;
      borrowed(k, k + lag) = 1;
    }
  }
  auto out = subtract_lag_baseline(full.values, baseline, std::move(borrowed));
  if (quiet.begin <= full.grid.trigger_index()) {
    out.warnings.push_back("quiet region starts at bin " + std::to_string(quiet.begin) +
                           ", at or before the trigger bin " + std::to_string(full.grid.trigger_index()) +
                           "; it overlaps the photon support");
  }
  return out;
}

BackgroundSubtraction subtract_background(const AutocorrelationMatrix& full, const AutocorrelationMatrix& vacuum) {
  if (!(full.grid == vacuum.grid)) throw InvalidInput("vacuum reference grid differs from the signal grid");
  const auto n = static_cast<Eigen::Index>(full.grid.bin_count());
  RVector baseline(n);
  for (Eigen::Index lag = 0; lag < n; ++lag) baseline(lag) = vacuum.values.diagonal(-lag).mean();
  return subtract_lag_baseline(full.values, baseline, FlagMatrix::Zero(n, n));
}

ReducedAutocorrelationSet::ReducedAutocorrelationSet(TimeGrid grid) : grid_(grid) {
  const auto n = static_cast<Eigen::Index>(grid_.bin_count());
  flagged_ = FlagMatrix::Zero(n, n);
}

void ReducedAutocorrelationSet::add(ReducedEntry entry) {
  const auto n = static_cast<Eigen::Index>(grid_.bin_count());
  if (entry.values.rows() != n || entry.values.cols() != n) {
    throw InvalidInput("reduced set: matrix shape does not match the grid");
  }
  if (!std::isfinite(entry.detuning)) throw InvalidInput("reduced set: detuning is not finite");
  if (!entry.values.allFinite()) throw InvalidInput("reduced set: non-finite matrix values");
  const double scale = std::max(1.0, entry.values.cwiseAbs().maxCoeff());
  if ((entry.values - entry.values.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidInput("reduced set: matrix is not symmetric");
  }
  for (const auto& e : entries_) {
    if (e.detuning == entry.detuning) {
      throw InvalidInput("reduced set: duplicate detuning " + std::to_string(entry.detuning) + " rad/s");
    }
  }
  entries_.push_back(std::move(entry));
}

void ReducedAutocorrelationSet::flag(const FlagMatrix& mask) {
  if (mask.rows() != flagged_.rows() || mask.cols() != flagged_.cols()) {
    throw InvalidInput("reduced set: flag mask shape does not match the grid");
  }
  for (Eigen::Index k = 0; k < mask.cols(); ++k) {
    for (Eigen::Index j = 0; j < mask.rows(); ++j) {
      if (mask(j, k) != 0) {
        flagged_(j, k) = 1;
        flagged_(k, j) = 1;
      }
    }
  }
}

std::size_t ReducedAutocorrelationSet::flagged_count() const {
  return static_cast<std::size_t>(flagged_.cast<int>().sum());
}

std::vector<double> ReducedAutocorrelationSet::detunings() const {
  std::vector<double> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.detuning);
  return out;
}

ReducedAutocorrelationSet ReducedAutocorrelationSet::scaled(double factor) const {
  ReducedAutocorrelationSet out = *this;
  for (auto& e : out.entries_) e.values *= factor;
  return out;
}

std::uint64_t detuning_seed(std::uint64_t base_seed, std::size_t index) {
  return mix(mix(base_seed) + 0x5851f42d4c957f2dULL * (static_cast<std::uint64_t>(index) + 1));
}

AutocorrelationMatrix accumulate_streaming(const TraceSampler& sampler, std::size_t n_traces,
                                           const AcquireOptions& options, std::size_t detuning_index) {
  if (n_traces == 0) throw InvalidInput("accumulate: zero traces requested");
  const std::size_t chunk = std::max<std::size_t>(1, options.chunk_size);
  AutocorrelationAccumulator acc(sampler.grid(), sampler.config().detuning);
  for (std::size_t first = 0; first < n_traces; first += chunk) {
    const std::size_t count = std::min(chunk, n_traces - first);
    auto batch = sampler.sample(first, count, std::max(1u, options.workers));
    if (options.on_chunk) options.on_chunk(detuning_index, batch);
    acc.add(batch.traces);
  }
  return acc.result();
}

ReducedAutocorrelationSet acquire_set(const TemporalDensityMatrix& rho, const std::vector<double>& detunings,
                                      const SimulatorConfig& config, std::size_t n_traces,
                                      const AcquireOptions& options) {
  if (detunings.empty()) throw InvalidInput("acquire_set: no detunings given");
  const QuietRegion quiet = options.quiet_region.value_or(default_quiet_region(rho.grid()));
  ReducedAutocorrelationSet set(rho.grid());
  set.set_quiet_region(quiet);
  for (std::size_t i = 0; i < detunings.size(); ++i) {
    SimulatorConfig cfg = config;
    cfg.detuning = detunings[i];
    cfg.rng_seed = detuning_seed(config.rng_seed, i);
    const TraceSampler sampler(rho, cfg);
    const auto full = accumulate_streaming(sampler, n_traces, options, i);
    auto sub = subtract_background(full, quiet);
    set.add(ReducedEntry{detunings[i], std::move(sub.reduced), full.n_samples});
    set.flag(sub.borrowed);
    if (i == 0) {
      for (auto& w : sub.warnings) set.warnings().push_back(std::move(w));
    }
  }
  return set;
}

}  // namespace phtomo
