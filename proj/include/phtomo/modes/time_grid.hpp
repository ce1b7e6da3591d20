#pragma once

#include <cstddef>

#include "phtomo/linalg.hpp"

namespace phtomo {

/// Uniform time-bin axis shared by traces and matrices. Bin j sits at
/// t_j = (j - trigger_index) * bin_width, so the heralding event is t = 0.
class TimeGrid {
 public:
  /// Throws InvalidInput unless bin_width > 0 and trigger_index < bin_count.
  TimeGrid(double bin_width, std::size_t bin_count, std::size_t trigger_index);

  /// 180 bins of 2 ns with the trigger at bin 78 (155 ns / 2 ns, rounded).
  static TimeGrid standard();

  double bin_width() const { return bin_width_; }
  std::size_t bin_count() const { return bin_count_; }
  std::size_t trigger_index() const { return trigger_index_; }

  double time(std::size_t j) const {
    return (static_cast<double>(j) - static_cast<double>(trigger_index_)) * bin_width_;
  }
  RVector times() const;

  bool operator==(const TimeGrid&) const = default;

 private:
  double bin_width_;
  std::size_t bin_count_;
  std::size_t trigger_index_;
};

}  // namespace phtomo
