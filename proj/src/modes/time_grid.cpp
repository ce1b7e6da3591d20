#include "phtomo/modes/time_grid.hpp"

#include <cmath>
#include <string>

#include "phtomo/errors.hpp"

namespace phtomo {

TimeGrid::TimeGrid(double bin_width, std::size_t bin_count, std::size_t trigger_index)
    : bin_width_(bin_width), bin_count_(bin_count), trigger_index_(trigger_index) {
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) {
    throw InvalidInput("TimeGrid: bin_width must be positive and finite");
  }
  if (bin_count == 0) {
    throw InvalidInput("TimeGrid: bin_count must be positive");
  }
  if (trigger_index >= bin_count) {
    throw InvalidInput("TimeGrid: trigger_index " + std::to_string(trigger_index) +
                       " outside grid of " + std::to_string(bin_count) + " bins");
  }
}

TimeGrid TimeGrid::standard() {
  // 155 ns / 2 ns = 77.5, rounded half up.
  return TimeGrid(2e-9, 180, 78);
}

RVector TimeGrid::times() const {
  RVector t(static_cast<Eigen::Index>(bin_count_));
  for (std::size_t j = 0; j < bin_count_; ++j) t(static_cast<Eigen::Index>(j)) = time(j);
  return t;
}

}  // namespace phtomo
