#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

namespace phtomo {

struct ReconstructionOptions {
  double virtual_shift = 0.0;  ///< Delta, rad/s; data detunings are read as detuning + Delta
  std::size_t max_iterations = 500;
  double cost_tolerance = 1e-8;  ///< stop when the relative cost change drops below this
  std::optional<std::size_t> rank_cap;  ///< maximum number of nonzero eigenvalues; empty = bin_count
  std::uint64_t rng_seed = 0;
  double init_perturbation = 1e-3;
  std::size_t max_pairs_per_iteration = 64;

  void validate() const;
};

}  // namespace phtomo
