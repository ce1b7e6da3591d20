#pragma once

#include <filesystem>

#include "phtomo/accumulation/reduced_set.hpp"

namespace phtomo {

/// Writes one CSV per detuning (reduced_<i>.csv) and manifest.json into
/// `dir`, creating it if needed. Returns the manifest path.
std::filesystem::path write_reduced_set(const std::filesystem::path& dir, const ReducedAutocorrelationSet& set);

/// Reads a set back from its manifest. CSV paths are resolved relative to
/// the manifest's directory.
ReducedAutocorrelationSet read_reduced_set(const std::filesystem::path& manifest);

void write_real_csv(const std::filesystem::path& path, const RMatrix& m);
RMatrix read_real_csv(const std::filesystem::path& path);

}  // namespace phtomo
