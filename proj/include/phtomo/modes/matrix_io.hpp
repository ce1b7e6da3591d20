#pragma once

#include <filesystem>
#include <iosfwd>

#include "phtomo/modes/density_matrix.hpp"

namespace phtomo {

// Text matrix format:
//   # tdm rows=<n> dt=<seconds> trigger=<index>
//   re:im,re:im,...     (one line per row)
// Mode functions use the header keyword `tmf` and one `re:im` value per line.

void write_tdm(std::ostream& out, const TemporalDensityMatrix& rho);
void write_tdm(const std::filesystem::path& path, const TemporalDensityMatrix& rho);
TemporalDensityMatrix read_tdm(std::istream& in);
TemporalDensityMatrix read_tdm(const std::filesystem::path& path);

/// Writes an arbitrary complex matrix with the tdm header (no validation).
void write_complex_matrix(std::ostream& out, const TimeGrid& grid, const CMatrix& m);
/// Reads the tdm format without validating density-matrix invariants.
std::pair<TimeGrid, CMatrix> read_complex_matrix(std::istream& in);

void write_tmf(std::ostream& out, const TemporalModeFunction& phi);
void write_tmf(const std::filesystem::path& path, const TemporalModeFunction& phi);
TemporalModeFunction read_tmf(std::istream& in);
TemporalModeFunction read_tmf(const std::filesystem::path& path);

}  // namespace phtomo
