#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>

#include "phtomo/sim/simulator.hpp"

namespace phtomo {

// Binary trace file, little-endian, 48-byte header followed by row-major f64
// traces:
//   magic "TDMT" | version u32 | bin_count u32 | n_traces u64 |
//   bin_width f64 | trigger_index u32 | detuning f64 | seed u64
struct TraceFileHeader {
  static constexpr std::uint32_t kVersion = 1;
  static constexpr std::size_t kSize = 48;

  std::uint32_t version = kVersion;
  std::uint32_t bin_count = 0;
  std::uint64_t n_traces = 0;
  double bin_width = 0.0;
  std::uint32_t trigger_index = 0;
  double detuning = 0.0;
  std::uint64_t seed = 0;

  TimeGrid grid() const { return TimeGrid(bin_width, bin_count, trigger_index); }
  std::uint64_t file_size() const { return kSize + n_traces * bin_count * sizeof(double); }
};

/// Streams traces to disk; the trace count in the header is fixed up front
/// and checked on close().
class TraceFileWriter {
 public:
  TraceFileWriter(const std::filesystem::path& path, const TraceFileHeader& header);
  void append(const RowMajorMatrix& traces);
  /// Throws IoError if fewer/more traces were appended than announced.
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  TraceFileHeader header_;
  std::uint64_t written_ = 0;
};

class TraceFileReader {
 public:
  explicit TraceFileReader(const std::filesystem::path& path);
  const TraceFileHeader& header() const { return header_; }
  const std::filesystem::path& path() const { return path_; }
  std::uint64_t remaining() const { return header_.n_traces - read_; }
  /// Reads up to `max_rows` traces; returns an empty matrix at end of file.
  RowMajorMatrix read(std::size_t max_rows);

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  TraceFileHeader header_;
  std::uint64_t read_ = 0;
};

void write_trace_file(const std::filesystem::path& path, const QuadratureTraceBatch& batch);
QuadratureTraceBatch read_trace_file(const std::filesystem::path& path);

}  // namespace phtomo
