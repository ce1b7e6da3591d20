#include "phtomo/sim/trace_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <vector>

#include "phtomo/errors.hpp"

namespace phtomo {
namespace {

constexpr std::array<char, 4> kMagic{'T', 'D', 'M', 'T'};

template <typename U>
void put_le(std::vector<unsigned char>& buf, U value) {
  for (std::size_t b = 0; b < sizeof(U); ++b) buf.push_back(static_cast<unsigned char>(value >> (8 * b)));
}

template <typename U>
U get_le(const unsigned char* p) {
  U value = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b) value |= static_cast<U>(p[b]) << (8 * b);
  return value;
}

std::vector<unsigned char> encode_header(const TraceFileHeader& h) {
  std::vector<unsigned char> buf(kMagic.begin(), kMagic.end());
  put_le(buf, h.version);
  put_le(buf, h.bin_count);
  put_le(buf, h.n_traces);
  put_le(buf, std::bit_cast<std::uint64_t>(h.bin_width));
  put_le(buf, h.trigger_index);
  put_le(buf, std::bit_cast<std::uint64_t>(h.detuning));
  put_le(buf, h.seed);
  return buf;
}

void encode_values(const double* data, std::size_t count, std::vector<unsigned char>& buf) {
  buf.resize(count * sizeof(double));
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(buf.data(), data, buf.size());
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const auto bits = std::bit_cast<std::uint64_t>(data[i]);
      for (std::size_t b = 0; b < 8; ++b) buf[i * 8 + b] = static_cast<unsigned char>(bits >> (8 * b));
    }
  }
}

}  // namespace

TraceFileWriter::TraceFileWriter(const std::filesystem::path& path, const TraceFileHeader& header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), header_(header) {
  if (!out_) throw IoError("cannot open trace file '" + path.string() + "' for writing");
  const auto bytes = encode_header(header_);
  out_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out_) throw IoError("failed writing header of '" + path.string() + "'");
}

void TraceFileWriter::append(const RowMajorMatrix& traces) {
  if (static_cast<std::uint32_t>(traces.cols()) != header_.bin_count) {
    throw InvalidInput("TraceFileWriter: trace length does not match header bin_count");
  }
  std::vector<unsigned char> buf;
  encode_values(traces.data(), static_cast<std::size_t>(traces.size()), buf);
  out_.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out_) throw IoError("failed writing traces to '" + path_.string() + "'");
  written_ += static_cast<std::uint64_t>(traces.rows());
}

void TraceFileWriter::close() {
  out_.close();
  if (!out_) throw IoError("failed closing '" + path_.string() + "'");
  if (written_ != header_.n_traces) {
    throw IoError("trace file '" + path_.string() + "': wrote " + std::to_string(written_) + " traces, header says " +
                  std::to_string(header_.n_traces));
  }
}

TraceFileReader::TraceFileReader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw IoError("cannot open trace file '" + path.string() + "'");
  std::array<unsigned char, TraceFileHeader::kSize> raw{};
  in_.read(reinterpret_cast<char*>(raw.data()), raw.size());
  if (in_.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw IoError("trace file '" + path.string() + "': truncated header");
  }
  if (std::memcmp(raw.data(), kMagic.data(), kMagic.size()) != 0) {
    throw IoError("trace file '" + path.string() + "': bad magic");
  }
  const unsigned char* p = raw.data() + 4;
  header_.version = get_le<std::uint32_t>(p);
  header_.bin_count = get_le<std::uint32_t>(p + 4);
  header_.n_traces = get_le<std::uint64_t>(p + 8);
  header_.bin_width = std::bit_cast<double>(get_le<std::uint64_t>(p + 16));
  header_.trigger_index = get_le<std::uint32_t>(p + 24);
  header_.detuning = std::bit_cast<double>(get_le<std::uint64_t>(p + 28));
  header_.seed = get_le<std::uint64_t>(p + 36);
  if (header_.version != TraceFileHeader::kVersion) {
    throw IoError("trace file '" + path.string() + "': unsupported version " + std::to_string(header_.version));
  }
  try {
    (void)header_.grid();
  } catch (const InvalidInput& e) {
    throw IoError("trace file '" + path.string() + "': " + e.what());
  }
  in_.seekg(0, std::ios::end);
  const auto size = static_cast<std::uint64_t>(in_.tellg());
  if (size != header_.file_size()) {
    throw IoError("trace file '" + path.string() + "': size " + std::to_string(size) + " does not match header (" +
                  std::to_string(header_.file_size()) + ")");
  }
  in_.seekg(static_cast<std::streamoff>(TraceFileHeader::kSize));
}

RowMajorMatrix TraceFileReader::read(std::size_t max_rows) {
  const auto rows = static_cast<Eigen::Index>(std::min<std::uint64_t>(max_rows, remaining()));
  const auto cols = static_cast<Eigen::Index>(header_.bin_count);
  RowMajorMatrix out(rows, cols);
  if (rows == 0) return out;
  std::vector<unsigned char> buf(static_cast<std::size_t>(rows * cols) * sizeof(double));
  in_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in_.gcount() != static_cast<std::streamsize>(buf.size())) {
    throw IoError("trace file '" + path_.string() + "': truncated payload");
  }
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out.data()[i] = std::bit_cast<double>(get_le<std::uint64_t>(buf.data() + i * 8));
  }
  read_ += static_cast<std::uint64_t>(rows);
  return out;
}

void write_trace_file(const std::filesystem::path& path, const QuadratureTraceBatch& batch) {
  TraceFileHeader h;
  h.bin_count = static_cast<std::uint32_t>(batch.grid.bin_count());
  h.n_traces = batch.size();
  h.bin_width = batch.grid.bin_width();
  h.trigger_index = static_cast<std::uint32_t>(batch.grid.trigger_index());
  h.detuning = batch.detuning;
  h.seed = batch.config_snapshot.rng_seed;
  TraceFileWriter writer(path, h);
  writer.append(batch.traces);
  writer.close();
}

QuadratureTraceBatch read_trace_file(const std::filesystem::path& path) {
  TraceFileReader reader(path);
  const auto& h = reader.header();
  QuadratureTraceBatch batch{h.grid(), h.detuning, reader.read(h.n_traces), SimulatorConfig{}, 0};
  batch.config_snapshot.detuning = h.detuning;
  batch.config_snapshot.rng_seed = h.seed;
  return batch;
}

}  // namespace phtomo
