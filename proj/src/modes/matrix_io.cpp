#include "phtomo/modes/matrix_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "phtomo/errors.hpp"

namespace phtomo {
namespace {

struct Header {
  std::string kind;
  std::size_t rows = 0;
  double dt = 0.0;
  std::size_t trigger = 0;
};

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_header(std::ostream& out, std::string_view kind, const TimeGrid& grid) {
  out << "# " << kind << " rows=" << grid.bin_count() << " dt=" << format_double(grid.bin_width())
      << " trigger=" << grid.trigger_index() << '\n';
}

void write_value(std::ostream& out, Complex v) { out << format_double(v.real()) << ':' << format_double(v.imag()); }

Header read_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("matrix file: missing header line");
  std::istringstream fields(line);
  std::string hash;
  Header h;
  fields >> hash >> h.kind;
  if (hash != "#" || (h.kind != "tdm" && h.kind != "tmf")) {
    throw IoError("matrix file: malformed header '" + line + "'");
  }
  bool have_rows = false, have_dt = false, have_trigger = false;
  std::string token;
  while (fields >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw IoError("matrix file: malformed header field '" + token + "'");
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    try {
      if (key == "rows") {
        h.rows = std::stoul(value);
        have_rows = true;
      } else if (key == "dt") {
        h.dt = std::stod(value);
        have_dt = true;
      } else if (key == "trigger") {
        h.trigger = std::stoul(value);
        have_trigger = true;
      }
    } catch (const std::exception&) {
      throw IoError("matrix file: bad header value '" + token + "'");
    }
  }
  if (!have_rows || !have_dt || !have_trigger) throw IoError("matrix file: header lacks rows/dt/trigger");
  return h;
}

Complex parse_value(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw IoError("matrix file: value without ':' separator");
  auto parse = [](std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw IoError("matrix file: cannot parse number '" + std::string(s) + "'");
    }
    return v;
  };
  return {parse(text.substr(0, colon)), parse(text.substr(colon + 1))};
}

std::vector<Complex> parse_row(const std::string& line) {
  std::vector<Complex> row;
  std::string_view rest(line);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    row.push_back(parse_value(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return row;
}

TimeGrid grid_from(const Header& h) {
  try {
    return TimeGrid(h.dt, h.rows, h.trigger);
  } catch (const InvalidInput& e) {
    throw IoError(std::string("matrix file: invalid grid in header: ") + e.what());
  }
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

}  // namespace

void write_complex_matrix(std::ostream& out, const TimeGrid& grid, const CMatrix& m) {
  write_header(out, "tdm", grid);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      write_value(out, m(r, c));
    }
    out << '\n';
  }
}

std::pair<TimeGrid, CMatrix> read_complex_matrix(std::istream& in) {
  const Header h = read_header(in);
  if (h.kind != "tdm") throw IoError("matrix file: expected a tdm header");
  const TimeGrid grid = grid_from(h);
  const auto n = static_cast<Eigen::Index>(h.rows);
  CMatrix m(n, n);
  std::string line;
  for (Eigen::Index r = 0; r < n; ++r) {
    if (!std::getline(in, line)) throw IoError("matrix file: truncated at row " + std::to_string(r));
    const auto row = parse_row(line);
    if (static_cast<Eigen::Index>(row.size()) != n) {
      throw IoError("matrix file: row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                    " values, expected " + std::to_string(n));
    }
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
  }
  return {grid, std::move(m)};
}

void write_tdm(std::ostream& out, const TemporalDensityMatrix& rho) { write_complex_matrix(out, rho.grid(), rho.matrix()); }

void write_tdm(const std::filesystem::path& path, const TemporalDensityMatrix& rho) {
  auto out = open_out(path);
  write_tdm(out, rho);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

TemporalDensityMatrix read_tdm(std::istream& in) {
  auto [grid, m] = read_complex_matrix(in);
  try {
    return TemporalDensityMatrix(grid, std::move(m));
  } catch (const InvalidInput& e) {
    throw IoError(std::string("matrix file: not a valid density matrix: ") + e.what());
  }
}

TemporalDensityMatrix read_tdm(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_tdm(in);
}

void write_tmf(std::ostream& out, const TemporalModeFunction& phi) {
  write_header(out, "tmf", phi.grid());
  for (Eigen::Index j = 0; j < phi.amplitudes().size(); ++j) {
    write_value(out, phi.amplitudes()(j));
    out << '\n';
  }
}

void write_tmf(const std::filesystem::path& path, const TemporalModeFunction& phi) {
  auto out = open_out(path);
  write_tmf(out, phi);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

TemporalModeFunction read_tmf(std::istream& in) {
  const Header h = read_header(in);
  if (h.kind != "tmf") throw IoError("matrix file: expected a tmf header");
  const TimeGrid grid = grid_from(h);
  CVector amp(static_cast<Eigen::Index>(h.rows));
  std::string line;
  for (Eigen::Index j = 0; j < amp.size(); ++j) {
    if (!std::getline(in, line)) throw IoError("matrix file: truncated mode function");
    amp(j) = parse_value(line);
  }
  try {
    return TemporalModeFunction(grid, std::move(amp));
  } catch (const InvalidInput& e) {
    throw IoError(std::string("matrix file: not a normalized mode: ") + e.what());
  }
}

TemporalModeFunction read_tmf(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_tmf(in);
}

}  // namespace phtomo
