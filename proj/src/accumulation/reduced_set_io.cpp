#include "phtomo/accumulation/reduced_set_io.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "phtomo/errors.hpp"

namespace phtomo {

namespace fs = std::filesystem;
using nlohmann::json;

void write_real_csv(const fs::path& path, const RMatrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  char buf[32];
  for (Eigen::Index j = 0; j < m.rows(); ++j) {
    std::string line;
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", m(j, k));
      if (k) line += ',';
      line += buf;
    }
    out << line << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

RMatrix read_real_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) {
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
      }
      row.push_back(v);
      p = next;
      if (p < end && *p == ',') ++p;
      else if (p < end && *p != '\r') throw IoError(path.string() + ":" + std::to_string(lineno) + ": bad separator");
      else break;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError("'" + path.string() + "' contains no data");
  RMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    for (std::size_t k = 0; k < rows[j].size(); ++k) m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = rows[j][k];
  }
  return m;
}

fs::path write_reduced_set(const fs::path& dir, const ReducedAutocorrelationSet& set) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());

  json manifest;
  manifest["format"] = "phtomo-reduced-set";
  manifest["version"] = 1;
  manifest["grid"] = {{"bin_width", set.grid().bin_width()},
                      {"bin_count", set.grid().bin_count()},
                      {"trigger_index", set.grid().trigger_index()}};
  if (set.quiet_region()) {
    manifest["quiet_region"] = {{"begin", set.quiet_region()->begin}, {"end", set.quiet_region()->end}};
  } else {
    manifest["quiet_region"] = nullptr;
  }
  json entries = json::array();
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& e = set.entries()[i];
    char name[32];
    std::snprintf(name, sizeof name, "reduced_%02zu.csv", i);
    write_real_csv(dir / name, e.values);
    entries.push_back({{"detuning", e.detuning}, {"n_samples", e.n_samples}, {"file", name}});
  }
  manifest["entries"] = entries;
  json flagged = json::array();
  const auto& f = set.flagged();
  for (Eigen::Index j = 0; j < f.rows(); ++j) {
    for (Eigen::Index k = j; k < f.cols(); ++k) {
      if (f(j, k)) flagged.push_back({j, k});
    }
  }
  manifest["flagged_entries"] = flagged;
  manifest["warnings"] = set.warnings();
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  manifest["created"] = stamp;

  const fs::path path = dir / "manifest.json";
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
  return path;
}

ReducedAutocorrelationSet read_reduced_set(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest '" + manifest_path.string() + "'");
  json m;
  try {
    m = json::parse(in);
    const auto& g = m.at("grid");
    ReducedAutocorrelationSet set(TimeGrid(g.at("bin_width").get<double>(), g.at("bin_count").get<std::size_t>(),
                                           g.at("trigger_index").get<std::size_t>()));
    if (m.contains("quiet_region") && !m["quiet_region"].is_null()) {
      set.set_quiet_region(QuietRegion{m["quiet_region"].at("begin").get<std::size_t>(),
                                       m["quiet_region"].at("end").get<std::size_t>()});
    }
    const fs::path base = manifest_path.parent_path();
    const auto n = static_cast<Eigen::Index>(set.grid().bin_count());
    for (const auto& e : m.at("entries")) {
      const fs::path csv = base / e.at("file").get<std::string>();
      RMatrix values = read_real_csv(csv);
      if (values.rows() != n || values.cols() != n) {
        throw IoError("'" + csv.string() + "' is " + std::to_string(values.rows()) + "x" +
                      std::to_string(values.cols()) + ", manifest grid has " + std::to_string(n) + " bins");
      }
      set.add(ReducedEntry{e.at("detuning").get<double>(), std::move(values), e.at("n_samples").get<std::uint64_t>()});
    }
    FlagMatrix flags = FlagMatrix::Zero(n, n);
    for (const auto& p : m.at("flagged_entries")) {
      const auto j = p.at(0).get<Eigen::Index>();
      const auto k = p.at(1).get<Eigen::Index>();
      if (j < 0 || k < 0 || j >= n || k >= n) throw IoError("manifest flagged entry out of range");
      flags(j, k) = 1;
    }
    set.flag(flags);
    if (m.contains("warnings")) {
      for (const auto& w : m["warnings"]) set.warnings().push_back(w.get<std::string>());
    }
    return set;
  } catch (const json::exception& e) {
    throw IoError("manifest '" + manifest_path.string() + "': " + e.what());
  } catch (const InvalidInput& e) {
    throw IoError("manifest '" + manifest_path.string() + "': " + e.what());
  }
}

}  // namespace phtomo
