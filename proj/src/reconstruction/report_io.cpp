#include "phtomo/reconstruction/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "phtomo/errors.hpp"
#include "phtomo/modes/matrix_io.hpp"

namespace phtomo {

namespace fs = std::filesystem;
using nlohmann::json;

nlohmann::json report_to_json(const ReconstructionReport& r) {
  json j;
  j["status"] = to_string(r.status);
  j["converged"] = r.converged();
  j["iterations"] = r.iterations;
  j["final_cost"] = r.final_cost;
  j["cost_history"] = r.cost_history;
  j["eigenvalues"] = std::vector<double>(r.eigenvalues.data(), r.eigenvalues.data() + r.eigenvalues.size());
  j["estimated_efficiency"] = r.estimated_efficiency;
  j["linear_trace"] = r.linear_trace;
  j["virtual_shift"] = r.virtual_shift;
  j["grid"] = {{"bin_width", r.rho_hat.grid().bin_width()},
               {"bin_count", r.rho_hat.grid().bin_count()},
               {"trigger_index", r.rho_hat.grid().trigger_index()}};
  std::size_t rank_counts[3] = {0, 0, 0};
  for (Eigen::Index k = 0; k < r.condition_rank.cols(); ++k) {
    for (Eigen::Index i = k + 1; i < r.condition_rank.rows(); ++i) ++rank_counts[std::min<int>(r.condition_rank(i, k), 2)];
  }
  j["condition"] = {{"offdiagonal_rank0", rank_counts[0]},
                    {"offdiagonal_rank1", rank_counts[1]},
                    {"offdiagonal_rank2", rank_counts[2]},
                    {"rank_deficient_offdiagonal", r.rank_deficient_offdiagonal}};
  j["flagged_entries"] = r.flagged_entries;
  j["warnings"] = r.warnings;
  j["error_bars"] = nullptr;
  return j;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
}

void write_mode_csv(const fs::path& path, const TemporalModeFunction& phi) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const double scale = 1.0 / std::sqrt(phi.grid().bin_width());
  out << "t,re,im,abs2\n";
  char buf[128];
  for (Eigen::Index j = 0; j < phi.amplitudes().size(); ++j) {
    const Complex a = phi.amplitudes()(j) * scale;
    std::snprintf(buf, sizeof buf, "%.9e,%.17g,%.17g,%.17g\n", phi.grid().time(static_cast<std::size_t>(j)), a.real(),
                  a.imag(), std::norm(a));
    out << buf;
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_report(const fs::path& dir, const ReconstructionReport& report) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  write_json(dir / "report.json", report_to_json(report));
  write_tdm(dir / "rho_hat.txt", report.rho_hat);
  write_mode_csv(dir / "primary_mode.csv", report.primary_mode);
}

}  // namespace phtomo
