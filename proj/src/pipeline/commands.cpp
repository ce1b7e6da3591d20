#include "phtomo/pipeline/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>

#include "phtomo/accumulation/reduced_set_io.hpp"
#include "phtomo/modes/matrix_io.hpp"
#include "phtomo/reconstruction/report_io.hpp"
#include "phtomo/sim/trace_io.hpp"

namespace phtomo {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::string indexed(const char* stem, std::size_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%02zu.%s", stem, i, ext);
  return buf;
}

TraceFileHeader header_for(const TimeGrid& grid, double detuning, std::uint64_t n, std::uint64_t seed) {
  TraceFileHeader h;
  h.bin_count = static_cast<std::uint32_t>(grid.bin_count());
  h.n_traces = n;
  h.bin_width = grid.bin_width();
  h.trigger_index = static_cast<std::uint32_t>(grid.trigger_index());
  h.detuning = detuning;
  h.seed = seed;
  return h;
}

AcquireOptions acquire_options(const ExperimentConfig& cfg) {
  AcquireOptions opts;
  opts.quiet_region = cfg.quiet_region;
  opts.chunk_size = cfg.chunk_size;
  opts.workers = cfg.workers;
  return opts;
}

ReconstructionOptions reconstruction_options(const ExperimentConfig& cfg, Scenario scenario) {
  ReconstructionOptions opts = cfg.reconstruction;
  opts.virtual_shift = scenario_shift(cfg, scenario);
  return opts;
}

AutocorrelationMatrix accumulate_file(const fs::path& path, std::size_t chunk) {
  TraceFileReader reader(path);
  if (reader.header().n_traces == 0) throw IoError("trace file '" + path.string() + "' holds no traces");
  AutocorrelationAccumulator acc(reader.header().grid(), reader.header().detuning);
  while (reader.remaining() > 0) acc.add(reader.read(chunk));
  return acc.result();
}

void log_report(const ReconstructionReport& r, std::ostream& log) {
  log << "  reconstruction: " << to_string(r.status) << " after " << r.iterations << " iterations, cost "
      << r.cost_history.front() << " -> " << r.final_cost << ", estimated efficiency " << r.estimated_efficiency
      << '\n';
  log << "  eigenvalues:";
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(5, r.eigenvalues.size()); ++i) log << ' ' << r.eigenvalues(i);
  log << '\n';
}

}  // namespace

TemporalDensityMatrix source_tdm(const ExperimentConfig& cfg, Scenario scenario) {
  const TimeGrid grid = cfg.grid();
  if (scenario == Scenario::eom) {
    return eom_mixed_tdm(cfg.cavity.linewidth_gamma, cfg.eom, grid);
  }
  return tmf_to_tdm(rising_exponential_tmf(cfg.cavity, grid));
}

TemporalDensityMatrix theory_tdm(const ExperimentConfig& cfg, Scenario scenario) {
  auto rho = source_tdm(cfg, scenario);
  if (scenario == Scenario::virtual_shift) return apply_virtual_shift(rho, cfg.virtual_shift);
  return rho;
}

double scenario_shift(const ExperimentConfig& cfg, Scenario scenario) {
  return scenario == Scenario::virtual_shift ? cfg.virtual_shift : 0.0;
}

int cmd_theory(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  cfg.validate();
  ensure_dir(out_dir);
  const auto rho = theory_tdm(cfg, cfg.scenario);
  const auto eig = eigendecompose(rho);
  write_tdm(out_dir / "tdm.txt", rho);
  CVector phi = eig.eigenvectors.col(0).conjugate();
  Eigen::Index imax = 0;
  phi.cwiseAbs().maxCoeff(&imax);
  if (std::abs(phi(imax)) > 0.0) phi *= std::abs(phi(imax)) / phi(imax);
  if (cfg.scenario == Scenario::virtual_shift) {
    // Keep the analytic phase convention: phi_shifted = phi e^{-i Delta t}.
    const auto base = rising_exponential_tmf(cfg.cavity, cfg.grid());
    phi = base.amplitudes();
    for (Eigen::Index j = 0; j < phi.size(); ++j) {
      const double t = cfg.grid().time(static_cast<std::size_t>(j));
      phi(j) *= Complex(std::cos(cfg.virtual_shift * t), -std::sin(cfg.virtual_shift * t));
    }
  }
  write_tmf(out_dir / "tmf.txt", TemporalModeFunction::normalized(cfg.grid(), phi));
  std::ofstream ev(out_dir / "eigenvalues.txt");
  if (!ev) throw IoError("cannot open '" + (out_dir / "eigenvalues.txt").string() + "' for writing");
  char buf[40];
  for (Eigen::Index i = 0; i < eig.eigenvalues.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g\n", eig.eigenvalues(i));
    ev << buf;
  }
  if (!ev) throw IoError("failed writing eigenvalues to '" + out_dir.string() + "'");
  log << "theory (" << to_string(cfg.scenario) << "): p1 = " << eig.eigenvalues(0);
  if (eig.eigenvalues.size() > 1 && eig.eigenvalues(1) > 0.0) log << ", p1/p2 = " << eig.eigenvalues(0) / eig.eigenvalues(1);
  log << ", written to " << out_dir.string() << '\n';
  return exit_code::ok;
}

int cmd_simulate(const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  cfg.validate();
  ensure_dir(out_dir);
  const auto rho = source_tdm(cfg, cfg.scenario);
  const std::size_t chunk = std::max<std::size_t>(1, cfg.chunk_size);
  for (std::size_t i = 0; i < cfg.detunings.size(); ++i) {
    SimulatorConfig sc = cfg.simulator;
    sc.detuning = cfg.detunings[i];
    sc.rng_seed = detuning_seed(cfg.simulator.rng_seed, i);
    const TraceSampler sampler(rho, sc);
    const fs::path path = out_dir / indexed("traces", i, "tdmt");
    TraceFileWriter writer(path, header_for(rho.grid(), sc.detuning, cfg.n_traces, sc.rng_seed));
    for (std::size_t first = 0; first < cfg.n_traces; first += chunk) {
      writer.append(sampler.sample(first, std::min(chunk, cfg.n_traces - first), cfg.workers).traces);
    }
    writer.close();
    log << "simulated " << cfg.n_traces << " traces at " << sc.detuning / kTwoPi / 1e6 << " MHz -> " << path.string()
        << '\n';
  }
  return exit_code::ok;
}

int cmd_estimate(const std::vector<fs::path>& trace_files, const ExperimentConfig& cfg, const fs::path& out_dir,
                 std::ostream& log) {
  if (trace_files.empty()) throw InvalidInput("estimate: no trace files given");
  const std::size_t chunk = std::max<std::size_t>(1, cfg.chunk_size);
  std::optional<TimeGrid> grid;
  fs::path grid_source;
  std::optional<AutocorrelationMatrix> vacuum;
  if (cfg.vacuum_reference) {
    vacuum = accumulate_file(*cfg.vacuum_reference, chunk);
    grid = vacuum->grid;
    grid_source = *cfg.vacuum_reference;
  }
  std::optional<ReducedAutocorrelationSet> set;
  for (const auto& path : trace_files) {
    const auto full = accumulate_file(path, chunk);
    if (grid && !(full.grid == *grid)) {
      throw IoError("grid mismatch between '" + grid_source.string() + "' and '" + path.string() + "'");
    }
    if (!grid) {
      grid = full.grid;
      grid_source = path;
    }
    if (!set) set.emplace(*grid);
    BackgroundSubtraction sub = [&] {
      if (vacuum) return subtract_background(full, *vacuum);
      const QuietRegion quiet = cfg.quiet_region.value_or(default_quiet_region(*grid));
      set->set_quiet_region(quiet);
      return subtract_background(full, quiet);
    }();
    try {
      set->add(ReducedEntry{full.detuning, std::move(sub.reduced), full.n_samples});
    } catch (const InvalidInput& e) {
      throw InvalidInput("'" + path.string() + "': " + e.what());
    }
    set->flag(sub.borrowed);
    for (auto& w : sub.warnings) {
      if (std::find(set->warnings().begin(), set->warnings().end(), w) == set->warnings().end()) {
        set->warnings().push_back(std::move(w));
      }
    }
    log << "estimated " << path.string() << ": " << full.n_samples << " traces at " << full.detuning / kTwoPi / 1e6
        << " MHz\n";
  }
  const auto manifest = write_reduced_set(out_dir, *set);
  for (const auto& w : set->warnings()) log << "warning: " << w << '\n';
  log << "reduced set written to " << manifest.string() << '\n';
  return exit_code::ok;
}

int cmd_reconstruct(const fs::path& manifest, const ExperimentConfig& cfg, const fs::path& out_dir, std::ostream& log) {
  cfg.validate();
  const auto set = read_reduced_set(manifest);
  const auto report = iterative_reconstruct(set, reconstruction_options(cfg, cfg.scenario));
  write_report(out_dir, report);
  log_report(report, log);
  log << "report written to " << out_dir.string() << '\n';
  return report.converged() ? exit_code::ok : exit_code::not_converged;
}

json compare_with_theory(const TemporalDensityMatrix& rho_hat, const TemporalDensityMatrix& theory,
                         const ExperimentConfig& cfg) {
  json j;
  j["fidelity"] = uhlmann_fidelity(rho_hat, theory);
  const auto eh = eigendecompose(rho_hat);
  const auto et = eigendecompose(theory);
  json table = json::array();
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(10, eh.eigenvalues.size()); ++i) {
    table.push_back({{"index", i + 1}, {"reconstructed", eh.eigenvalues(i)}, {"theory", et.eigenvalues(i)}});
  }
  j["eigenvalues"] = table;
  auto ratio = [](const RVector& p) { return p.size() > 1 && p(1) > 0.0 ? json(p(0) / p(1)) : json(nullptr); };
  j["p1_over_p2"] = {{"reconstructed", ratio(eh.eigenvalues)}, {"theory", ratio(et.eigenvalues)}};
  j["purity"] = {{"reconstructed", purity(rho_hat)}, {"theory", purity(theory)}};
  const CMatrix& m = rho_hat.matrix();
  j["imag_to_real_ratio"] = m.imag().cwiseAbs().maxCoeff() / std::max(1e-300, m.real().cwiseAbs().maxCoeff());
  // Modulation leaves the diagonal of the unmodulated mode unchanged.
  const auto unmod = tmf_to_tdm(rising_exponential_tmf(cfg.cavity, rho_hat.grid()));
  const RVector d0 = unmod.matrix().diagonal().real();
  const RVector dh = m.diagonal().real();
  j["diagonal_vs_unmodulated"] = (dh - d0).cwiseAbs().maxCoeff() / d0.cwiseAbs().maxCoeff();
  return j;
}

int cmd_report(const fs::path& report_dir, const fs::path& theory_file, const ExperimentConfig& cfg,
               const fs::path& out_dir, std::ostream& log) {
  const auto rho_hat = read_tdm(report_dir / "rho_hat.txt");
  const auto theory = read_tdm(theory_file);
  if (!(rho_hat.grid() == theory.grid())) {
    throw InvalidInput("grid mismatch between '" + (report_dir / "rho_hat.txt").string() + "' and '" +
                       theory_file.string() + "'");
  }
  json summary = compare_with_theory(rho_hat, theory, cfg);
  summary["scenario"] = to_string(cfg.scenario);
  if (fs::exists(report_dir / "report.json")) {
    const json rep = read_json(report_dir / "report.json");
    summary["estimated_efficiency"] = rep.value("estimated_efficiency", 0.0);
    summary["status"] = rep.value("status", std::string("unknown"));
  }
  ensure_dir(out_dir);
  write_json(out_dir / "summary.json", summary);
  const auto eig = eigendecompose(rho_hat);
  CVector phi = eig.eigenvectors.col(0).conjugate();
  Eigen::Index imax = 0;
  phi.cwiseAbs().maxCoeff(&imax);
  if (std::abs(phi(imax)) > 0.0) phi *= std::abs(phi(imax)) / phi(imax);
  write_mode_csv(out_dir / "primary_mode.csv", TemporalModeFunction::normalized(rho_hat.grid(), phi));

  log << "fidelity " << summary["fidelity"].get<double>() << '\n';
  log << "  i  reconstructed  theory\n";
  for (const auto& row : summary["eigenvalues"]) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%3d  %.6f  %.6f\n", row["index"].get<int>(), row["reconstructed"].get<double>(),
                  row["theory"].get<double>());
    log << buf;
  }
  if (cfg.scenario == Scenario::eom) {
    log << "diagonal vs unmodulated (relative sup-norm) " << summary["diagonal_vs_unmodulated"].get<double>() << '\n';
  }
  return exit_code::ok;
}

int cmd_run_all(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  int worst = exit_code::ok;
  json overview = json::object();
  for (const Scenario scenario : cfg.scenarios) {
    ExperimentConfig sc = cfg;
    sc.scenario = scenario;
    const fs::path dir = cfg.output / to_string(scenario);
    log << "== " << to_string(scenario) << " ==\n";
    cmd_theory(sc, dir / "theory", log);

    AcquireOptions opts = acquire_options(sc);
    std::map<std::size_t, std::unique_ptr<TraceFileWriter>> writers;
    if (sc.keep_traces) {
      ensure_dir(dir / "traces");
      opts.on_chunk = [&](std::size_t i, const QuadratureTraceBatch& chunk) {
        auto& w = writers[i];
        if (!w) {
          w = std::make_unique<TraceFileWriter>(
              dir / "traces" / indexed("traces", i, "tdmt"),
              header_for(chunk.grid, chunk.detuning, sc.n_traces, chunk.config_snapshot.rng_seed));
        }
        w->append(chunk.traces);
      };
    }
    const auto set = acquire_set(source_tdm(sc, scenario), sc.detunings, sc.simulator, sc.n_traces, opts);
    for (auto& [i, w] : writers) w->close();
    write_reduced_set(dir / "reduced", set);
    log << "  acquired " << sc.n_traces << " traces at " << sc.detunings.size() << " detunings\n";

    const auto report = iterative_reconstruct(set, reconstruction_options(sc, scenario));
    write_report(dir / "reconstruction", report);
    log_report(report, log);
    if (!report.converged()) worst = exit_code::not_converged;

    json summary = compare_with_theory(report.rho_hat, theory_tdm(sc, scenario), sc);
    summary["scenario"] = to_string(scenario);
    summary["estimated_efficiency"] = report.estimated_efficiency;
    summary["status"] = to_string(report.status);
    write_json(dir / "summary.json", summary);
    log << "  fidelity vs theory " << summary["fidelity"].get<double>() << '\n';
    overview[to_string(scenario)] = summary;
  }
  ensure_dir(cfg.output);
  write_json(cfg.output / "summary.json", overview);
  return worst;
}

}  // namespace phtomo
