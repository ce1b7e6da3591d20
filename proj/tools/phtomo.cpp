// Command-line front end: theory, simulate, estimate, reconstruct, report, run-all.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "phtomo/errors.hpp"
#include "phtomo/pipeline/commands.hpp"
#include "phtomo/pipeline/config.hpp"

namespace fs = std::filesystem;
using namespace phtomo;

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string detunings;
  std::string scenario;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--config", f.config, "key=value configuration file");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--seed", f.seed, "simulation seed (u64)");
  sub->add_option("--detunings", f.detunings, "comma-separated detunings, rad/s or with MHz suffix");
  sub->add_option("--scenario", f.scenario, "unmodulated | virtual-shift | eom");
}

ExperimentConfig resolve(const CommonFlags& f) {
  ExperimentConfig cfg = f.config.empty() ? default_config() : load_config(f.config);
  if (!f.out.empty()) cfg.output = f.out;
  if (f.seed) cfg.simulator.rng_seed = *f.seed;
  if (!f.detunings.empty()) cfg.detunings = parse_frequency_list(f.detunings);
  if (!f.scenario.empty()) {
    cfg.scenario = parse_scenario(f.scenario);
    cfg.scenarios = {cfg.scenario};
  }
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polychromatic heterodyne tomography of single-photon temporal modes"};
  app.require_subcommand(1);

  CommonFlags flags;
  auto* theory = app.add_subcommand("theory", "write the theoretical TDM, TMF and eigenvalues");
  auto* simulate = app.add_subcommand("simulate", "simulate one binary trace file per detuning");
  auto* estimate = app.add_subcommand("estimate", "reduce trace files to autocorrelation matrices");
  auto* reconstruct = app.add_subcommand("reconstruct", "reconstruct the TDM from a reduced set manifest");
  auto* report = app.add_subcommand("report", "compare a reconstruction with a theory TDM");
  auto* run_all = app.add_subcommand("run-all", "run the full study for every configured scenario");
  for (auto* sub : {theory, simulate, estimate, reconstruct, report, run_all}) add_common(sub, flags);

  std::vector<std::string> trace_files;
  estimate->add_option("traces", trace_files, "binary trace files")->required();
  std::string manifest;
  reconstruct->add_option("manifest", manifest, "manifest.json of a reduced set")->required();
  std::string report_dir, theory_file;
  report->add_option("report_dir", report_dir, "directory holding rho_hat.txt and report.json")->required();
  report->add_option("theory", theory_file, "theoretical TDM file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const ExperimentConfig cfg = resolve(flags);
    const fs::path out = cfg.output;
    if (theory->parsed()) return cmd_theory(cfg, out, std::cout);
    if (simulate->parsed()) return cmd_simulate(cfg, out, std::cout);
    if (estimate->parsed()) {
      return cmd_estimate(std::vector<fs::path>(trace_files.begin(), trace_files.end()), cfg, out, std::cout);
    }
    if (reconstruct->parsed()) return cmd_reconstruct(manifest, cfg, out, std::cout);
    if (report->parsed()) return cmd_report(report_dir, theory_file, cfg, out, std::cout);
    if (run_all->parsed()) return cmd_run_all(cfg, std::cout);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code::io_error;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code::invalid_config;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code::io_error;
  }
  return exit_code::ok;
}
