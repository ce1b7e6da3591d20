#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include <json.hpp>

#include "phtomo/pipeline/config.hpp"
#include "phtomo/reconstruction/iterative.hpp"

namespace phtomo {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int invalid_config = 2;
inline constexpr int io_error = 3;
inline constexpr int not_converged = 4;
}  // namespace exit_code

/// Density matrix the reconstruction should recover for a scenario.
TemporalDensityMatrix theory_tdm(const ExperimentConfig& cfg, Scenario scenario);
/// Density matrix of the photon that is physically measured. For
/// virtual-shift this is the unmodulated photon; the shift is applied at
/// reconstruction time.
TemporalDensityMatrix source_tdm(const ExperimentConfig& cfg, Scenario scenario);
/// Virtual shift used when reconstructing a scenario.
double scenario_shift(const ExperimentConfig& cfg, Scenario scenario);

// Every command throws ConfigError / InvalidInput for bad input and IoError
// for file problems; the returned value is an exit code.

/// tdm.txt, tmf.txt (primary mode) and eigenvalues.txt.
int cmd_theory(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

/// traces_<i>.tdmt for every detuning.
int cmd_simulate(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

/// Reduced autocorrelation CSVs and manifest.json from trace files.
int cmd_estimate(const std::vector<std::filesystem::path>& trace_files, const ExperimentConfig& cfg,
                 const std::filesystem::path& out_dir, std::ostream& log);

/// report.json, rho_hat.txt, primary_mode.csv. Returns not_converged when
/// the iteration limit was hit; the artifacts are written regardless.
int cmd_reconstruct(const std::filesystem::path& manifest, const ExperimentConfig& cfg,
                    const std::filesystem::path& out_dir, std::ostream& log);

/// Compares a reconstruction with a theory TDM; writes summary.json and
/// primary_mode.csv into out_dir.
int cmd_report(const std::filesystem::path& report_dir, const std::filesystem::path& theory_file,
               const ExperimentConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log);

/// Full study: theory, acquisition, reconstruction and report for every
/// configured scenario under cfg.output/<scenario>/.
int cmd_run_all(const ExperimentConfig& cfg, std::ostream& log);

/// Summary comparing a reconstruction with theory.
nlohmann::json compare_with_theory(const TemporalDensityMatrix& rho_hat, const TemporalDensityMatrix& theory,
                                   const ExperimentConfig& cfg);

}  // namespace phtomo
