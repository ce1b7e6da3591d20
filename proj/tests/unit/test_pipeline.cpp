#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "phtomo/accumulation/reduced_set_io.hpp"
#include "phtomo/modes/matrix_io.hpp"
#include "phtomo/pipeline/commands.hpp"
#include "phtomo/pipeline/config.hpp"
#include "phtomo/reconstruction/report_io.hpp"
#include "phtomo/sim/trace_io.hpp"
#include "support/temp_dir.hpp"

using namespace phtomo;
namespace fs = std::filesystem;

namespace {

const char* kTinyConfig = R"(# small grid for fast runs
bin_width = 2 ns
bin_count = 40
trigger_index = 30
gamma = 7 MHz
detunings = 0, 5, -5, 10, 15, 27 MHz
n_traces = 4000
chunk_size = 1500
eta = 0.8
seed = 11
max_iterations = 30
)";

ExperimentConfig tiny() {
  std::istringstream in(kTinyConfig);
  return parse_config(in);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PHTOMO_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST(Config, Defaults) {
  const auto cfg = default_config();
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.bin_count, 180u);
  EXPECT_EQ(cfg.trigger_index, 78u);
  EXPECT_EQ(cfg.detunings, default_detunings());
  ASSERT_EQ(cfg.detunings.size(), 8u);
  EXPECT_DOUBLE_EQ(cfg.detunings.back(), mhz_to_rad_s(27.0));
}

TEST(Config, Units) {
  EXPECT_DOUBLE_EQ(parse_angular_frequency("5 MHz"), mhz_to_rad_s(5.0));
  EXPECT_DOUBLE_EQ(parse_angular_frequency("3.5e7"), 3.5e7);
  EXPECT_DOUBLE_EQ(parse_frequency_hz("100 MHz"), 1e8);
  EXPECT_DOUBLE_EQ(parse_time("20 ns"), 20e-9);
  EXPECT_DOUBLE_EQ(parse_time("2e-9"), 2e-9);
  EXPECT_THROW(parse_angular_frequency("5 parsecs"), ConfigError);
  EXPECT_THROW(parse_time("abc"), ConfigError);
}

TEST(Config, FrequencyListUnitOnLastItem) {
  const auto v = parse_frequency_list("0, 5, 27 MHz");
  ASSERT_EQ(v.size(), 3u);
  EXPECT_DOUBLE_EQ(v[1], mhz_to_rad_s(5.0));
  EXPECT_DOUBLE_EQ(v[2], mhz_to_rad_s(27.0));
  const auto raw = parse_frequency_list("1e6, 2e6");
  EXPECT_DOUBLE_EQ(raw[1], 2e6);
}

TEST(Config, ParsesFile) {
  const auto cfg = tiny();
  EXPECT_EQ(cfg.bin_count, 40u);
  EXPECT_DOUBLE_EQ(cfg.bin_width, 2e-9);
  EXPECT_DOUBLE_EQ(cfg.simulator.efficiency, 0.8);
  EXPECT_EQ(cfg.simulator.rng_seed, 11u);
  EXPECT_EQ(cfg.detunings.size(), 6u);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, Rejections) {
  auto bad = [](const std::string& text) {
    std::istringstream in(text);
    return parse_config(in).validate();
  };
  EXPECT_THROW(bad("no_such_key = 1\n"), ConfigError);
  EXPECT_THROW(bad("bin_count\n"), ConfigError);
  EXPECT_THROW(bad("eta = 1.5\n"), ConfigError);
  EXPECT_THROW(bad("detunings = 0, 0 MHz\n"), ConfigError);
  EXPECT_THROW(bad("trigger_index = 500\n"), ConfigError);
  EXPECT_THROW(bad("max_iterations = 0\n"), ConfigError);
  EXPECT_THROW(bad("scenario = sideways\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/phtomo.cfg"), IoError);
}

TEST(Scenarios, TheoryAndSource) {
  const auto cfg = tiny();
  const auto unmod = theory_tdm(cfg, Scenario::unmodulated);
  const auto shifted = theory_tdm(cfg, Scenario::virtual_shift);
  EXPECT_EQ(source_tdm(cfg, Scenario::virtual_shift).matrix(), unmod.matrix());
  EXPECT_LT((shifted.matrix() - apply_virtual_shift(unmod, cfg.virtual_shift).matrix()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(scenario_shift(cfg, Scenario::virtual_shift), cfg.virtual_shift);
  EXPECT_EQ(scenario_shift(cfg, Scenario::eom), 0.0);
  EXPECT_LT(purity(theory_tdm(cfg, Scenario::eom)), 0.99);
}

TEST(Commands, StepByStepMatchesFiles) {
  TempDir dir;
  auto cfg = tiny();
  std::ostringstream log;
  ASSERT_EQ(cmd_theory(cfg, dir.path() / "theory", log), exit_code::ok);
  const auto theory = read_tdm(dir.path() / "theory" / "tdm.txt");
  EXPECT_EQ(theory.matrix(), theory_tdm(cfg, Scenario::unmodulated).matrix());
  EXPECT_TRUE(fs::exists(dir.path() / "theory" / "tmf.txt"));
  EXPECT_TRUE(fs::exists(dir.path() / "theory" / "eigenvalues.txt"));

  ASSERT_EQ(cmd_simulate(cfg, dir.path() / "traces", log), exit_code::ok);
  std::vector<fs::path> traces;
  for (const auto& e : fs::directory_iterator(dir.path() / "traces")) traces.push_back(e.path());
  std::sort(traces.begin(), traces.end());
  ASSERT_EQ(traces.size(), cfg.detunings.size());
  EXPECT_EQ(read_trace_file(traces[0]).size(), cfg.n_traces);

  ASSERT_EQ(cmd_estimate(traces, cfg, dir.path() / "reduced", log), exit_code::ok);
  const fs::path manifest = dir.path() / "reduced" / "manifest.json";
  const auto set = read_reduced_set(manifest);
  EXPECT_EQ(set.size(), cfg.detunings.size());

  // Streaming a file matches in-memory acquisition with the same seeds.
  AcquireOptions opts;
  opts.chunk_size = cfg.chunk_size;
  const auto direct = acquire_set(source_tdm(cfg, Scenario::unmodulated), cfg.detunings, cfg.simulator, cfg.n_traces, opts);
  for (std::size_t i = 0; i < set.size(); ++i) {
    EXPECT_LT((set.entries()[i].values - direct.entries()[i].values).cwiseAbs().maxCoeff(), 1e-9);
  }

  const int rc = cmd_reconstruct(manifest, cfg, dir.path() / "rec", log);
  EXPECT_TRUE(rc == exit_code::ok || rc == exit_code::not_converged);
  const auto report = read_json(dir.path() / "rec" / "report.json");
  EXPECT_EQ(report.at("converged").get<bool>(), rc == exit_code::ok);

  ASSERT_EQ(cmd_report(dir.path() / "rec", dir.path() / "theory" / "tdm.txt", cfg, dir.path() / "cmp", log),
            exit_code::ok);
  const auto summary = read_json(dir.path() / "cmp" / "summary.json");
  EXPECT_GT(summary.at("fidelity").get<double>(), 0.8);
  EXPECT_TRUE(fs::exists(dir.path() / "cmp" / "primary_mode.csv"));
}

TEST(Commands, RunAllIsReproducible) {
  TempDir dir;
  auto cfg = tiny();
  cfg.scenarios = {Scenario::unmodulated, Scenario::virtual_shift};
  cfg.output = dir.path() / "a";
  std::ostringstream log;
  const int rc = cmd_run_all(cfg, log);
  EXPECT_TRUE(rc == exit_code::ok || rc == exit_code::not_converged);
  for (const char* s : {"unmodulated", "virtual-shift"}) {
    EXPECT_TRUE(fs::exists(cfg.output / s / "summary.json")) << s;
    EXPECT_TRUE(fs::exists(cfg.output / s / "reconstruction" / "rho_hat.txt")) << s;
    EXPECT_TRUE(fs::exists(cfg.output / s / "reduced" / "manifest.json")) << s;
  }
  const auto overview = read_json(cfg.output / "summary.json");
  EXPECT_TRUE(overview.contains("virtual-shift"));

  auto again = cfg;
  again.output = dir.path() / "b";
  cmd_run_all(again, log);
  EXPECT_EQ(read_tdm(cfg.output / "unmodulated" / "reconstruction" / "rho_hat.txt").matrix(),
            read_tdm(again.output / "unmodulated" / "reconstruction" / "rho_hat.txt").matrix());
}

TEST(Commands, EstimateRejectsMissingFile) {
  TempDir dir;
  std::ostringstream log;
  EXPECT_THROW(cmd_estimate({dir.path() / "missing.tdmt"}, tiny(), dir.path() / "r", log), IoError);
  EXPECT_THROW(cmd_estimate({}, tiny(), dir.path() / "r", log), InvalidInput);
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  const fs::path cfg = dir.path() / "tiny.cfg";
  write_file(cfg, kTinyConfig);
  const std::string common = " --config " + cfg.string();

  EXPECT_EQ(run_cli("theory" + common + " --out " + (dir.path() / "th").string()), 0);
  EXPECT_TRUE(fs::exists(dir.path() / "th" / "tdm.txt"));

  write_file(dir.path() / "bad.cfg", "eta = 2\n");
  EXPECT_EQ(run_cli("theory --config " + (dir.path() / "bad.cfg").string()), 2);
  EXPECT_EQ(run_cli("theory" + common + " --scenario sideways"), 2);
  EXPECT_EQ(run_cli("theory --config " + (dir.path() / "none.cfg").string()), 3);
  EXPECT_EQ(run_cli("reconstruct" + common + " " + (dir.path() / "nope.json").string()), 3);

  write_file(dir.path() / "one.cfg", std::string(kTinyConfig) + "max_iterations = 1\n");
  EXPECT_EQ(run_cli("simulate --config " + (dir.path() / "one.cfg").string() + " --detunings \"0, 7 MHz\" --out " +
                    (dir.path() / "tr").string()),
            0);
  EXPECT_EQ(run_cli("estimate" + common + " --out " + (dir.path() / "red").string() + " " +
                    (dir.path() / "tr" / "traces_00.tdmt").string() + " " + (dir.path() / "tr" / "traces_01.tdmt").string()),
            0);
  EXPECT_EQ(run_cli("reconstruct --config " + (dir.path() / "one.cfg").string() + " --out " + (dir.path() / "rec").string() +
                    " " + (dir.path() / "red" / "manifest.json").string()),
            4);
  EXPECT_TRUE(fs::exists(dir.path() / "rec" / "report.json"));
}
