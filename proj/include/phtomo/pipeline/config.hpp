#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "phtomo/accumulation/reduced_set.hpp"
#include "phtomo/errors.hpp"
#include "phtomo/modes/mode_families.hpp"
#include "phtomo/reconstruction/options.hpp"
#include "phtomo/sim/simulator.hpp"

namespace phtomo {

struct ConfigError : InvalidInput {
  using InvalidInput::InvalidInput;
};

enum class Scenario { unmodulated, virtual_shift, eom };

const char* to_string(Scenario s);
/// Accepts "unmodulated", "virtual-shift", "eom". Throws ConfigError.
Scenario parse_scenario(const std::string& name);

/// Flat key=value configuration. `#` starts a comment. Angular frequencies
/// take a plain value in rad/s or a value with an `MHz` suffix (2 pi x MHz);
/// detector_bandwidth with `MHz` is an ordinary frequency in Hz. Times take
/// plain seconds or an `ns` suffix.
struct ExperimentConfig {
  Scenario scenario = Scenario::unmodulated;
  std::vector<Scenario> scenarios{Scenario::unmodulated, Scenario::virtual_shift, Scenario::eom};  ///< run-all

  double bin_width = 2e-9;
  std::size_t bin_count = 180;
  std::size_t trigger_index = 78;

  CavityParams cavity;
  double virtual_shift = mhz_to_rad_s(5.0);
  EomParams eom;

  std::vector<double> detunings;  ///< rad/s
  std::size_t n_traces = 200000;

  SimulatorConfig simulator;
  std::size_t chunk_size = 20000;
  unsigned workers = 1;
  bool keep_traces = false;

  std::optional<QuietRegion> quiet_region;
  std::optional<std::filesystem::path> vacuum_reference;

  ReconstructionOptions reconstruction;

  std::filesystem::path output = "phtomo_out";

  TimeGrid grid() const { return TimeGrid(bin_width, bin_count, trigger_index); }
  /// Throws ConfigError on inconsistent values.
  void validate() const;
};

/// Default schedule: 0, +-5, +-10, 15, 20, 27 MHz.
std::vector<double> default_detunings();

ExperimentConfig default_config();
ExperimentConfig parse_config(std::istream& in, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies one key=value assignment; throws ConfigError for unknown keys or
/// malformed values.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

double parse_angular_frequency(const std::string& text);
double parse_frequency_hz(const std::string& text);
double parse_time(const std::string& text);
/// Comma-separated angular frequencies. A unit on the last item applies to
/// every item without one ("0, 5, 27 MHz").
std::vector<double> parse_frequency_list(const std::string& text);

}  // namespace phtomo
