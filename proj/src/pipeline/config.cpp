#include "phtomo/pipeline/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

namespace phtomo {
namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Splits "12.5 MHz" into (12.5, "mhz").
std::pair<double, std::string> number_with_unit(const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || !std::isfinite(v)) throw ConfigError("not a number: '" + text + "'");
  return {v, lower(trim(std::string(ptr, t.data() + t.size())))};
}

double parse_double(const std::string& text) {
  auto [v, unit] = number_with_unit(text);
  if (!unit.empty()) throw ConfigError("unexpected unit in '" + text + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) throw ConfigError("not a non-negative integer: '" + text + "'");
  return v;
}

bool parse_bool(const std::string& text) {
  const std::string t = lower(trim(text));
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("not a boolean: '" + text + "'");
}

bool is_none(const std::string& text) {
  const std::string t = lower(trim(text));
  return t == "none" || t.empty();
}

double angular_from(double v, const std::string& unit, const std::string& text) {
  if (unit.empty() || unit == "rad/s") return v;
  if (unit == "mhz") return mhz_to_rad_s(v);
  throw ConfigError("unknown angular-frequency unit in '" + text + "'");
}

}  // namespace

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::unmodulated:
      return "unmodulated";
    case Scenario::virtual_shift:
      return "virtual-shift";
    case Scenario::eom:
      return "eom";
  }
  return "unknown";
}

Scenario parse_scenario(const std::string& name) {
  const std::string t = lower(trim(name));
  if (t == "unmodulated") return Scenario::unmodulated;
  if (t == "virtual-shift" || t == "virtual_shift") return Scenario::virtual_shift;
  if (t == "eom") return Scenario::eom;
  throw ConfigError("unknown scenario '" + name + "' (expected unmodulated, virtual-shift or eom)");
}

double parse_angular_frequency(const std::string& text) {
  auto [v, unit] = number_with_unit(text);
  return angular_from(v, unit, text);
}

double parse_frequency_hz(const std::string& text) {
  auto [v, unit] = number_with_unit(text);
  if (unit.empty() || unit == "hz") return v;
  if (unit == "mhz") return v * 1e6;
  if (unit == "ghz") return v * 1e9;
  throw ConfigError("unknown frequency unit in '" + text + "'");
}

double parse_time(const std::string& text) {
  auto [v, unit] = number_with_unit(text);
  if (unit.empty() || unit == "s") return v;
  if (unit == "ns") return v * 1e-9;
  if (unit == "us") return v * 1e-6;
  throw ConfigError("unknown time unit in '" + text + "'");
}

std::vector<double> parse_frequency_list(const std::string& text) {
  std::vector<std::pair<double, std::string>> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) throw ConfigError("empty item in list '" + text + "'");
    items.push_back(number_with_unit(item));
  }
  if (items.empty()) throw ConfigError("empty frequency list");
  const std::string shared = items.back().second;
  std::vector<double> out;
  for (auto& [v, unit] : items) out.push_back(angular_from(v, unit.empty() ? shared : unit, text));
  return out;
}

std::vector<double> default_detunings() {
  std::vector<double> out;
  for (double mhz : {0.0, 5.0, -5.0, 10.0, -10.0, 15.0, 20.0, 27.0}) out.push_back(mhz_to_rad_s(mhz));
  return out;
}

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  cfg.detunings = default_detunings();
  cfg.simulator.efficiency = 1.0;
  return cfg;
}

void ExperimentConfig::validate() const {
  try {
    (void)grid();
    cavity.validate();
    eom.validate();
    simulator.validate();
    reconstruction.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  if (detunings.empty()) throw ConfigError("detunings: at least one detuning is required");
  std::set<double> seen;
  for (double d : detunings) {
    if (!seen.insert(d).second) throw ConfigError("detunings: duplicate value " + std::to_string(d) + " rad/s");
  }
  if (n_traces < 1) throw ConfigError("n_traces must be at least 1");
  if (chunk_size < 1) throw ConfigError("chunk_size must be at least 1");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (scenarios.empty()) throw ConfigError("scenarios: at least one scenario is required");
  if (quiet_region) {
    if (quiet_region->begin >= quiet_region->end || quiet_region->end > bin_count) {
      throw ConfigError("quiet region must satisfy quiet_begin < quiet_end <= bin_count");
    }
  }
}

void apply_setting(ExperimentConfig& cfg, const std::string& raw_key, const std::string& value) {
  const std::string key = lower(trim(raw_key));
  auto& sim = cfg.simulator;
  auto& rec = cfg.reconstruction;
  if (key == "scenario") cfg.scenario = parse_scenario(value);
  else if (key == "scenarios") {
    cfg.scenarios.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) cfg.scenarios.push_back(parse_scenario(item));
  } else if (key == "bin_width") cfg.bin_width = parse_time(value);
  else if (key == "bin_count") cfg.bin_count = parse_u64(value);
  else if (key == "trigger_index") cfg.trigger_index = parse_u64(value);
  else if (key == "gamma" || key == "linewidth_gamma") cfg.cavity.linewidth_gamma = parse_angular_frequency(value);
  else if (key == "gain_bandwidth") {
    if (is_none(value)) cfg.cavity.gain_bandwidth.reset();
    else cfg.cavity.gain_bandwidth = parse_angular_frequency(value);
  } else if (key == "virtual_shift" || key == "delta") cfg.virtual_shift = parse_angular_frequency(value);
  else if (key == "modulation_frequency" || key == "omega_m") cfg.eom.modulation_frequency = parse_angular_frequency(value);
  else if (key == "modulation_index" || key == "beta") cfg.eom.modulation_index = parse_double(value);
  else if (key == "detunings") cfg.detunings = parse_frequency_list(value);
  else if (key == "n_traces") cfg.n_traces = parse_u64(value);
  else if (key == "efficiency" || key == "eta") sim.efficiency = parse_double(value);
  else if (key == "detector_bandwidth") {
    if (is_none(value)) sim.detector_bandwidth.reset();
    else sim.detector_bandwidth = parse_frequency_hz(value);
  } else if (key == "dc_bias") sim.dc_bias = parse_double(value);
  else if (key == "background_noise_rms") sim.background_noise_rms = parse_double(value);
  else if (key == "background_correlation_time") sim.background_correlation_time = parse_time(value);
  else if (key == "seed" || key == "rng_seed") sim.rng_seed = parse_u64(value);
  else if (key == "randomize_theta0") sim.randomize_theta0 = parse_bool(value);
  else if (key == "theta0") sim.theta0 = parse_double(value);
  else if (key == "chunk_size") cfg.chunk_size = parse_u64(value);
  else if (key == "workers") cfg.workers = static_cast<unsigned>(parse_u64(value));
  else if (key == "keep_traces") cfg.keep_traces = parse_bool(value);
  else if (key == "quiet_begin" || key == "quiet_end") {
    if (!cfg.quiet_region) cfg.quiet_region = QuietRegion{0, cfg.bin_count};
    (key == "quiet_begin" ? cfg.quiet_region->begin : cfg.quiet_region->end) = parse_u64(value);
  } else if (key == "vacuum_reference") {
    if (is_none(value)) cfg.vacuum_reference.reset();
    else cfg.vacuum_reference = trim(value);
  } else if (key == "max_iterations") rec.max_iterations = parse_u64(value);
  else if (key == "cost_tolerance") rec.cost_tolerance = parse_double(value);
  else if (key == "rank_cap") {
    if (is_none(value)) rec.rank_cap.reset();
    else rec.rank_cap = parse_u64(value);
  } else if (key == "reconstruction_seed") rec.rng_seed = parse_u64(value);
  else if (key == "init_perturbation") rec.init_perturbation = parse_double(value);
  else if (key == "max_pairs_per_iteration") rec.max_pairs_per_iteration = parse_u64(value);
  else if (key == "output" || key == "out") cfg.output = trim(value);
  else throw ConfigError("unknown key '" + raw_key + "'");
}

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
  ExperimentConfig cfg = default_config();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  return parse_config(in, path.string());
}

}  // namespace phtomo
