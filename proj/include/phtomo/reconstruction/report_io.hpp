#pragma once

#include <filesystem>

#include <json.hpp>

#include "phtomo/reconstruction/iterative.hpp"

namespace phtomo {

nlohmann::json report_to_json(const ReconstructionReport& report);

/// Writes report.json, rho_hat.txt and primary_mode.csv into `dir`.
void write_report(const std::filesystem::path& dir, const ReconstructionReport& report);

/// CSV with header `t,re,im,abs2`; t in seconds, amplitudes in units of
/// 1/sqrt(second) (phi(t_j) = amplitude_j / sqrt(bin_width)).
void write_mode_csv(const std::filesystem::path& path, const TemporalModeFunction& phi);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace phtomo
