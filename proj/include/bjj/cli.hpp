#pragma once

// Command-line front end: `bjj <command> --config <file> [--a.b-c value ...]`.
//
// Exit codes: 0 success, 2 config or parse error, 3 numeric failure,
// 4 degenerate parameter map.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bjj/param_map.hpp"
#include "bjj/types.hpp"

namespace bjj::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitDegenerate = 4;

enum class Mode { Simulate, Synth, Fit, Convert, Validate, Compare };
enum class Model { TmbhNumeric, PendulumNumeric, Analytic };

struct TimeConfig {
  double t_end = 0.0;  ///< s
  std::size_t n_points = 0;
};

struct NoiseConfig {
  double sigma_phi = 0.0;
  double sigma_n = 0.0;
  std::uint64_t seed = 0;
};

struct FitConfig {
  std::optional<double> weight_phase;
  std::optional<double> weight_imbalance;
  std::optional<double> guard;  ///< s
  std::vector<PendulumParams> extra_starts;
};

struct PathConfig {
  std::filesystem::path output_dir = ".";
  std::optional<std::filesystem::path> phase;      ///< fit input; defaults to output_dir/phase.csv
  std::optional<std::filesystem::path> imbalance;  ///< fit input; defaults to output_dir/imbalance.csv
};

struct RunConfig {
  Mode mode = Mode::Simulate;
  Model model = Model::Analytic;
  std::optional<TmbhParams> tmbh;
  std::optional<PendulumParams> pendulum;
  std::optional<double> n_atoms;        ///< from pendulum.N or tmbh.N
  double n_atoms_sigma = 0.0;
  std::vector<InitialState> initial;
  TimeConfig time;
  NoiseConfig noise;
  FitConfig fit;
  param_map::MapOptions map;
  PathConfig paths;
};

/// Applies `--a.b-c value` / `--a.b-c=value` overrides to a JSON document.
/// Dashes in keys become underscores; values are parsed as JSON when
/// possible and kept as strings otherwise.
void apply_overrides(nlohmann::json& doc, const std::vector<std::string>& overrides);

/// Validates and converts a JSON document.  Throws ConfigError.
RunConfig parse_config(const nlohmann::json& doc, Mode mode);

/// Reads the file, applies overrides and the BJJ_SEED environment variable.
RunConfig load_config(const std::filesystem::path& file, Mode mode,
                      const std::vector<std::string>& overrides);

// Commands.  Each writes its outputs under cfg.paths.output_dir and returns
// the JSON summary it wrote (if any).
nlohmann::json cmd_simulate(const RunConfig& cfg);
nlohmann::json cmd_synth(const RunConfig& cfg);
nlohmann::json cmd_fit(const RunConfig& cfg);
nlohmann::json cmd_convert(const RunConfig& cfg);
nlohmann::json cmd_validate(const RunConfig& cfg);
nlohmann::json cmd_compare(const RunConfig& cfg);

/// Full CLI entry point; argv[0] is the program name.  Never throws.
int run(const std::vector<std::string>& argv);

}  // namespace bjj::cli
