#pragma once

// Experiment configuration: one INI file per experiment, see docs/config.md.

#include "turnpike/mpc.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace turnpike {

enum class ExperimentKind { Turnpike, Sensitivity, OpnormSweep, MpcCompare, SuperpositionSuite };

std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(std::string_view name);

struct GridConfig {
  int nx = 31;
  int ny = 11;
  double lx = 3.0;
  double ly = 1.0;
  BoundaryKind bc = BoundaryKind::Dirichlet;
};

struct TimeConfig {
  double horizon = 10.0;
  GridScheme scheme = GridScheme::Uniform;
  int n = 64;
  /// c for exponential grids, tau for piecewise uniform grids.
  double parameter = 1.0;
};

struct TurnpikeConfig {
  std::vector<double> e_values{0.0, 1.0, 5.0};
  std::vector<double> horizons{5.0, 10.0, 20.0};
};

struct SensitivityConfig {
  double amplitude = 1.0;
  /// Support of eps2 starts at this fraction of T.
  double support_start = 0.5;
};

struct OpnormConfig {
  std::vector<double> horizons{2.0, 5.0, 10.0, 20.0};
  int samples = 20;
};

struct MpcCompareConfig {
  std::vector<int> n_values{5, 8, 11, 21, 31, 41};
  std::vector<GridScheme> schemes{GridScheme::Uniform, GridScheme::Exponential,
                                  GridScheme::PiecewiseUniform};
};

struct SuperpositionConfig {
  int d = 3;
  int trajectories = 100;
  std::vector<double> magnitudes{1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5};
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Turnpike;
  std::uint64_t seed = 42;
  /// Empty means "decide from the environment".
  std::string output;
  /// nullopt means "auto" (estimated from the KKT operator norm).
  std::optional<double> mu;
  double theta = 0.5;

  GridConfig grid{};
  OCPSpec problem{};
  TimeConfig time{};
  TurnpikeConfig turnpike{};
  SensitivityConfig sensitivity{};
  OpnormConfig opnorm{};
  MPCConfig mpc{};
  MpcCompareConfig mpc_compare{};
  SuperpositionConfig superposition{};
};

/// Parse and validate. Throws ConfigError carrying the line and field.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

/// INI text with every setting spelled out; parse_config(render) round-trips.
std::string render_config(const ExperimentConfig& cfg);

SpatialGrid make_grid(const GridConfig& cfg);

}  // namespace turnpike
