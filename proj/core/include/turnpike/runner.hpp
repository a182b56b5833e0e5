#pragma once

// Experiment orchestration: run one configured experiment and persist its
// CSV series, summary.json and MANIFEST into an output directory.

#include "turnpike/analysis.hpp"
#include "turnpike/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace turnpike {

struct RunReport {
  std::filesystem::path output_dir;
  /// File names relative to output_dir, in the order they were written.
  std::vector<std::string> files;
  double wall_seconds = 0.0;
};

/// Runs cfg.kind and writes its artifacts. Files written before a failure are
/// kept and the MANIFEST records the failure; the error is rethrown.
/// Progress lines go to `log` when it is non-null.
RunReport run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                         std::ostream* log = nullptr);

/// Output directory: explicit override, else cfg.output, else
/// $TURNPIKE_OUTPUT_ROOT/<config stem>, else ./turnpike_out/<config stem>.
std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg,
                                         const std::filesystem::path& config_path,
                                         const std::filesystem::path& override_dir = {});

/// Plot data: comma separated, no spaces, one series per column.
/// Columns t,norm_x_dev,norm_u_dev,norm_lambda_dev,s.
void emit_plotdata(const TurnpikeResult& r, const std::filesystem::path& path);
/// Columns t,norm_dx,norm_du,norm_dlambda,s.
void emit_plotdata(const SensitivityResult& r, const std::filesystem::path& path);
/// Columns T,N,opnorm,cs_forward,cs_turnpike.
void emit_plotdata(const OpnormSweep& r, const std::filesystem::path& path);
/// Columns N,cost_uniform,cost_exponential,cost_pwuniform; failed or
/// missing cells are nan.
void emit_plotdata(const std::vector<CostCell>& cells, const std::filesystem::path& path);

/// Long format, header scheme,N,cost; one row per cell.
void write_cost_table(const std::vector<CostCell>& cells, const std::filesystem::path& path);

struct SuperpositionSuiteResult {
  int d = 0;
  std::vector<double> magnitudes;
  /// Per trajectory, per magnitude.
  std::vector<std::vector<double>> ratios;
  std::vector<std::vector<double>> scaled_ratios;
  std::vector<std::vector<double>> bounds;
  /// ||x^d||_{L2 L2} / ||x||^d_{L2d L2d} per trajectory (at most 1).
  std::vector<double> growth_ratios;
  double scaling_mu = 0.0;
};

/// Random base points and directions (seeded) checked on the given grids.
SuperpositionSuiteResult superposition_suite(const SuperpositionConfig& cfg,
                                             const SpatialGrid& grid, const TimeGrid& tgrid,
                                             double mu, std::uint64_t seed);

/// Columns trajectory,m,ratio,scaled_ratio,bound.
void emit_plotdata(const SuperpositionSuiteResult& r, const std::filesystem::path& path);

}  // namespace turnpike
