#pragma once

// Receding-horizon control: solve the OCP on [k tau, k tau + T], apply the
// first tau of its control to a finer simulation of the plant, repeat.

#include "turnpike/extremal.hpp"

#include <string>

namespace turnpike {

struct MPCConfig {
  double horizon = 10.0;
  double tau = 1.0;
  int steps = 4;
  GridScheme scheme = GridScheme::Uniform;
  int n = 11;
  /// Rate c of exponential grids. Piecewise uniform grids split at tau.
  double exp_c = 1.0;
  int plant_refinement = 8;
  bool warm_start = true;
  NewtonOptions newton{};
};

void validate(const MPCConfig& cfg);

/// The OCP time grid an MPC step uses.
TimeGrid mpc_time_grid(const MPCConfig& cfg);

struct MPCStepInfo {
  int step = 0;
  double t_start = 0.0;
  int newton_iterations = 0;
  double residual = 0.0;
  double window_cost = 0.0;
  /// The warm start failed and the step was solved from a cold start.
  bool cold_restart = false;
};

struct ClosedLoopResult {
  /// Absolute plant times on [0, steps * tau]; stitch points appear once.
  std::vector<double> t;
  Trajectory x;
  Trajectory u;
  double cost = 0.0;
  std::vector<MPCStepInfo> steps;
};

struct PlantWindow {
  /// Window-relative plant times, 0 .. tau.
  std::vector<double> t;
  Trajectory x;
  Trajectory u;
};

/// Piecewise linear control signal through knots; constant outside them.
struct ControlSignal {
  std::vector<double> knots;
  Trajectory values;
  Field operator()(double t) const;
};

/// The control of an OCP solution as a signal. u_i acts on [t_i, t_{i+1}]
/// under implicit Euler, so its knot is the interval midpoint.
ControlSignal control_signal(const TimeGrid& tgrid, const Trajectory& u);

/// Implicit Euler on the given vertices, each interval split into
/// `refinement` equal steps; each step uses the control at its start.
PlantWindow simulate_plant(const Problem& problem, const Field& x_start,
                           const std::vector<double>& times, const ControlSignal& u,
                           int refinement);

/// Vertices of an OCP grid inside [0, tau], with tau appended.
std::vector<double> window_vertices(const TimeGrid& tgrid, double tau);

/// Algorithm: for k = 0..steps-1 solve from the current state with the
/// reference shifted to absolute time k tau, implement u on [0, tau].
ClosedLoopResult mpc_run(const Problem& problem, const MPCConfig& cfg);

struct CostCell {
  GridScheme scheme = GridScheme::Uniform;
  int n = 0;
  double cost = 0.0;
  bool ok = false;
  std::string error;
};

/// Closed-loop cost for every (scheme, N); failures are recorded per cell.
std::vector<CostCell> grid_comparison(const Problem& problem, const MPCConfig& base,
                                      const std::vector<int>& ns,
                                      const std::vector<GridScheme>& schemes);

}  // namespace turnpike
