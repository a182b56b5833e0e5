#pragma once

// Scaled space-time norms, decay fits, solution-operator norm estimates, the
// pointwise square root of L_xx and Nemytskij-operator checks, plus the
// turnpike/sensitivity/operator-norm experiments built from them.

#include "turnpike/extremal.hpp"

#include <cstdint>
#include <optional>
#include <utility>

namespace turnpike {

enum class ScalingKind { Unit, ForwardExp, Turnpike };

/// Unit: 1. ForwardExp: e^{-mu t}. Turnpike: 1 / (e^{-mu t} + e^{-mu (T - t)}).
class ScalingFunction {
 public:
  static ScalingFunction unit();
  static ScalingFunction forward_exp(double mu);
  static ScalingFunction turnpike(double mu, double horizon);

  ScalingKind kind() const { return kind_; }
  double mu() const { return mu_; }
  double horizon() const { return horizon_; }
  double operator()(double t) const;

  /// Extremes of s over the vertices of a time grid.
  double min_on(const TimeGrid& tgrid) const;
  double max_on(const TimeGrid& tgrid) const;

 private:
  ScalingFunction(ScalingKind kind, double mu, double horizon)
      : kind_(kind), mu_(mu), horizon_(horizon) {}
  ScalingKind kind_;
  double mu_;
  double horizon_;
};

/// Time quadrature (trapezoid) of s(t)^p n(t)^p from per-vertex spatial
/// norms n; p = kInfinity takes the maximum.
double scaled_time_norm(const std::vector<double>& spatial_norms, const ScalingFunction& s,
                        double p_time, const TimeGrid& tgrid);

/// ||s x||_{L_p_time(0,T; L_p_space(Omega))}.
double scaled_norm(const Trajectory& traj, const ScalingFunction& s, double p_time,
                   double p_space, const SpatialGrid& grid, const TimeGrid& tgrid);

/// ||s x||_{L2(0,T;D(A))} + ||(s x)'||_{L2(0,T;L2)} with ||v||_{D(A)} = ||v|| + ||A v||
/// and difference quotients in time.
double sobolev_norm(const Trajectory& traj, const ScalingFunction& s, const SpatialGrid& grid,
                    const TimeGrid& tgrid, const EllipticOperator& elliptic);

/// Packed metrics of extremal.hpp multiplied by s^2 per time slot (interval
/// rows use s at the interval's right end).
Eigen::VectorXd scaled_solution_metric(const Problem& problem, const TimeGrid& tgrid,
                                       const ScalingFunction& s);
Eigen::VectorXd scaled_perturbation_metric(const Problem& problem, const TimeGrid& tgrid,
                                           const ScalingFunction& s);
/// sqrt(sum_k metric_k v_k^2).
double metric_norm(const Eigen::VectorXd& v, const Eigen::VectorXd& metric);

struct OpnormOptions {
  double rel_tol = 1e-3;
  int max_iter = 300;
  std::uint64_t seed = 7;
};

/// ||K^{-1}|| from (E, metric_e) to (Z, metric_z), i.e.
/// 1 / sigma_min(W_E^{1/2} K W_Z^{-1/2}), by inverse power iteration.
double estimate_opnorm(const KKTSystem& k, const Eigen::VectorXd& metric_e,
                       const Eigen::VectorXd& metric_z, const OpnormOptions& opts = {});

/// mu = theta / opnorm.
double choose_mu(double opnorm, double theta = 0.5);

struct DecayFit {
  double mu_hat = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<std::pair<double, double>> samples;
};

/// Least squares line through (t, ln n); mu_hat = -slope. Samples with
/// n < 1e-14 are dropped; fewer than 3 remaining is an error.
DecayFit fit_decay(const std::vector<std::pair<double, double>>& samples);

/// Nodal 1_o + f''(x) lambda of the semilinear model, one field per slice.
Trajectory lxx_field(const ExtremalPoint& z0, const Problem& problem);

/// Pointwise square root; values below -1e-12 raise NonCoercivityError.
Trajectory sqrt_multiplier(const Trajectory& lxx);

/// Nodal d-th power.
Trajectory superposition_apply(int d, const Trajectory& x);

struct SuperpositionCheck {
  std::vector<double> magnitudes;
  /// ||Phi(x0 + m v) - Phi(x0) - Phi'(x0) m v||_{L2 L2} / ||m v||_{L2d L2d}.
  std::vector<double> ratios;
  /// Hoelder bound on the ratio: sum_{k=2}^d C(d,k) ||x0||^{d-k} ||m v||^{k-1}
  /// in L2d(0,T;L2d), valid for every scaling s.
  std::vector<double> bounds;
};

/// Remainder ratios along direction `v`; both norms carry the scaling s.
SuperpositionCheck superposition_derivative_check(int d, const Trajectory& x0,
                                                  const Trajectory& v,
                                                  const std::vector<double>& magnitudes,
                                                  const SpatialGrid& grid, const TimeGrid& tgrid,
                                                  const ScalingFunction& s);

/// Reproducible N(0, sigma^2) fields.
Trajectory random_trajectory(int slices, int size, std::uint64_t seed, double sigma = 1.0);

// ---------------------------------------------------------------------------
// Experiments

struct TurnpikeResult {
  std::vector<double> t;
  std::vector<double> dev_x;
  std::vector<double> dev_u;
  std::vector<double> dev_lambda;
  std::vector<double> scaling;
  double mu = 0.0;
  DecayFit decay;   // ||x(t) - x_bar|| on [0, T/2]
  DecayFit growth;  // ||x(t) - x_bar|| on [T/2, T], fitted in T - t
  /// Turnpike-scaled L2(0,T;L2) norms of the x, u, lambda deviations, summed.
  double scaled_deviation = 0.0;
  double sobolev_deviation = 0.0;
  int newton_iterations = 0;
  StaticSolution steady;
  ExtremalPoint z;
};

/// Solves the dynamic and static problems and measures the deviation. If
/// `mu` is empty it is chosen from the operator norm at the turnpike.
TurnpikeResult turnpike_experiment(const Problem& problem, const TimeGrid& tgrid,
                                   std::optional<double> mu = std::nullopt);

struct SensitivityResult {
  std::vector<double> t;
  std::vector<double> dx;
  std::vector<double> du;
  std::vector<double> dlambda;
  std::vector<double> scaling;
  double mu = 0.0;
  /// ||e^{-mu t} dz|| and ||e^{-mu t} eps|| in the packed metrics.
  double scaled_dz = 0.0;
  double scaled_eps = 0.0;
  /// ||dx(t)|| on [0, support_start/2] against the distance support_start - t.
  DecayFit decay;
  std::vector<double> frozen_ratios;
};

/// Base solve, then the perturbed solve by the frozen-Jacobian iteration at
/// the base point. `support_start` is where the perturbation begins.
SensitivityResult sensitivity_experiment(const Problem& problem, const TimeGrid& tgrid,
                                         const Perturbation& pert, double mu,
                                         double support_start,
                                         const ExtremalPoint* base = nullptr);

/// eps2 = amplitude * phi(omega) * bump(t) on [start, T], phi the first
/// Dirichlet sine mode (or 1 on Neumann grids), bump = sin^2 over the support.
Perturbation state_perturbation(const Problem& problem, const TimeGrid& tgrid, double start,
                                double amplitude);

struct OpnormPoint {
  double horizon = 0.0;
  int slices = 0;
  double opnorm = 0.0;
  double cs_forward = 0.0;
  double cs_turnpike = 0.0;
};

struct OpnormSweep {
  std::vector<OpnormPoint> points;
  double mu = 0.0;
};

/// For each horizon: KKT at the problem's solution on a grid with the given
/// step, its operator norm, and the largest ratio ||s dz|| / ||s eps|| over
/// random eps (isotropic in the scaled perturbation metric) for both
/// scaling kinds. mu = choose_mu(max opnorm, theta).
OpnormSweep opnorm_sweep(const OCPSpec& spec, const SpatialGrid& grid,
                         const std::vector<double>& horizons, double dt, int samples,
                         double theta, std::uint64_t seed);

}  // namespace turnpike
