#pragma once

// The two optimal control problems of the numerical study: distributed
// control of a semilinear heat equation x' - d*Lap x + e x^3 - c0 x = u, and
// Neumann boundary control of the quasilinear equation
// x' - div(kappa(x) grad x) = 0 with kappa(x) dx/dnu = u, kappa = c x^2 + 0.1.
// Tracking cost 1/2 ||x - x_d||^2_{L2(Omega_o)} + alpha/2 ||u||^2.

#include "turnpike/spatial.hpp"
#include "turnpike/timegrid.hpp"

#include <optional>

namespace turnpike {

enum class DynamicsKind { SemilinearDistributed, QuasilinearBoundary };
enum class ReferenceKind { Static, Dynamic };

/// f(w) = e w^3 - c0 w.
struct CubicNonlinearity {
  double e = 1.0;
  double c0 = 0.0;

  double value(double w) const { return e * w * w * w - c0 * w; }
  double first(double w) const { return 3.0 * e * w * w - c0; }
  double second(double w) const { return 6.0 * e * w; }
};

/// kappa(w) = c w^2 + base.
struct Conductivity {
  double c = 0.1;
  double base = 0.1;

  double value(double w) const { return c * w * w + base; }
  double first(double w) const { return 2.0 * c * w; }
  double second(double /*w*/) const { return 2.0 * c; }
};

struct OCPSpec {
  DynamicsKind dynamics = DynamicsKind::SemilinearDistributed;
  double diffusion = 0.1;
  CubicNonlinearity cubic{};
  Conductivity conductivity{};
  double alpha = 0.1;
  ReferenceKind reference = ReferenceKind::Static;
  double reference_scale = 1.0;
  /// Absolute time of the OCP's t = 0 (MPC shifts the reference with it).
  double time_offset = 0.0;
  /// Initial state; empty means zero.
  Field x0;
  /// Nodal indicator of Omega_o; empty means all of Omega.
  Eigen::VectorXd observation_mask;
  /// Nodal indicator of Omega_c for distributed control; empty means all of Omega.
  Eigen::VectorXd control_mask;
};

/// Bump g(s) = 10 exp(1 - 1/(1 - s^2)) for s < 1, else 0.
double reference_bump(double s);
double reference_static(double x, double y);
double reference_dynamic(double t, double x, double y);
/// Peak location of the dynamic reference at time t.
Eigen::Vector2d reference_peak(double t);

/// An OCPSpec bound to a spatial grid with its operators precomputed.
class Problem {
 public:
  Problem(OCPSpec spec, SpatialGrid grid);

  const OCPSpec& spec() const { return spec_; }
  const SpatialGrid& grid() const { return grid_; }
  const ControlOperator& control() const { return control_; }
  int dof_count() const { return grid_.dof_count(); }
  int control_size() const { return control_.control_size(); }
  double alpha() const { return spec_.alpha; }

  const Field& x0() const { return x0_; }
  const Eigen::VectorXd& observation() const { return observation_; }
  bool is_static() const { return spec_.reference == ReferenceKind::Static; }

  /// x_d at OCP-relative time t.
  Field reference(double t) const;

  /// Copy with another initial state / time offset.
  Problem with_initial_state(Field x0) const;
  Problem with_time_offset(double offset) const;

  /// F(x) = A(x) + f(x), the stationary part of the state equation
  /// x' + F(x) = B u (strong form).
  Field state_operator(const Field& x) const;
  /// F'(x) in strong form.
  SparseMatrix state_jacobian(const Field& x) const;
  /// F'(x)^* lambda, adjoint in the weighted L2 product.
  Field adjoint_apply(const Field& x, const Field& lambda) const;
  /// F'(x)^* in strong form.
  SparseMatrix adjoint_jacobian(const Field& x) const;
  /// d/dx [F'(x)^* lambda] (symmetric in the weighted product).
  SparseMatrix adjoint_hessian(const Field& x, const Field& lambda) const;

  /// B B^* / alpha, diagonal, strong form.
  Eigen::VectorXd control_gram_over_alpha() const;

  /// Solve (x - x_prev)/dt + F(x) = forcing for x by damped Newton.
  Field implicit_step(const Field& x_prev, double dt, const Field& forcing,
                      const Field* guess = nullptr) const;

  const std::optional<EllipticOperator>& elliptic() const { return elliptic_; }

 private:
  Eigen::VectorXd edge_kappa(const Field& x) const;
  SparseMatrix quasilinear_matrix(const Field& x, bool transpose) const;

  OCPSpec spec_;
  SpatialGrid grid_;
  ControlOperator control_;
  std::optional<EllipticOperator> elliptic_;
  Field x0_;
  Eigen::VectorXd observation_;
  Field static_reference_;
};

enum class TimeRule {
  /// Trapezoid in time for state and control.
  Trapezoid,
  /// The quadrature matching the time stepping: x_{i+1} and u_i weighted
  /// by dt_i. This is the objective whose exact gradient the discrete
  /// adjoint computes.
  ImplicitEuler,
};

/// Tracking cost of (x, u); u holds one control vector per vertex.
double cost(const Trajectory& x, const Trajectory& u, const Problem& problem,
            const TimeGrid& tgrid, TimeRule rule = TimeRule::Trapezoid);

/// Per-vertex defects of the time stepping: slot 0 is x_0 - x0, slot i+1 is
/// (x_{i+1} - x_i)/dt_i + F(x_{i+1}) - B u_i.
Trajectory dynamics_residual(const Trajectory& x, const Trajectory& u,
                             const Problem& problem, const TimeGrid& tgrid);

/// Forward rollout x_{i+1} = step(x_i, dt_i, B u_i) from the problem's x0.
Trajectory simulate_state(const Problem& problem, const TimeGrid& tgrid,
                          const Trajectory& u);

Trajectory zero_trajectory(int slices, int size);

}  // namespace turnpike
