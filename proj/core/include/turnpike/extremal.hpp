#pragma once

// Discrete reduced extremal equations G(z, eps) = L_r'(z) - eps of the
// implicit-Euler discretized problem, their Jacobian (the linearized KKT
// system), and the solvers built on them.
//
// Index conventions on a time grid t_0 < ... < t_{N-1}:
//   state row i   (i < N-1): (x_{i+1} - x_i)/dt_i + F(x_{i+1}) - B B^* lambda_i / alpha
//   adjoint row i (i < N-1): 1_o (x_{i+1} - x_d(t_{i+1})) - (lambda_{i+1} - lambda_i)/dt_i
//                            + F'(x_{i+1})^* lambda_i
//   terminal row:            lambda_{N-1}
//   initial row:             x_0 - x0
// The control acting on [t_i, t_{i+1}] is u_i = B^* lambda_i / alpha. With
// these conventions the adjoint rows are the exact transpose of the state
// linearization, i.e. the gradient of the dt-weighted discrete cost.

#include "turnpike/problem.hpp"

#include <iosfwd>
#include <memory>

namespace turnpike {

struct ExtremalPoint {
  Trajectory x;
  Trajectory lambda;

  int slices() const { return static_cast<int>(x.size()); }
};

/// eps1 and eps2 hold one field per interval, epsT and eps0 one field each.
struct Perturbation {
  Trajectory eps1;
  Field epsT;
  Trajectory eps2;
  Field eps0;
};

ExtremalPoint zero_extremal(int size, int slices);
ExtremalPoint constant_extremal(const Field& x, const Field& lambda, int slices);
Perturbation zero_perturbation(int size, int slices);

/// Interleaved packing: slot 2k holds x_k, slot 2k+1 holds lambda_k. A
/// perturbation packs eps0 into x-slot 0, eps2[i] into x-slot i+1, eps1[i]
/// into lambda-slot i and epsT into lambda-slot N-1, so that the packed
/// residual and the KKT rows share the unknowns' ordering.
Eigen::VectorXd pack(const ExtremalPoint& z);
Eigen::VectorXd pack(const Perturbation& eps);
ExtremalPoint unpack_point(const Eigen::VectorXd& v, int size, int slices);
Perturbation unpack_perturbation(const Eigen::VectorXd& v, int size, int slices);

/// Diagonal quadrature metrics in packed layout: trapezoid-in-time times
/// cell area for the solution space, interval length times cell area for the
/// interior perturbation rows and cell area for eps0, epsT.
Eigen::VectorXd solution_metric(const Problem& problem, const TimeGrid& tgrid);
Eigen::VectorXd perturbation_metric(const Problem& problem, const TimeGrid& tgrid);

Perturbation residual(const ExtremalPoint& z, const Problem& problem,
                      const TimeGrid& tgrid, const Perturbation& eps);
Eigen::VectorXd residual_vector(const ExtremalPoint& z, const Problem& problem,
                                const TimeGrid& tgrid, const Perturbation& eps);

/// Linearized extremal equations at a point, with a cached sparse LU.
class KKTSystem {
 public:
  KKTSystem(SparseMatrix matrix, int size, int slices);

  const SparseMatrix& matrix() const { return matrix_; }
  int size() const { return size_; }
  int slices() const { return slices_; }
  int rows() const { return static_cast<int>(matrix_.rows()); }

  /// Factorize now; otherwise done on first solve. Throws SolverError.
  void factorize() const;

  /// K dz = rhs, checked to relative residual 1e-10 (one refinement step).
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  /// K^T y = rhs.
  Eigen::VectorXd solve_transposed(const Eigen::VectorXd& rhs) const;
  ExtremalPoint solve(const Perturbation& rhs) const;
  Perturbation apply(const ExtremalPoint& dz) const;

  /// Reciprocal of the factorization's pivot-ratio condition estimate.
  double condition_estimate() const;

 private:
  struct Factorization;
  SparseMatrix matrix_;
  int size_;
  int slices_;
  mutable std::shared_ptr<Factorization> lu_;
};

KKTSystem assemble_kkt(const ExtremalPoint& z0, const Problem& problem,
                       const TimeGrid& tgrid);
ExtremalPoint solve_kkt(const KKTSystem& k, const Perturbation& rhs);

struct NewtonOptions {
  double tol = 1e-9;
  int max_iter = 30;
  int max_halvings = 20;
};

struct NewtonResult {
  ExtremalPoint z;
  int iterations = 0;
  std::vector<double> residual_history;
};

/// Full Newton on G(z, eps) = 0 with residual-monotone backtracking.
NewtonResult newton_solve(const Problem& problem, const TimeGrid& tgrid,
                          const Perturbation& eps, const ExtremalPoint& z_init,
                          const NewtonOptions& opts = {});

struct FrozenNewtonOptions {
  double tol = 1e-9;
  int max_iter = 200;
  /// Required accuracy of G(z0, eps0) = 0.
  double base_tol = 1e-7;
  /// Consecutive ratios >= 1 that count as divergence.
  int divergence_window = 3;
};

struct FrozenNewtonResult {
  ExtremalPoint z;
  int iterations = 0;
  /// ||dz^k|| in the solution metric.
  std::vector<double> step_norms;
  /// ||dz^{k+1}|| / ||dz^k||.
  std::vector<double> ratios;
  std::vector<double> residual_history;
};

/// z^{k+1} = z^k - G_z(z0, eps0)^{-1} G(z^k, eps).
FrozenNewtonResult frozen_newton_solve(const Problem& problem, const TimeGrid& tgrid,
                                       const Perturbation& eps, const ExtremalPoint& z0,
                                       const Perturbation& eps0,
                                       const FrozenNewtonOptions& opts = {});

struct StaticSolution {
  Field x;
  Field lambda;
  Field u;
  int iterations = 0;
  std::vector<double> residual_history;
};

/// Residual of the steady-state optimality system, [adjoint; state] rows:
/// 1_o (x - x_d) + F'(x)^* lambda and F(x) - B B^* lambda / alpha.
Eigen::VectorXd static_residual(const Problem& problem, const Field& x, const Field& lambda);

/// Newton on the steady-state optimality system. Needs a static reference.
StaticSolution solve_static(const Problem& problem, const NewtonOptions& opts = {});

/// eps = (0, lambda_bar, 0, x_bar - x0): the constant-in-time static
/// extremal solves the dynamic equations with this perturbation.
Perturbation static_as_perturbation(const Field& x_bar, const Field& lambda_bar,
                                    const Field& x0, const TimeGrid& tgrid);

/// u_i = B^* lambda_i / alpha, one control vector per vertex.
Trajectory recover_control(const Trajectory& lambda, const Problem& problem);

/// Objective whose exact gradient the discrete adjoint computes
/// (TimeRule::ImplicitEuler) as a function of the controls u_0..u_{N-2}.
double reduced_objective(const Problem& problem, const TimeGrid& tgrid, const Trajectory& u);
/// Gradient of reduced_objective with respect to the control coefficients,
/// via the backward adjoint sweep of the adjoint rows. Slot N-1 is zero.
Trajectory reduced_gradient(const Problem& problem, const TimeGrid& tgrid, const Trajectory& u);

/// Columnar CSV: time,node,x,lambda.
void write_csv(std::ostream& out, const ExtremalPoint& z, const TimeGrid& tgrid);
ExtremalPoint read_extremal_csv(std::istream& in);

}  // namespace turnpike
