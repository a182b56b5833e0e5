#pragma once

// Finite-difference discretization of a rectangle [0,Lx]x[0,Ly]: node
// numbering, trapezoidal quadrature, the 5-point elliptic operator and the
// control operators (distributed and Neumann boundary flux).

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <limits>
#include <vector>

namespace turnpike {

using Field = Eigen::VectorXd;
using Trajectory = std::vector<Field>;
using SparseMatrix = Eigen::SparseMatrix<double>;

enum class BoundaryKind { Dirichlet, Neumann };

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// A grid edge between two degrees of freedom. A negative index marks an
/// eliminated Dirichlet node (value fixed to zero). `coeff` is the quadrature
/// area attached to the edge divided by its squared length, so that
/// sum_e coeff_e (v_a - v_b)^2 is the trapezoidal H1 seminorm.
struct Edge {
  int a;
  int b;
  double coeff;
};

class SpatialGrid {
 public:
  SpatialGrid(int nx, int ny, double lx, double ly, BoundaryKind bc);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double lx() const { return lx_; }
  double ly() const { return ly_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  BoundaryKind bc() const { return bc_; }

  int dof_count() const { return static_cast<int>(weights_.size()); }

  /// Degree of freedom of node (i, j), or -1 for an eliminated Dirichlet node.
  int dof(int i, int j) const;
  /// Node indices (i, j) of a degree of freedom.
  std::array<int, 2> node(int dof) const;
  /// Physical coordinates of a degree of freedom.
  Eigen::Vector2d coords(int dof) const;
  bool on_boundary(int dof) const;

  /// Trapezoidal cell areas, one per degree of freedom.
  const Eigen::VectorXd& weights() const { return weights_; }
  const std::vector<Edge>& edges() const { return edges_; }

  /// Boundary degrees of freedom (Neumann grids only, else empty), in the
  /// order used for boundary controls, and their trapezoidal arc lengths.
  const std::vector<int>& boundary_dofs() const { return boundary_dofs_; }
  const Eigen::VectorXd& boundary_weights() const { return boundary_weights_; }

  /// Sample a function of (x, y) at every degree of freedom.
  template <typename F>
  Field sample(F&& f) const {
    Field v(dof_count());
    for (int k = 0; k < dof_count(); ++k) {
      const auto c = coords(k);
      v[k] = f(c.x(), c.y());
    }
    return v;
  }

  bool operator==(const SpatialGrid& other) const;

 private:
  int nx_, ny_;
  double lx_, ly_, hx_, hy_;
  BoundaryKind bc_;
  std::vector<int> node_to_dof_;
  std::vector<int> dof_to_node_;
  Eigen::VectorXd weights_;
  std::vector<Edge> edges_;
  std::vector<int> boundary_dofs_;
  Eigen::VectorXd boundary_weights_;
};

SpatialGrid build_grid(int nx, int ny, double lx, double ly, BoundaryKind bc);

/// The positive operator -coeff * Laplace_h with the grid's boundary
/// condition. Stored as the symmetric stiffness S = W A, W = diag(weights).
class EllipticOperator {
 public:
  EllipticOperator(const SpatialGrid& grid, double coeff);

  const SpatialGrid& grid() const { return grid_; }
  double coeff() const { return coeff_; }
  const SparseMatrix& stiffness() const { return stiffness_; }
  /// Strong-form matrix A = W^{-1} S.
  const SparseMatrix& matrix() const { return matrix_; }

  Field apply(const Field& v) const;

  /// Smallest eigenvalue of A (self-adjoint in the weighted inner product),
  /// by shifted inverse iteration.
  double smallest_eigenvalue() const;
  /// alpha with <A v, v> >= alpha * ||v||_{H1}^2 for all v.
  double coercivity_constant() const;

 private:
  SpatialGrid grid_;
  double coeff_;
  SparseMatrix stiffness_;
  SparseMatrix matrix_;
};

/// Assemble sum_e coeff_e * kappa_e (e_a - e_b)(e_a - e_b)^T over the edges.
SparseMatrix assemble_stiffness(const SpatialGrid& grid,
                                const Eigen::VectorXd& edge_kappa);

double inner_l2(const SpatialGrid& grid, const Field& f, const Field& g);
/// Quadrature L_p norm; p = kInfinity gives the nodal maximum.
double norm_lp(const SpatialGrid& grid, const Field& f, double p);
double norm_l2(const SpatialGrid& grid, const Field& f);
/// sqrt(||f||^2 + ||grad_h f||^2) with forward differences.
double norm_h1(const SpatialGrid& grid, const Field& f);

enum class ControlKind { Distributed, Boundary };

/// Control-to-state injection B and its adjoint B* with respect to the
/// weighted L2 products on state and control space.
class ControlOperator {
 public:
  /// Distributed control on the nodes where `mask` is nonzero.
  static ControlOperator distributed(const SpatialGrid& grid,
                                     const Eigen::VectorXd& mask);
  /// Neumann boundary flux, kappa dx/dnu = u, via ghost-node substitution.
  static ControlOperator boundary(const SpatialGrid& grid);

  ControlKind kind() const { return kind_; }
  int control_size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<int>& nodes() const { return nodes_; }
  /// Quadrature weights defining the control inner product.
  const Eigen::VectorXd& control_weights() const { return control_weights_; }

  Field apply(const Field& u) const;
  Field adjoint(const Field& lambda) const;
  /// Diagonal of B B* in strong form.
  const Eigen::VectorXd& gram_diagonal() const { return gram_; }
  double norm_sq(const Field& u) const;

 private:
  ControlKind kind_ = ControlKind::Distributed;
  int state_size_ = 0;
  std::vector<int> nodes_;
  Eigen::VectorXd control_weights_;
  Eigen::VectorXd injection_;  // (B u)_node = injection * u
  Eigen::VectorXd gram_;
};

Field control_injection(const SpatialGrid& grid, const Field& u,
                        const ControlOperator& op);

}  // namespace turnpike
