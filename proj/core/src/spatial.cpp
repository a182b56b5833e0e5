#include "turnpike/spatial.hpp"

#include "turnpike/errors.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <random>
#include <string>

namespace turnpike {

SpatialGrid::SpatialGrid(int nx, int ny, double lx, double ly, BoundaryKind bc)
    : nx_(nx), ny_(ny), lx_(lx), ly_(ly), bc_(bc) {
  if (nx < 2 || ny < 2) {
    throw DomainError("grid needs at least 2 nodes per axis, got " +
                      std::to_string(nx) + "x" + std::to_string(ny));
  }
  if (!(lx > 0.0) || !(ly > 0.0)) {
    throw DomainError("grid side lengths must be positive");
  }
  if (bc == BoundaryKind::Dirichlet && (nx < 3 || ny < 3)) {
    throw DomainError("a Dirichlet grid needs at least one interior node");
  }
  hx_ = lx / (nx - 1);
  hy_ = ly / (ny - 1);

  const auto is_boundary = [&](int i, int j) {
    return i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
  };

  node_to_dof_.assign(static_cast<std::size_t>(nx) * ny, -1);
  std::vector<double> w;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (bc == BoundaryKind::Dirichlet && is_boundary(i, j)) continue;
      const double fx = (i == 0 || i == nx - 1) ? 0.5 : 1.0;
      const double fy = (j == 0 || j == ny - 1) ? 0.5 : 1.0;
      node_to_dof_[static_cast<std::size_t>(j) * nx + i] =
          static_cast<int>(dof_to_node_.size());
      dof_to_node_.push_back(j * nx + i);
      w.push_back(fx * fy * hx_ * hy_);
    }
  }
  weights_ = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));

  // Horizontal edges carry the area of the half cells above and below them.
  for (int j = 0; j < ny; ++j) {
    const double fy = (j == 0 || j == ny - 1) ? 0.5 : 1.0;
    for (int i = 0; i + 1 < nx; ++i) {
      const int a = dof(i, j);
      const int b = dof(i + 1, j);
      if (a < 0 && b < 0) continue;
      edges_.push_back({a, b, fy * hy_ / hx_});
    }
  }
  for (int i = 0; i < nx; ++i) {
    const double fx = (i == 0 || i == nx - 1) ? 0.5 : 1.0;
    for (int j = 0; j + 1 < ny; ++j) {
      const int a = dof(i, j);
      const int b = dof(i, j + 1);
      if (a < 0 && b < 0) continue;
      edges_.push_back({a, b, fx * hx_ / hy_});
    }
  }

  if (bc == BoundaryKind::Neumann) {
    std::vector<double> bw;
    for (int k = 0; k < dof_count(); ++k) {
      const auto [i, j] = node(k);
      const bool side_x = (i == 0 || i == nx - 1);
      const bool side_y = (j == 0 || j == ny - 1);
      if (!side_x && !side_y) continue;
      boundary_dofs_.push_back(k);
      if (side_x && side_y) {
        bw.push_back(0.5 * (hx_ + hy_));
      } else {
        bw.push_back(side_x ? hy_ : hx_);
      }
    }
    boundary_weights_ =
        Eigen::Map<Eigen::VectorXd>(bw.data(), static_cast<Eigen::Index>(bw.size()));
  }
}

int SpatialGrid::dof(int i, int j) const {
  if (i < 0 || j < 0 || i >= nx_ || j >= ny_) return -1;
  return node_to_dof_[static_cast<std::size_t>(j) * nx_ + i];
}

std::array<int, 2> SpatialGrid::node(int dof) const {
  const int n = dof_to_node_.at(static_cast<std::size_t>(dof));
  return {n % nx_, n / nx_};
}

Eigen::Vector2d SpatialGrid::coords(int dof) const {
  const auto [i, j] = node(dof);
  return {i * hx_, j * hy_};
}

bool SpatialGrid::on_boundary(int dof) const {
  const auto [i, j] = node(dof);
  return i == 0 || j == 0 || i == nx_ - 1 || j == ny_ - 1;
}

bool SpatialGrid::operator==(const SpatialGrid& other) const {
  return nx_ == other.nx_ && ny_ == other.ny_ && lx_ == other.lx_ &&
         ly_ == other.ly_ && bc_ == other.bc_;
}

SpatialGrid build_grid(int nx, int ny, double lx, double ly, BoundaryKind bc) {
  return SpatialGrid(nx, ny, lx, ly, bc);
}

SparseMatrix assemble_stiffness(const SpatialGrid& grid,
                                const Eigen::VectorXd& edge_kappa) {
  const auto& edges = grid.edges();
  if (edge_kappa.size() != static_cast<Eigen::Index>(edges.size())) {
    throw DimensionError("edge coefficient vector does not match the grid");
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(edges.size() * 4);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto& edge = edges[e];
    const double c = edge.coeff * edge_kappa[static_cast<Eigen::Index>(e)];
    if (edge.a >= 0) triplets.emplace_back(edge.a, edge.a, c);
    if (edge.b >= 0) triplets.emplace_back(edge.b, edge.b, c);
    if (edge.a >= 0 && edge.b >= 0) {
      triplets.emplace_back(edge.a, edge.b, -c);
      triplets.emplace_back(edge.b, edge.a, -c);
    }
  }
  SparseMatrix s(grid.dof_count(), grid.dof_count());
  s.setFromTriplets(triplets.begin(), triplets.end());
  return s;
}

EllipticOperator::EllipticOperator(const SpatialGrid& grid, double coeff)
    : grid_(grid), coeff_(coeff) {
  if (!(coeff > 0.0)) throw DomainError("diffusion coefficient must be positive");
  const Eigen::VectorXd kappa =
      Eigen::VectorXd::Constant(static_cast<Eigen::Index>(grid.edges().size()), coeff);
  stiffness_ = assemble_stiffness(grid, kappa);
  const Eigen::VectorXd inv_w = grid.weights().cwiseInverse();
  matrix_ = inv_w.asDiagonal() * stiffness_;
  matrix_.makeCompressed();
}

Field EllipticOperator::apply(const Field& v) const {
  if (v.size() != grid_.dof_count()) {
    throw DimensionError("field does not live on the operator's grid");
  }
  return matrix_ * v;
}

double EllipticOperator::smallest_eigenvalue() const {
  // Generalized problem S v = lambda W v; a tiny shift keeps the Neumann
  // operator (constants in its kernel) factorizable.
  const Eigen::VectorXd& w = grid_.weights();
  const double scale = stiffness_.diagonal().cwiseQuotient(w).maxCoeff();
  const double shift = 1e-8 * scale;
  SparseMatrix shifted = stiffness_;
  for (Eigen::Index k = 0; k < w.size(); ++k) shifted.coeffRef(k, k) += shift * w[k];
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(shifted);
  if (ldlt.info() != Eigen::Success) {
    throw SolverError("shifted stiffness factorization failed", kInfinity);
  }
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dist(0.5, 1.5);
  Eigen::VectorXd v(w.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = dist(rng);
  double rayleigh = 0.0;
  for (int it = 0; it < 1000; ++it) {
    v = ldlt.solve(w.cwiseProduct(v)).eval();
    v /= std::sqrt(v.dot(w.cwiseProduct(v)));
    const double next = v.dot(stiffness_ * v);
    if (it > 0 && std::abs(next - rayleigh) <= 1e-13 * std::max(1.0, std::abs(next))) {
      return next;
    }
    rayleigh = next;
  }
  return rayleigh;
}

double EllipticOperator::coercivity_constant() const {
  // <A v, v> >= lmin ||v||^2 and <A v, v> = coeff |v|_1^2 combine to
  // <A v, v> >= (1/lmin + 1/coeff)^{-1} ||v||_{H1}^2.
  const double lmin = smallest_eigenvalue();
  if (lmin <= 0.0) return 0.0;
  return 1.0 / (1.0 / lmin + 1.0 / coeff_);
}

double inner_l2(const SpatialGrid& grid, const Field& f, const Field& g) {
  if (f.size() != grid.dof_count() || g.size() != grid.dof_count()) {
    throw DimensionError("inner_l2: field size does not match grid");
  }
  return (grid.weights().array() * f.array() * g.array()).sum();
}

double norm_lp(const SpatialGrid& grid, const Field& f, double p) {
  if (!(p >= 1.0)) throw DomainError("norm_lp: p must be >= 1");
  if (f.size() != grid.dof_count()) {
    throw DimensionError("norm_lp: field size does not match grid");
  }
  if (f.size() == 0) return 0.0;
  if (std::isinf(p)) return f.cwiseAbs().maxCoeff();
  if (p == 2.0) return std::sqrt(inner_l2(grid, f, f));
  return std::pow((grid.weights().array() * f.array().abs().pow(p)).sum(), 1.0 / p);
}

double norm_l2(const SpatialGrid& grid, const Field& f) { return norm_lp(grid, f, 2.0); }

double norm_h1(const SpatialGrid& grid, const Field& f) {
  if (f.size() != grid.dof_count()) {
    throw DimensionError("norm_h1: field size does not match grid");
  }
  double grad = 0.0;
  for (const auto& e : grid.edges()) {
    const double fa = e.a >= 0 ? f[e.a] : 0.0;
    const double fb = e.b >= 0 ? f[e.b] : 0.0;
    grad += e.coeff * (fa - fb) * (fa - fb);
  }
  return std::sqrt(inner_l2(grid, f, f) + grad);
}

ControlOperator ControlOperator::distributed(const SpatialGrid& grid,
                                             const Eigen::VectorXd& mask) {
  if (mask.size() != grid.dof_count()) {
    throw DimensionError("control mask does not match grid");
  }
  ControlOperator op;
  op.kind_ = ControlKind::Distributed;
  op.state_size_ = grid.dof_count();
  std::vector<double> cw;
  for (int k = 0; k < grid.dof_count(); ++k) {
    if (mask[k] != 0.0) {
      op.nodes_.push_back(k);
      cw.push_back(grid.weights()[k]);
    }
  }
  op.control_weights_ =
      Eigen::Map<Eigen::VectorXd>(cw.data(), static_cast<Eigen::Index>(cw.size()));
  op.injection_ = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(cw.size()));
  op.gram_ = Eigen::VectorXd::Zero(grid.dof_count());
  for (int k : op.nodes_) op.gram_[k] = 1.0;
  return op;
}

ControlOperator ControlOperator::boundary(const SpatialGrid& grid) {
  if (grid.bc() != BoundaryKind::Neumann) {
    throw DomainError("boundary control requires a Neumann grid");
  }
  ControlOperator op;
  op.kind_ = ControlKind::Boundary;
  op.state_size_ = grid.dof_count();
  op.nodes_ = grid.boundary_dofs();
  op.control_weights_ = grid.boundary_weights();
  // Ghost-node substitution of the flux condition adds (arc length / cell
  // area) * u to the boundary rows: 2/h on edges, 2/hx + 2/hy at corners.
  op.injection_.resize(static_cast<Eigen::Index>(op.nodes_.size()));
  op.gram_ = Eigen::VectorXd::Zero(grid.dof_count());
  for (std::size_t k = 0; k < op.nodes_.size(); ++k) {
    const int dof = op.nodes_[k];
    const double inj = op.control_weights_[static_cast<Eigen::Index>(k)] / grid.weights()[dof];
    op.injection_[static_cast<Eigen::Index>(k)] = inj;
    op.gram_[dof] = inj;
  }
  return op;
}

Field ControlOperator::apply(const Field& u) const {
  if (u.size() != control_size()) {
    throw DimensionError("control vector has wrong size");
  }
  Field out = Field::Zero(state_size_);
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    out[nodes_[k]] = injection_[i] * u[i];
  }
  return out;
}

Field ControlOperator::adjoint(const Field& lambda) const {
  if (lambda.size() != state_size_) {
    throw DimensionError("adjoint field has wrong size");
  }
  Field out(control_size());
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    out[static_cast<Eigen::Index>(k)] = lambda[nodes_[k]];
  }
  return out;
}

double ControlOperator::norm_sq(const Field& u) const {
  if (u.size() != control_size()) {
    throw DimensionError("control vector has wrong size");
  }
  return (control_weights_.array() * u.array().square()).sum();
}

Field control_injection(const SpatialGrid& grid, const Field& u,
                        const ControlOperator& op) {
  if (grid.dof_count() != op.gram_diagonal().size()) {
    throw DimensionError("control operator built for a different grid");
  }
  return op.apply(u);
}

}  // namespace turnpike
