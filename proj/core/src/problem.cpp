#include "turnpike/problem.hpp"

#include "turnpike/errors.hpp"

#include <Eigen/SparseLU>

#include <cmath>

namespace turnpike {

namespace {

double at(const Field& x, int idx) { return idx < 0 ? 0.0 : x[idx]; }

constexpr double kPi = 3.14159265358979323846;

}  // namespace

double reference_bump(double s) {
  if (!(s < 1.0)) return 0.0;
  return 10.0 * std::exp(1.0 - 1.0 / (1.0 - s * s));
}

double reference_static(double x, double y) {
  const double s = (10.0 / 3.0) * std::hypot(x - 1.5, y - 0.5);
  return reference_bump(s);
}

Eigen::Vector2d reference_peak(double t) {
  const double c = std::cos(kPi * t / 10.0);
  return {1.5 - c, std::abs(c)};
}

double reference_dynamic(double t, double x, double y) {
  const auto p = reference_peak(t);
  const double s = (10.0 / 3.0) * std::hypot(x - p.x(), y - p.y());
  return reference_bump(s);
}

Problem::Problem(OCPSpec spec, SpatialGrid grid)
    : spec_(std::move(spec)),
      grid_(std::move(grid)),
      control_(ControlOperator::distributed(grid_, Eigen::VectorXd::Ones(grid_.dof_count()))) {
  if (!(spec_.alpha > 0.0)) throw DomainError("alpha must be positive");
  if (spec_.cubic.e < 0.0) throw DomainError("nonlinearity weight e must be >= 0");
  if (spec_.conductivity.c < 0.0) throw DomainError("conductivity weight c must be >= 0");
  const int n = grid_.dof_count();

  if (spec_.x0.size() == 0) {
    x0_ = Field::Zero(n);
  } else if (spec_.x0.size() != n) {
    throw DimensionError("initial state does not match the grid");
  } else {
    x0_ = spec_.x0;
  }
  if (spec_.observation_mask.size() == 0) {
    observation_ = Eigen::VectorXd::Ones(n);
  } else if (spec_.observation_mask.size() != n) {
    throw DimensionError("observation mask does not match the grid");
  } else {
    observation_ = spec_.observation_mask;
  }

  if (spec_.dynamics == DynamicsKind::SemilinearDistributed) {
    elliptic_.emplace(grid_, spec_.diffusion);
    if (spec_.control_mask.size() != 0) {
      control_ = ControlOperator::distributed(grid_, spec_.control_mask);
    }
  } else {
    control_ = ControlOperator::boundary(grid_);
  }

  if (is_static()) {
    static_reference_ =
        spec_.reference_scale * grid_.sample([](double x, double y) { return reference_static(x, y); });
  }
}

Field Problem::reference(double t) const {
  if (is_static()) return static_reference_;
  const double abs_t = t + spec_.time_offset;
  return spec_.reference_scale *
         grid_.sample([abs_t](double x, double y) { return reference_dynamic(abs_t, x, y); });
}

Problem Problem::with_initial_state(Field x0) const {
  Problem copy = *this;
  if (x0.size() != dof_count()) throw DimensionError("initial state does not match the grid");
  copy.spec_.x0 = x0;
  copy.x0_ = std::move(x0);
  return copy;
}

Problem Problem::with_time_offset(double offset) const {
  Problem copy = *this;
  copy.spec_.time_offset = offset;
  return copy;
}

Eigen::VectorXd Problem::edge_kappa(const Field& x) const {
  const auto& edges = grid_.edges();
  Eigen::VectorXd k(static_cast<Eigen::Index>(edges.size()));
  const auto& cond = spec_.conductivity;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    k[static_cast<Eigen::Index>(e)] =
        0.5 * (cond.value(at(x, edges[e].a)) + cond.value(at(x, edges[e].b)));
  }
  return k;
}

Field Problem::state_operator(const Field& x) const {
  if (x.size() != dof_count()) throw DimensionError("state has wrong size");
  if (elliptic_) {
    Field out = elliptic_->apply(x);
    for (int k = 0; k < out.size(); ++k) out[k] += spec_.cubic.value(x[k]);
    return out;
  }
  const SparseMatrix s = assemble_stiffness(grid_, edge_kappa(x));
  return (s * x).cwiseQuotient(grid_.weights());
}

// Stiffness-form derivative K(x) of W F(x) for the quasilinear operator.
SparseMatrix Problem::quasilinear_matrix(const Field& x, bool transpose) const {
  const auto& cond = spec_.conductivity;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(grid_.edges().size() * 4);
  const auto add = [&](int r, int c, double v) {
    if (r < 0 || c < 0) return;
    if (transpose) std::swap(r, c);
    trip.emplace_back(r, c, v);
  };
  for (const auto& edge : grid_.edges()) {
    const double xa = at(x, edge.a);
    const double xb = at(x, edge.b);
    const double d = xa - xb;
    const double k = 0.5 * (cond.value(xa) + cond.value(xb));
    const double da = edge.coeff * (k + 0.5 * cond.first(xa) * d);
    const double db = edge.coeff * (-k + 0.5 * cond.first(xb) * d);
    add(edge.a, edge.a, da);
    add(edge.a, edge.b, db);
    add(edge.b, edge.a, -da);
    add(edge.b, edge.b, -db);
  }
  SparseMatrix m(dof_count(), dof_count());
  m.setFromTriplets(trip.begin(), trip.end());
  const Eigen::VectorXd winv = grid_.weights().cwiseInverse();
  return winv.asDiagonal() * m;
}

SparseMatrix Problem::state_jacobian(const Field& x) const {
  if (x.size() != dof_count()) throw DimensionError("state has wrong size");
  if (elliptic_) {
    SparseMatrix j = elliptic_->matrix();
    Eigen::VectorXd d(x.size());
    for (int k = 0; k < x.size(); ++k) d[k] = spec_.cubic.first(x[k]);
    SparseMatrix diag(x.size(), x.size());
    diag.reserve(Eigen::VectorXi::Ones(x.size()));
    for (int k = 0; k < x.size(); ++k) diag.insert(k, k) = d[k];
    return j + diag;
  }
  return quasilinear_matrix(x, false);
}

SparseMatrix Problem::adjoint_jacobian(const Field& x) const {
  if (elliptic_) return state_jacobian(x);  // A is W-self-adjoint
  // W-adjoint of W^{-1} K is W^{-1} K^T.
  return quasilinear_matrix(x, true);
}

Field Problem::adjoint_apply(const Field& x, const Field& lambda) const {
  if (lambda.size() != dof_count()) throw DimensionError("adjoint has wrong size");
  return adjoint_jacobian(x) * lambda;
}

SparseMatrix Problem::adjoint_hessian(const Field& x, const Field& lambda) const {
  const int n = dof_count();
  std::vector<Eigen::Triplet<double>> trip;
  if (elliptic_) {
    for (int k = 0; k < n; ++k) {
      const double v = spec_.cubic.second(x[k]) * lambda[k];
      if (v != 0.0) trip.emplace_back(k, k, v);
    }
  } else {
    const auto& cond = spec_.conductivity;
    const Eigen::VectorXd& w = grid_.weights();
    const auto add = [&](int r, int c, double v) {
      if (r < 0 || c < 0 || v == 0.0) return;
      trip.emplace_back(r, c, v / w[r]);
    };
    for (const auto& edge : grid_.edges()) {
      const double xa = at(x, edge.a);
      const double xb = at(x, edge.b);
      const double d = xa - xb;
      const double l = edge.coeff * (at(lambda, edge.a) - at(lambda, edge.b));
      add(edge.a, edge.a, l * (0.5 * cond.second(xa) * d + cond.first(xa)));
      add(edge.b, edge.b, l * (0.5 * cond.second(xb) * d - cond.first(xb)));
      const double mixed = l * 0.5 * (cond.first(xb) - cond.first(xa));
      add(edge.a, edge.b, mixed);
      add(edge.b, edge.a, mixed);
    }
  }
  SparseMatrix h(n, n);
  h.setFromTriplets(trip.begin(), trip.end());
  return h;
}

Eigen::VectorXd Problem::control_gram_over_alpha() const {
  return control_.gram_diagonal() / spec_.alpha;
}

Field Problem::implicit_step(const Field& x_prev, double dt, const Field& forcing,
                             const Field* guess) const {
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  const int n = dof_count();
  Field x = guess ? *guess : x_prev;
  const auto residual = [&](const Field& v) -> Field {
    return (v - x_prev) / dt + state_operator(v) - forcing;
  };
  const double scale =
      std::max({1.0, x_prev.lpNorm<Eigen::Infinity>() / dt, forcing.lpNorm<Eigen::Infinity>()});
  const double tol = 1e-13 * scale;
  Field r = residual(x);
  double rnorm = r.norm();
  SparseMatrix ident(n, n);
  ident.setIdentity();
  Eigen::SparseLU<SparseMatrix> lu;
  std::vector<double> history{rnorm};
  for (int it = 0; it < 50; ++it) {
    if (r.lpNorm<Eigen::Infinity>() <= tol) return x;
    SparseMatrix j = ident / dt + state_jacobian(x);
    j.makeCompressed();
    lu.compute(j);
    if (lu.info() != Eigen::Success) throw SolverError("implicit step: singular Jacobian");
    const Field delta = lu.solve(-r);
    double step = 1.0;
    Field trial = x + delta;
    Field rt = residual(trial);
    for (int h = 0; h < 20 && !(rt.norm() < rnorm); ++h) {
      step *= 0.5;
      trial = x + step * delta;
      rt = residual(trial);
    }
    if (!rt.allFinite()) throw SolverError("implicit step: non-finite state");
    // Stagnation at round-off: accept the Newton update.
    if (!(rt.norm() < rnorm)) {
      if (delta.lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + x.lpNorm<Eigen::Infinity>())) {
        return x + delta;
      }
      throw ConvergenceError("implicit step: line search failed", history);
    }
    x = std::move(trial);
    r = std::move(rt);
    rnorm = r.norm();
    history.push_back(rnorm);
  }
  if (r.lpNorm<Eigen::Infinity>() <= 1e3 * tol) return x;
  throw ConvergenceError("implicit step: Newton did not converge", history);
}

double cost(const Trajectory& x, const Trajectory& u, const Problem& problem,
            const TimeGrid& tgrid, TimeRule rule) {
  const int nt = tgrid.size();
  if (static_cast<int>(x.size()) != nt || static_cast<int>(u.size()) != nt) {
    throw DimensionError("cost: trajectories do not match the time grid");
  }
  const Eigen::VectorXd& w = problem.grid().weights();
  const Eigen::VectorXd& mask = problem.observation();
  const auto state_term = [&](int i) {
    if (x[static_cast<std::size_t>(i)].size() != problem.dof_count()) {
      throw DimensionError("cost: state slice has wrong size");
    }
    const Field d = x[static_cast<std::size_t>(i)] - problem.reference(tgrid[i]);
    return 0.5 * (w.array() * mask.array() * d.array().square()).sum();
  };
  const auto control_term = [&](int i) {
    return 0.5 * problem.alpha() * problem.control().norm_sq(u[static_cast<std::size_t>(i)]);
  };
  double j = 0.0;
  if (rule == TimeRule::Trapezoid) {
    const Eigen::VectorXd tw = time_weights(tgrid);
    for (int i = 0; i < nt; ++i) j += tw[i] * (state_term(i) + control_term(i));
  } else {
    for (int i = 0; i + 1 < nt; ++i) {
      j += tgrid.step(i) * (state_term(i + 1) + control_term(i));
    }
  }
  return j;
}

Trajectory dynamics_residual(const Trajectory& x, const Trajectory& u,
                             const Problem& problem, const TimeGrid& tgrid) {
  const int nt = tgrid.size();
  if (static_cast<int>(x.size()) != nt || static_cast<int>(u.size()) < nt - 1) {
    throw DimensionError("dynamics_residual: trajectories do not match the time grid");
  }
  Trajectory r(static_cast<std::size_t>(nt));
  r[0] = x[0] - problem.x0();
  for (int i = 0; i + 1 < nt; ++i) {
    const auto k = static_cast<std::size_t>(i);
    r[k + 1] = (x[k + 1] - x[k]) / tgrid.step(i) + problem.state_operator(x[k + 1]) -
               problem.control().apply(u[k]);
  }
  return r;
}

Trajectory simulate_state(const Problem& problem, const TimeGrid& tgrid,
                          const Trajectory& u) {
  const int nt = tgrid.size();
  if (static_cast<int>(u.size()) < nt - 1) {
    throw DimensionError("simulate_state: control trajectory too short");
  }
  Trajectory x;
  x.reserve(static_cast<std::size_t>(nt));
  x.push_back(problem.x0());
  for (int i = 0; i + 1 < nt; ++i) {
    const auto k = static_cast<std::size_t>(i);
    x.push_back(problem.implicit_step(x[k], tgrid.step(i), problem.control().apply(u[k])));
  }
  return x;
}

Trajectory zero_trajectory(int slices, int size) {
  return Trajectory(static_cast<std::size_t>(slices), Field::Zero(size));
}

}  // namespace turnpike
