#include "turnpike/extremal.hpp"

#include "turnpike/errors.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace turnpike {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

void check_point(const ExtremalPoint& z, int n, int slices) {
  if (z.slices() != slices || static_cast<int>(z.lambda.size()) != slices) {
    throw DimensionError("extremal point does not match the time grid");
  }
  for (int i = 0; i < slices; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (z.x[k].size() != n || z.lambda[k].size() != n) {
      throw DimensionError("extremal point slice has wrong size");
    }
  }
}

void check_perturbation(const Perturbation& eps, int n, int slices) {
  const auto m = static_cast<std::size_t>(slices - 1);
  if (eps.eps1.size() != m || eps.eps2.size() != m || eps.epsT.size() != n ||
      eps.eps0.size() != n) {
    throw DimensionError("perturbation does not match the time grid");
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (eps.eps1[i].size() != n || eps.eps2[i].size() != n) {
      throw DimensionError("perturbation slice has wrong size");
    }
  }
}

void add_block(Triplets& trip, const SparseMatrix& m, int row0, int col0) {
  for (Eigen::Index j = 0; j < m.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(m, j); it; ++it) {
      trip.emplace_back(row0 + static_cast<int>(it.row()), col0 + static_cast<int>(it.col()),
                        it.value());
    }
  }
}

void add_diagonal(Triplets& trip, const Eigen::VectorXd& d, int row0, int col0) {
  for (int k = 0; k < d.size(); ++k) {
    if (d[k] != 0.0) trip.emplace_back(row0 + k, col0 + k, d[k]);
  }
}

double metric_norm(const Eigen::VectorXd& v, const Eigen::VectorXd& w) {
  return std::sqrt((w.array() * v.array().square()).sum());
}

}  // namespace

ExtremalPoint zero_extremal(int size, int slices) {
  return {zero_trajectory(slices, size), zero_trajectory(slices, size)};
}

ExtremalPoint constant_extremal(const Field& x, const Field& lambda, int slices) {
  if (x.size() != lambda.size()) throw DimensionError("state and adjoint sizes differ");
  return {Trajectory(static_cast<std::size_t>(slices), x),
          Trajectory(static_cast<std::size_t>(slices), lambda)};
}

Perturbation zero_perturbation(int size, int slices) {
  if (slices < 2) throw DomainError("perturbation needs at least 2 time slices");
  return {zero_trajectory(slices - 1, size), Field::Zero(size), zero_trajectory(slices - 1, size),
          Field::Zero(size)};
}

Eigen::VectorXd pack(const ExtremalPoint& z) {
  const int slices = z.slices();
  if (slices == 0) return {};
  const int n = static_cast<int>(z.x[0].size());
  check_point(z, n, slices);
  Eigen::VectorXd v(2 * static_cast<Eigen::Index>(n) * slices);
  for (int k = 0; k < slices; ++k) {
    const auto s = static_cast<std::size_t>(k);
    v.segment(2 * k * n, n) = z.x[s];
    v.segment((2 * k + 1) * n, n) = z.lambda[s];
  }
  return v;
}

Eigen::VectorXd pack(const Perturbation& eps) {
  const int n = static_cast<int>(eps.eps0.size());
  const int slices = static_cast<int>(eps.eps1.size()) + 1;
  check_perturbation(eps, n, slices);
  Eigen::VectorXd v(2 * static_cast<Eigen::Index>(n) * slices);
  v.segment(0, n) = eps.eps0;
  for (int i = 0; i + 1 < slices; ++i) {
    const auto s = static_cast<std::size_t>(i);
    v.segment(2 * (i + 1) * n, n) = eps.eps2[s];
    v.segment((2 * i + 1) * n, n) = eps.eps1[s];
  }
  v.segment((2 * slices - 1) * n, n) = eps.epsT;
  return v;
}

ExtremalPoint unpack_point(const Eigen::VectorXd& v, int size, int slices) {
  if (v.size() != 2 * static_cast<Eigen::Index>(size) * slices) {
    throw DimensionError("packed vector does not match the layout");
  }
  ExtremalPoint z;
  z.x.reserve(static_cast<std::size_t>(slices));
  z.lambda.reserve(static_cast<std::size_t>(slices));
  for (int k = 0; k < slices; ++k) {
    z.x.emplace_back(v.segment(2 * k * size, size));
    z.lambda.emplace_back(v.segment((2 * k + 1) * size, size));
  }
  return z;
}

Perturbation unpack_perturbation(const Eigen::VectorXd& v, int size, int slices) {
  if (v.size() != 2 * static_cast<Eigen::Index>(size) * slices) {
    throw DimensionError("packed vector does not match the layout");
  }
  Perturbation eps;
  eps.eps0 = v.segment(0, size);
  for (int i = 0; i + 1 < slices; ++i) {
    eps.eps2.emplace_back(v.segment(2 * (i + 1) * size, size));
    eps.eps1.emplace_back(v.segment((2 * i + 1) * size, size));
  }
  eps.epsT = v.segment((2 * slices - 1) * size, size);
  return eps;
}

Eigen::VectorXd solution_metric(const Problem& problem, const TimeGrid& tgrid) {
  const int n = problem.dof_count();
  const Eigen::VectorXd tw = time_weights(tgrid);
  const Eigen::VectorXd& w = problem.grid().weights();
  Eigen::VectorXd m(2 * static_cast<Eigen::Index>(n) * tgrid.size());
  for (int k = 0; k < tgrid.size(); ++k) {
    m.segment(2 * k * n, n) = tw[k] * w;
    m.segment((2 * k + 1) * n, n) = tw[k] * w;
  }
  return m;
}

Eigen::VectorXd perturbation_metric(const Problem& problem, const TimeGrid& tgrid) {
  const int n = problem.dof_count();
  const int slices = tgrid.size();
  const Eigen::VectorXd& w = problem.grid().weights();
  Eigen::VectorXd m(2 * static_cast<Eigen::Index>(n) * slices);
  m.segment(0, n) = w;
  for (int i = 0; i + 1 < slices; ++i) {
    m.segment(2 * (i + 1) * n, n) = tgrid.step(i) * w;
    m.segment((2 * i + 1) * n, n) = tgrid.step(i) * w;
  }
  m.segment((2 * slices - 1) * n, n) = w;
  return m;
}

Perturbation residual(const ExtremalPoint& z, const Problem& problem, const TimeGrid& tgrid,
                      const Perturbation& eps) {
  const int n = problem.dof_count();
  const int slices = tgrid.size();
  check_point(z, n, slices);
  check_perturbation(eps, n, slices);
  const Eigen::VectorXd gram = problem.control_gram_over_alpha();
  const Eigen::VectorXd& mask = problem.observation();

  Perturbation r;
  r.eps0 = z.x[0] - problem.x0() - eps.eps0;
  r.eps1.reserve(static_cast<std::size_t>(slices - 1));
  r.eps2.reserve(static_cast<std::size_t>(slices - 1));
  for (int i = 0; i + 1 < slices; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double dt = tgrid.step(i);
    const Field& xn = z.x[k + 1];
    const Field& lam = z.lambda[k];
    r.eps2.push_back((xn - z.x[k]) / dt + problem.state_operator(xn) -
                     gram.cwiseProduct(lam) - eps.eps2[k]);
    r.eps1.push_back(mask.cwiseProduct(xn - problem.reference(tgrid[i + 1])) -
                     (z.lambda[k + 1] - lam) / dt + problem.adjoint_apply(xn, lam) -
                     eps.eps1[k]);
  }
  r.epsT = z.lambda.back() - eps.epsT;
  return r;
}

Eigen::VectorXd residual_vector(const ExtremalPoint& z, const Problem& problem,
                                const TimeGrid& tgrid, const Perturbation& eps) {
  return pack(residual(z, problem, tgrid, eps));
}

KKTSystem assemble_kkt(const ExtremalPoint& z0, const Problem& problem, const TimeGrid& tgrid) {
  const int n = problem.dof_count();
  const int slices = tgrid.size();
  check_point(z0, n, slices);
  for (int i = 0; i < slices; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (!z0.x[k].allFinite() || !z0.lambda[k].allFinite()) {
      throw DomainError("linearization point has non-finite entries");
    }
  }
  const Eigen::VectorXd gram = problem.control_gram_over_alpha();
  const Eigen::VectorXd& mask = problem.observation();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const auto xs = [n](int k) { return 2 * k * n; };
  const auto ls = [n](int k) { return (2 * k + 1) * n; };

  Triplets trip;
  trip.reserve(static_cast<std::size_t>(slices) * static_cast<std::size_t>(n) * 24);
  add_diagonal(trip, ones, xs(0), xs(0));
  for (int i = 0; i + 1 < slices; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double dt = tgrid.step(i);
    const Field& xn = z0.x[k + 1];
    const Field& lam = z0.lambda[k];

    // state row i lives in x-slot i+1
    const int srow = xs(i + 1);
    add_block(trip, problem.state_jacobian(xn), srow, xs(i + 1));
    add_diagonal(trip, ones / dt, srow, xs(i + 1));
    add_diagonal(trip, -ones / dt, srow, xs(i));
    add_diagonal(trip, -gram, srow, ls(i));

    // adjoint row i lives in lambda-slot i
    const int arow = ls(i);
    const SparseMatrix hess = problem.adjoint_hessian(xn, lam);
    add_block(trip, hess, arow, xs(i + 1));
    add_diagonal(trip, mask, arow, xs(i + 1));
    add_block(trip, problem.adjoint_jacobian(xn), arow, ls(i));
    add_diagonal(trip, ones / dt, arow, ls(i));
    add_diagonal(trip, -ones / dt, arow, ls(i + 1));
  }
  add_diagonal(trip, ones, ls(slices - 1), ls(slices - 1));

  const Eigen::Index dim = 2 * static_cast<Eigen::Index>(n) * slices;
  SparseMatrix m(dim, dim);
  m.setFromTriplets(trip.begin(), trip.end());
  if (!Eigen::Map<const Eigen::VectorXd>(m.valuePtr(), m.nonZeros()).allFinite()) {
    throw DomainError("KKT matrix has non-finite entries");
  }
  return KKTSystem(std::move(m), n, slices);
}

NewtonResult newton_solve(const Problem& problem, const TimeGrid& tgrid, const Perturbation& eps,
                          const ExtremalPoint& z_init, const NewtonOptions& opts) {
  const int n = problem.dof_count();
  const int slices = tgrid.size();
  Eigen::VectorXd z = pack(z_init);
  Eigen::VectorXd r = residual_vector(z_init, problem, tgrid, eps);
  double rnorm = r.norm();
  NewtonResult out;
  out.residual_history.push_back(rnorm);
  if (!std::isfinite(rnorm)) {
    throw ConvergenceError("newton_solve: non-finite initial residual", out.residual_history);
  }

  while (rnorm > opts.tol) {
    if (out.iterations >= opts.max_iter) {
      throw ConvergenceError("newton_solve: no convergence in " + std::to_string(opts.max_iter) +
                                 " iterations",
                             out.residual_history);
    }
    const ExtremalPoint zp = unpack_point(z, n, slices);
    const KKTSystem k = assemble_kkt(zp, problem, tgrid);
    const Eigen::VectorXd dz = k.solve(Eigen::VectorXd(-r));

    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd trial, rt;
    for (int h = 0; h <= opts.max_halvings; ++h) {
      trial = z + step * dz;
      rt = residual_vector(unpack_point(trial, n, slices), problem, tgrid, eps);
      if (rt.allFinite() && rt.norm() < rnorm) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      throw ConvergenceError("newton_solve: line search failed at residual " +
                                 std::to_string(rnorm),
                             out.residual_history);
    }
    z = std::move(trial);
    r = std::move(rt);
    rnorm = r.norm();
    ++out.iterations;
    out.residual_history.push_back(rnorm);
  }
  out.z = unpack_point(z, n, slices);
  return out;
}

FrozenNewtonResult frozen_newton_solve(const Problem& problem, const TimeGrid& tgrid,
                                       const Perturbation& eps, const ExtremalPoint& z0,
                                       const Perturbation& eps0,
                                       const FrozenNewtonOptions& opts) {
  const int n = problem.dof_count();
  const int slices = tgrid.size();
  const double base = residual_vector(z0, problem, tgrid, eps0).norm();
  if (!(base <= opts.base_tol)) {
    throw DomainError("frozen_newton_solve: base point is not a solution (residual " +
                      std::to_string(base) + ")");
  }
  const KKTSystem k = assemble_kkt(z0, problem, tgrid);
  k.factorize();
  const Eigen::VectorXd metric = solution_metric(problem, tgrid);

  FrozenNewtonResult out;
  Eigen::VectorXd z = pack(z0);
  int above_one = 0;
  for (;;) {
    const Eigen::VectorXd r = residual_vector(unpack_point(z, n, slices), problem, tgrid, eps);
    const double rnorm = r.norm();
    out.residual_history.push_back(rnorm);
    if (!std::isfinite(rnorm)) {
      throw DivergenceError("frozen_newton_solve: non-finite residual", out.step_norms);
    }
    if (rnorm <= opts.tol) break;
    if (out.iterations >= opts.max_iter) {
      throw ConvergenceError("frozen_newton_solve: no convergence", out.step_norms);
    }
    Eigen::VectorXd dz;
    try {
      dz = k.solve(Eigen::VectorXd(-r));
    } catch (const SolverError&) {
      throw DivergenceError("frozen_newton_solve: step solve failed", out.step_norms);
    }
    const double snorm = metric_norm(dz, metric);
    if (!out.step_norms.empty()) {
      const double ratio = snorm / out.step_norms.back();
      out.ratios.push_back(ratio);
      above_one = ratio >= 1.0 ? above_one + 1 : 0;
    }
    out.step_norms.push_back(snorm);
    z += dz;
    ++out.iterations;
    if (above_one >= opts.divergence_window || !std::isfinite(snorm)) {
      throw DivergenceError("frozen_newton_solve: steps stopped contracting", out.step_norms);
    }
  }
  out.z = unpack_point(z, n, slices);
  return out;
}

Eigen::VectorXd static_residual(const Problem& problem, const Field& x, const Field& lambda) {
  const int n = problem.dof_count();
  if (x.size() != n || lambda.size() != n) throw DimensionError("static point has wrong size");
  Eigen::VectorXd r(2 * n);
  r.head(n) = problem.observation().cwiseProduct(x - problem.reference(0.0)) +
              problem.adjoint_apply(x, lambda);
  r.tail(n) = problem.state_operator(x) - problem.control_gram_over_alpha().cwiseProduct(lambda);
  return r;
}

StaticSolution solve_static(const Problem& problem, const NewtonOptions& opts) {
  if (!problem.is_static()) throw DomainError("solve_static needs a static reference");
  const int n = problem.dof_count();
  Eigen::VectorXd z = Eigen::VectorXd::Zero(2 * n);
  const auto res = [&](const Eigen::VectorXd& v) {
    return static_residual(problem, v.head(n), v.tail(n));
  };
  Eigen::VectorXd r = res(z);
  double rnorm = r.norm();
  StaticSolution out;
  out.residual_history.push_back(rnorm);
  const Eigen::VectorXd gram = problem.control_gram_over_alpha();
  Eigen::SparseLU<SparseMatrix> lu;
  while (rnorm > opts.tol) {
    if (out.iterations >= opts.max_iter) {
      throw ConvergenceError("solve_static: no convergence", out.residual_history);
    }
    const Field x = z.head(n);
    const Field lam = z.tail(n);
    Triplets trip;
    add_block(trip, problem.adjoint_hessian(x, lam), 0, 0);
    add_diagonal(trip, problem.observation(), 0, 0);
    add_block(trip, problem.adjoint_jacobian(x), 0, n);
    add_block(trip, problem.state_jacobian(x), n, 0);
    add_diagonal(trip, -gram, n, n);
    SparseMatrix j(2 * n, 2 * n);
    j.setFromTriplets(trip.begin(), trip.end());
    j.makeCompressed();
    lu.compute(j);
    if (lu.info() != Eigen::Success) {
      throw SolverError("solve_static: singular Jacobian", std::numeric_limits<double>::infinity());
    }
    const Eigen::VectorXd dz = lu.solve(Eigen::VectorXd(-r));
    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd trial, rt;
    for (int h = 0; h <= opts.max_halvings; ++h) {
      trial = z + step * dz;
      rt = res(trial);
      if (rt.allFinite() && rt.norm() < rnorm) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      throw ConvergenceError("solve_static: line search failed", out.residual_history);
    }
    z = std::move(trial);
    r = std::move(rt);
    rnorm = r.norm();
    ++out.iterations;
    out.residual_history.push_back(rnorm);
  }
  out.x = z.head(n);
  out.lambda = z.tail(n);
  out.u = problem.control().adjoint(out.lambda) / problem.alpha();
  return out;
}

Perturbation static_as_perturbation(const Field& x_bar, const Field& lambda_bar, const Field& x0,
                                    const TimeGrid& tgrid) {
  if (x_bar.size() != lambda_bar.size() || x_bar.size() != x0.size()) {
    throw DimensionError("static_as_perturbation: field sizes differ");
  }
  Perturbation eps = zero_perturbation(static_cast<int>(x_bar.size()), tgrid.size());
  eps.epsT = lambda_bar;
  eps.eps0 = x_bar - x0;
  return eps;
}

Trajectory recover_control(const Trajectory& lambda, const Problem& problem) {
  Trajectory u;
  u.reserve(lambda.size());
  for (const auto& l : lambda) u.push_back(problem.control().adjoint(l) / problem.alpha());
  return u;
}

double reduced_objective(const Problem& problem, const TimeGrid& tgrid, const Trajectory& u) {
  const Trajectory x = simulate_state(problem, tgrid, u);
  Trajectory uu = u;
  uu.resize(static_cast<std::size_t>(tgrid.size()), Field::Zero(problem.control_size()));
  return cost(x, uu, problem, tgrid, TimeRule::ImplicitEuler);
}

Trajectory reduced_gradient(const Problem& problem, const TimeGrid& tgrid, const Trajectory& u) {
  const int slices = tgrid.size();
  const int n = problem.dof_count();
  const Trajectory x = simulate_state(problem, tgrid, u);
  Trajectory lambda = zero_trajectory(slices, n);
  SparseMatrix ident(n, n);
  ident.setIdentity();
  Eigen::SparseLU<SparseMatrix> lu;
  for (int i = slices - 2; i >= 0; --i) {
    const auto k = static_cast<std::size_t>(i);
    const double dt = tgrid.step(i);
    SparseMatrix m = ident / dt + problem.adjoint_jacobian(x[k + 1]);
    m.makeCompressed();
    lu.compute(m);
    const Field rhs = lambda[k + 1] / dt -
                      problem.observation().cwiseProduct(x[k + 1] - problem.reference(tgrid[i + 1]));
    lambda[k] = lu.solve(rhs);
  }
  const auto& cw = problem.control().control_weights();
  Trajectory grad = zero_trajectory(slices, problem.control_size());
  for (int i = 0; i + 1 < slices; ++i) {
    const auto k = static_cast<std::size_t>(i);
    grad[k] = tgrid.step(i) *
              cw.cwiseProduct(problem.alpha() * u[k] - problem.control().adjoint(lambda[k]));
  }
  return grad;
}

void write_csv(std::ostream& out, const ExtremalPoint& z, const TimeGrid& tgrid) {
  if (z.slices() != tgrid.size()) throw DimensionError("write_csv: point does not match grid");
  const auto old = out.precision(17);
  out << "time,node,x,lambda\n";
  for (int i = 0; i < z.slices(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    for (Eigen::Index j = 0; j < z.x[k].size(); ++j) {
      out << tgrid[i] << ',' << j << ',' << z.x[k][j] << ',' << z.lambda[k][j] << '\n';
    }
  }
  out.precision(old);
}

ExtremalPoint read_extremal_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("time,node,x,lambda", 0) != 0) {
    throw DomainError("read_extremal_csv: missing header");
  }
  std::map<double, std::map<long, std::pair<double, double>>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    double t = 0, x = 0, l = 0;
    long node = 0;
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(ss >> t >> c1 >> node >> c2 >> x >> c3 >> l) || c1 != ',' || c2 != ',' || c3 != ',') {
      throw DomainError("read_extremal_csv: malformed row '" + line + "'");
    }
    rows[t][node] = {x, l};
  }
  ExtremalPoint z;
  std::size_t size = 0;
  for (const auto& [t, nodes] : rows) {
    if (z.x.empty()) size = nodes.size();
    if (nodes.size() != size) throw DimensionError("read_extremal_csv: ragged time slices");
    Field x(static_cast<Eigen::Index>(size)), l(static_cast<Eigen::Index>(size));
    Eigen::Index j = 0;
    for (const auto& [node, v] : nodes) {
      if (node != j) throw DimensionError("read_extremal_csv: node indices not contiguous");
      x[j] = v.first;
      l[j] = v.second;
      ++j;
    }
    z.x.push_back(std::move(x));
    z.lambda.push_back(std::move(l));
  }
  return z;
}

}  // namespace turnpike
