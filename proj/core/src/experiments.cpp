#include "turnpike/analysis.hpp"
#include "turnpike/errors.hpp"

#include <cmath>

namespace turnpike {

namespace {

constexpr double kPi = 3.14159265358979323846;

double control_norm(const Problem& problem, const Field& u) {
  return std::sqrt(problem.control().norm_sq(u));
}

ExtremalPoint difference(const ExtremalPoint& a, const ExtremalPoint& b) {
  ExtremalPoint d;
  for (std::size_t k = 0; k < a.x.size(); ++k) {
    d.x.push_back(a.x[k] - b.x[k]);
    d.lambda.push_back(a.lambda[k] - b.lambda[k]);
  }
  return d;
}

}  // namespace

TurnpikeResult turnpike_experiment(const Problem& problem, const TimeGrid& tgrid,
                                   std::optional<double> mu) {
  TurnpikeResult out;
  out.steady = solve_static(problem);
  const int n = problem.dof_count();
  const int slices = tgrid.size();
  const double horizon = tgrid.horizon();

  // Start Newton at the turnpike; the initial slice is fixed by the first row anyway.
  ExtremalPoint init = constant_extremal(out.steady.x, out.steady.lambda, slices);
  init.x[0] = problem.x0();
  const NewtonResult solved =
      newton_solve(problem, tgrid, zero_perturbation(n, slices), init);
  out.z = solved.z;
  out.newton_iterations = solved.iterations;

  if (mu) {
    out.mu = *mu;
  } else {
    const KKTSystem k =
        assemble_kkt(constant_extremal(out.steady.x, out.steady.lambda, slices), problem, tgrid);
    out.mu = choose_mu(
        estimate_opnorm(k, perturbation_metric(problem, tgrid), solution_metric(problem, tgrid)));
  }
  const ScalingFunction s = ScalingFunction::turnpike(out.mu, horizon);

  const Trajectory u = recover_control(out.z.lambda, problem);
  Trajectory xdev;
  for (int i = 0; i < slices; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out.t.push_back(tgrid[i]);
    xdev.push_back(out.z.x[k] - out.steady.x);
    out.dev_x.push_back(norm_l2(problem.grid(), xdev.back()));
    out.dev_u.push_back(control_norm(problem, u[k] - out.steady.u));
    out.dev_lambda.push_back(norm_l2(problem.grid(), out.z.lambda[k] - out.steady.lambda));
    out.scaling.push_back(s(tgrid[i]));
  }

  std::vector<std::pair<double, double>> left, right;
  for (int i = 0; i < slices; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (tgrid[i] <= 0.5 * horizon) left.emplace_back(tgrid[i], out.dev_x[k]);
    if (tgrid[i] >= 0.5 * horizon) right.emplace_back(horizon - tgrid[i], out.dev_x[k]);
  }
  out.decay = fit_decay(left);
  out.growth = fit_decay(right);

  out.scaled_deviation = scaled_time_norm(out.dev_x, s, 2.0, tgrid) +
                         scaled_time_norm(out.dev_u, s, 2.0, tgrid) +
                         scaled_time_norm(out.dev_lambda, s, 2.0, tgrid);
  if (problem.elliptic()) {
    out.sobolev_deviation = sobolev_norm(xdev, s, problem.grid(), tgrid, *problem.elliptic());
  }
  return out;
}

Perturbation state_perturbation(const Problem& problem, const TimeGrid& tgrid, double start,
                                double amplitude) {
  const auto& grid = problem.grid();
  const double horizon = tgrid.horizon();
  if (!(start >= 0.0 && start < horizon)) {
    throw DomainError("perturbation support must start inside [0, T)");
  }
  const Field phi = grid.bc() == BoundaryKind::Dirichlet
                        ? grid.sample([&](double x, double y) {
                            return std::sin(kPi * x / grid.lx()) * std::sin(kPi * y / grid.ly());
                          })
                        : Field(Field::Ones(grid.dof_count()));
  Perturbation eps = zero_perturbation(problem.dof_count(), tgrid.size());
  for (int i = 0; i + 1 < tgrid.size(); ++i) {
    const double tm = 0.5 * (tgrid[i] + tgrid[i + 1]);
    if (tm < start) continue;
    const double b = std::sin(kPi * (tm - start) / (horizon - start));
    eps.eps2[static_cast<std::size_t>(i)] = amplitude * b * b * phi;
  }
  return eps;
}

SensitivityResult sensitivity_experiment(const Problem& problem, const TimeGrid& tgrid,
                                         const Perturbation& pert, double mu,
                                         double support_start, const ExtremalPoint* base) {
  const int n = problem.dof_count();
  const int slices = tgrid.size();
  const Perturbation zero = zero_perturbation(n, slices);
  ExtremalPoint z0;
  if (base) {
    z0 = *base;
  } else {
    z0 = newton_solve(problem, tgrid, zero, zero_extremal(n, slices)).z;
  }
  const FrozenNewtonResult perturbed = frozen_newton_solve(problem, tgrid, pert, z0, zero);
  const ExtremalPoint dz = difference(perturbed.z, z0);

  SensitivityResult out;
  out.mu = mu;
  out.frozen_ratios = perturbed.ratios;
  const ScalingFunction s = ScalingFunction::forward_exp(mu);
  const Trajectory du = recover_control(dz.lambda, problem);
  std::vector<std::pair<double, double>> window;
  for (int i = 0; i < slices; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out.t.push_back(tgrid[i]);
    out.dx.push_back(norm_l2(problem.grid(), dz.x[k]));
    out.du.push_back(control_norm(problem, du[k]));
    out.dlambda.push_back(norm_l2(problem.grid(), dz.lambda[k]));
    out.scaling.push_back(s(tgrid[i]));
    if (tgrid[i] <= 0.5 * support_start) window.emplace_back(support_start - tgrid[i], out.dx.back());
  }
  out.scaled_dz = metric_norm(pack(dz), scaled_solution_metric(problem, tgrid, s));
  out.scaled_eps = metric_norm(pack(pert), scaled_perturbation_metric(problem, tgrid, s));
  out.decay = fit_decay(window);
  return out;
}

OpnormSweep opnorm_sweep(const OCPSpec& spec, const SpatialGrid& grid,
                         const std::vector<double>& horizons, double dt, int samples,
                         double theta, std::uint64_t seed) {
  if (!(dt > 0.0)) throw DomainError("opnorm_sweep: dt must be positive");
  if (samples < 1) throw DomainError("opnorm_sweep: need at least one sample");
  const Problem problem(spec, grid);
  const int n = problem.dof_count();

  struct Cell {
    TimeGrid tgrid;
    ExtremalPoint z;
  };
  std::vector<Cell> cells;
  OpnormSweep out;
  for (double horizon : horizons) {
    const int slices = std::max(3, static_cast<int>(std::lround(horizon / dt)) + 1);
    TimeGrid tgrid = uniform_grid(horizon, slices);
    ExtremalPoint z =
        newton_solve(problem, tgrid, zero_perturbation(n, slices), zero_extremal(n, slices)).z;
    const KKTSystem k = assemble_kkt(z, problem, tgrid);
    OpnormPoint p;
    p.horizon = horizon;
    p.slices = slices;
    p.opnorm =
        estimate_opnorm(k, perturbation_metric(problem, tgrid), solution_metric(problem, tgrid));
    out.points.push_back(p);
    cells.push_back({std::move(tgrid), std::move(z)});
  }
  double worst = 0.0;
  for (const auto& p : out.points) worst = std::max(worst, p.opnorm);
  out.mu = choose_mu(worst, theta);

  for (std::size_t c = 0; c < cells.size(); ++c) {
    const TimeGrid& tgrid = cells[c].tgrid;
    const KKTSystem k = assemble_kkt(cells[c].z, problem, tgrid);
    const auto forward = ScalingFunction::forward_exp(out.mu);
    const auto tp = ScalingFunction::turnpike(out.mu, tgrid.horizon());
    const Eigen::VectorXd zf = scaled_solution_metric(problem, tgrid, forward);
    const Eigen::VectorXd ef = scaled_perturbation_metric(problem, tgrid, forward);
    const Eigen::VectorXd zt = scaled_solution_metric(problem, tgrid, tp);
    const Eigen::VectorXd et = scaled_perturbation_metric(problem, tgrid, tp);
    // eps is drawn isotropic in the scaled perturbation metric, so every
    // slot carries the same expected share of ||s eps||.
    auto& p = out.points[c];
    for (int j = 0; j < samples; ++j) {
      const Trajectory r = random_trajectory(1, k.rows(), seed + static_cast<std::uint64_t>(j));
      const Eigen::VectorXd ep = r[0].cwiseQuotient(ef.cwiseSqrt());
      p.cs_forward = std::max(p.cs_forward, metric_norm(k.solve(ep), zf) / metric_norm(ep, ef));
      const Eigen::VectorXd et_eps = r[0].cwiseQuotient(et.cwiseSqrt());
      p.cs_turnpike =
          std::max(p.cs_turnpike, metric_norm(k.solve(et_eps), zt) / metric_norm(et_eps, et));
    }
  }
  return out;
}

}  // namespace turnpike
