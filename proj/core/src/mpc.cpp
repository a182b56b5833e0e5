#include "turnpike/mpc.hpp"

#include "turnpike/errors.hpp"

#include <algorithm>
#include <cmath>

namespace turnpike {

namespace {

// Linear interpolation of vertex values at time t; zero past the last vertex.
Field interpolate(const TimeGrid& tgrid, const Trajectory& v, double t) {
  const auto& ts = tgrid.vertices();
  if (t >= ts.back()) {
    return t == ts.back() ? v.back() : Field(Field::Zero(v.back().size()));
  }
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const auto i = static_cast<std::size_t>(it - ts.begin()) - 1;
  const double a = (t - ts[i]) / (ts[i + 1] - ts[i]);
  if (a == 0.0) return v[i];
  return (1.0 - a) * v[i] + a * v[i + 1];
}

}  // namespace

void validate(const MPCConfig& cfg) {
  if (!(cfg.horizon > 0.0)) throw DomainError("MPC horizon must be positive");
  if (!(cfg.tau > 0.0 && cfg.tau <= cfg.horizon)) throw DomainError("MPC tau must lie in (0, T]");
  if (cfg.steps < 1) throw DomainError("MPC needs at least one step");
  if (cfg.plant_refinement < 1) throw DomainError("plant refinement must be >= 1");
  if (cfg.n < 2) throw DomainError("MPC grid needs at least 2 vertices");
}

TimeGrid mpc_time_grid(const MPCConfig& cfg) {
  switch (cfg.scheme) {
    case GridScheme::Uniform:
      return uniform_grid(cfg.horizon, cfg.n);
    case GridScheme::Exponential:
      return exponential_grid(cfg.horizon, cfg.n, cfg.exp_c);
    case GridScheme::PiecewiseUniform:
      return piecewise_uniform_grid(cfg.horizon, cfg.tau, cfg.n);
  }
  throw DomainError("unknown grid scheme");
}

Field ControlSignal::operator()(double t) const {
  if (knots.empty() || knots.size() != values.size()) {
    throw DimensionError("control signal needs one value per knot");
  }
  if (t <= knots.front()) return values.front();
  if (t >= knots.back()) return values.back();
  const auto it = std::upper_bound(knots.begin(), knots.end(), t);
  const auto i = static_cast<std::size_t>(it - knots.begin()) - 1;
  const double a = (t - knots[i]) / (knots[i + 1] - knots[i]);
  return (1.0 - a) * values[i] + a * values[i + 1];
}

ControlSignal control_signal(const TimeGrid& tgrid, const Trajectory& u) {
  if (static_cast<int>(u.size()) != tgrid.size()) {
    throw DimensionError("control does not match the time grid");
  }
  ControlSignal s;
  for (int i = 0; i < tgrid.intervals(); ++i) {
    s.knots.push_back(0.5 * (tgrid[i] + tgrid[i + 1]));
    s.values.push_back(u[static_cast<std::size_t>(i)]);
  }
  return s;
}

std::vector<double> window_vertices(const TimeGrid& tgrid, double tau) {
  std::vector<double> times;
  for (int i = 0; i < tgrid.size() && tgrid[i] < tau; ++i) times.push_back(tgrid[i]);
  times.push_back(tau);
  return times;
}

PlantWindow simulate_plant(const Problem& problem, const Field& x_start,
                           const std::vector<double>& times, const ControlSignal& u,
                           int refinement) {
  if (refinement < 1) throw DomainError("plant refinement must be >= 1");
  if (times.size() < 2) throw DimensionError("plant window needs at least two vertices");
  PlantWindow w;
  w.t.push_back(times.front());
  w.x.push_back(x_start);
  w.u.push_back(u(times.front()));
  for (std::size_t j = 0; j + 1 < times.size(); ++j) {
    const double h = (times[j + 1] - times[j]) / refinement;
    for (int m = 1; m <= refinement; ++m) {
      const Field forcing = problem.control().apply(w.u.back());
      w.x.push_back(problem.implicit_step(w.x.back(), h, forcing));
      w.t.push_back(m == refinement ? times[j + 1] : times[j] + m * h);
      w.u.push_back(u(w.t.back()));
    }
  }
  return w;
}

ClosedLoopResult mpc_run(const Problem& problem, const MPCConfig& cfg) {
  validate(cfg);
  const TimeGrid tgrid = mpc_time_grid(cfg);
  const int n = problem.dof_count();
  const int slices = tgrid.size();
  const Perturbation zero = zero_perturbation(n, slices);

  ClosedLoopResult out;
  Field state = problem.x0();
  ExtremalPoint previous;
  bool have_previous = false;
  for (int k = 0; k < cfg.steps; ++k) {
    const double t0 = problem.spec().time_offset + k * cfg.tau;
    const Problem step_problem = problem.with_time_offset(t0).with_initial_state(state);

    ExtremalPoint cold = zero_extremal(n, slices);
    cold.x[0] = state;
    bool warm = cfg.warm_start && have_previous;
    ExtremalPoint init = cold;
    if (warm) {
      for (int i = 0; i < slices; ++i) {
        const auto s = static_cast<std::size_t>(i);
        init.x[s] = interpolate(tgrid, previous.x, tgrid[i] + cfg.tau);
        init.lambda[s] = interpolate(tgrid, previous.lambda, tgrid[i] + cfg.tau);
      }
      init.x[0] = state;
    }

    NewtonResult solved;
    bool restarted = false;
    try {
      try {
        solved = newton_solve(step_problem, tgrid, zero, init, cfg.newton);
      } catch (const ConvergenceError&) {
        // The shifted guess can sit near a singular Jacobian; retry cold.
        if (!warm) throw;
        restarted = true;
        solved = newton_solve(step_problem, tgrid, zero, cold, cfg.newton);
      }
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("MPC step " + std::to_string(k) + ": " + e.what(), e.history());
    } catch (const Error& e) {
      throw Error("MPC step " + std::to_string(k) + ": " + e.what());
    }
    previous = solved.z;
    have_previous = true;

    const Trajectory u = recover_control(solved.z.lambda, step_problem);
    const PlantWindow w = simulate_plant(step_problem, state, window_vertices(tgrid, cfg.tau),
                                         control_signal(tgrid, u), cfg.plant_refinement);
    const double wc = cost(w.x, w.u, step_problem, TimeGrid(w.t, GridScheme::Uniform),
                           TimeRule::Trapezoid);
    out.cost += wc;

    for (std::size_t j = (k == 0 ? 0 : 1); j < w.t.size(); ++j) {
      out.t.push_back(t0 - problem.spec().time_offset + w.t[j]);
      out.x.push_back(w.x[j]);
      out.u.push_back(w.u[j]);
    }
    if (k > 0) out.u[out.u.size() - w.t.size()] = w.u.front();
    state = w.x.back();
    out.steps.push_back({k, t0, solved.iterations, solved.residual_history.back(), wc, restarted});
  }
  return out;
}

std::vector<CostCell> grid_comparison(const Problem& problem, const MPCConfig& base,
                                      const std::vector<int>& ns,
                                      const std::vector<GridScheme>& schemes) {
  std::vector<CostCell> cells;
  for (GridScheme scheme : schemes) {
    for (int n : ns) {
      CostCell cell;
      cell.scheme = scheme;
      cell.n = n;
      MPCConfig cfg = base;
      cfg.scheme = scheme;
      cfg.n = n;
      try {
        cell.cost = mpc_run(problem, cfg).cost;
        cell.ok = true;
      } catch (const std::exception& e) {
        cell.cost = std::nan("");
        cell.error = e.what();
      }
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

}  // namespace turnpike
