#include "turnpike/analysis.hpp"

#include "turnpike/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace turnpike {

ScalingFunction ScalingFunction::unit() { return {ScalingKind::Unit, 0.0, 0.0}; }

ScalingFunction ScalingFunction::forward_exp(double mu) {
  if (!(mu > 0.0)) throw DomainError("scaling rate mu must be positive");
  return {ScalingKind::ForwardExp, mu, 0.0};
}

ScalingFunction ScalingFunction::turnpike(double mu, double horizon) {
  if (!(mu > 0.0)) throw DomainError("scaling rate mu must be positive");
  if (!(horizon > 0.0)) throw DomainError("scaling horizon must be positive");
  return {ScalingKind::Turnpike, mu, horizon};
}

double ScalingFunction::operator()(double t) const {
  switch (kind_) {
    case ScalingKind::Unit:
      return 1.0;
    case ScalingKind::ForwardExp:
      return std::exp(-mu_ * t);
    case ScalingKind::Turnpike: {
      // Written around the nearer end so that s(t) = s(T - t) holds bitwise.
      const double a = std::min(t, horizon_ - t);
      const double b = std::max(t, horizon_ - t);
      return 1.0 / (std::exp(-mu_ * a) + std::exp(-mu_ * b));
    }
  }
  return 1.0;
}

double ScalingFunction::min_on(const TimeGrid& tgrid) const {
  double m = kInfinity;
  for (double t : tgrid.vertices()) m = std::min(m, (*this)(t));
  return m;
}

double ScalingFunction::max_on(const TimeGrid& tgrid) const {
  double m = 0.0;
  for (double t : tgrid.vertices()) m = std::max(m, (*this)(t));
  return m;
}

double scaled_time_norm(const std::vector<double>& spatial_norms, const ScalingFunction& s,
                        double p_time, const TimeGrid& tgrid) {
  if (!(p_time >= 1.0)) throw DomainError("time exponent must be >= 1");
  if (static_cast<int>(spatial_norms.size()) != tgrid.size()) {
    throw DimensionError("norm samples do not match the time grid");
  }
  if (std::isinf(p_time)) {
    double m = 0.0;
    for (int i = 0; i < tgrid.size(); ++i) {
      m = std::max(m, s(tgrid[i]) * spatial_norms[static_cast<std::size_t>(i)]);
    }
    return m;
  }
  const Eigen::VectorXd tw = time_weights(tgrid);
  double acc = 0.0;
  for (int i = 0; i < tgrid.size(); ++i) {
    acc += tw[i] * std::pow(s(tgrid[i]) * spatial_norms[static_cast<std::size_t>(i)], p_time);
  }
  return std::pow(acc, 1.0 / p_time);
}

double scaled_norm(const Trajectory& traj, const ScalingFunction& s, double p_time,
                   double p_space, const SpatialGrid& grid, const TimeGrid& tgrid) {
  if (static_cast<int>(traj.size()) != tgrid.size()) {
    throw DimensionError("trajectory does not match the time grid");
  }
  std::vector<double> n;
  n.reserve(traj.size());
  for (const auto& f : traj) n.push_back(norm_lp(grid, f, p_space));
  return scaled_time_norm(n, s, p_time, tgrid);
}

double sobolev_norm(const Trajectory& traj, const ScalingFunction& s, const SpatialGrid& grid,
                    const TimeGrid& tgrid, const EllipticOperator& elliptic) {
  if (traj.size() < 2) throw DomainError("sobolev_norm needs at least 2 time slices");
  if (static_cast<int>(traj.size()) != tgrid.size()) {
    throw DimensionError("trajectory does not match the time grid");
  }
  const Eigen::VectorXd tw = time_weights(tgrid);
  double space = 0.0;
  double time = 0.0;
  for (int i = 0; i < tgrid.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    const Field v = s(tgrid[i]) * traj[k];
    const double da = norm_l2(grid, v) + norm_l2(grid, elliptic.apply(v));
    space += tw[i] * da * da;
    if (i + 1 < tgrid.size()) {
      const double dt = tgrid.step(i);
      const Field d = (s(tgrid[i + 1]) * traj[k + 1] - v) / dt;
      const double dn = norm_l2(grid, d);
      time += dt * dn * dn;
    }
  }
  return std::sqrt(space) + std::sqrt(time);
}

namespace {

void scale_slots(Eigen::VectorXd& m, int n, const std::vector<double>& per_slot) {
  for (std::size_t k = 0; k < per_slot.size(); ++k) {
    m.segment(static_cast<Eigen::Index>(k) * n, n) *= per_slot[k];
  }
}

}  // namespace

Eigen::VectorXd scaled_solution_metric(const Problem& problem, const TimeGrid& tgrid,
                                       const ScalingFunction& s) {
  Eigen::VectorXd m = solution_metric(problem, tgrid);
  std::vector<double> f;
  for (int k = 0; k < tgrid.size(); ++k) {
    const double v = s(tgrid[k]);
    f.push_back(v * v);
    f.push_back(v * v);
  }
  scale_slots(m, problem.dof_count(), f);
  return m;
}

Eigen::VectorXd scaled_perturbation_metric(const Problem& problem, const TimeGrid& tgrid,
                                           const ScalingFunction& s) {
  Eigen::VectorXd m = perturbation_metric(problem, tgrid);
  const int slices = tgrid.size();
  std::vector<double> f(2 * static_cast<std::size_t>(slices));
  const auto sq = [&](double t) { return s(t) * s(t); };
  f[0] = sq(0.0);
  for (int i = 0; i + 1 < slices; ++i) {
    f[static_cast<std::size_t>(2 * (i + 1))] = sq(tgrid[i + 1]);
    f[static_cast<std::size_t>(2 * i + 1)] = sq(tgrid[i + 1]);
  }
  f.back() = sq(tgrid.horizon());
  scale_slots(m, problem.dof_count(), f);
  return m;
}

double metric_norm(const Eigen::VectorXd& v, const Eigen::VectorXd& metric) {
  if (v.size() != metric.size()) throw DimensionError("metric does not match vector");
  return std::sqrt((metric.array() * v.array().square()).sum());
}

double estimate_opnorm(const KKTSystem& k, const Eigen::VectorXd& metric_e,
                       const Eigen::VectorXd& metric_z, const OpnormOptions& opts) {
  if (metric_e.size() != k.rows() || metric_z.size() != k.rows()) {
    throw DimensionError("opnorm metrics do not match the KKT system");
  }
  if ((metric_e.array() <= 0.0).any() || (metric_z.array() <= 0.0).any()) {
    throw DomainError("opnorm metrics must be positive");
  }
  const Eigen::VectorXd we = metric_e.cwiseSqrt();
  const Eigen::VectorXd wz = metric_z.cwiseSqrt();

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(k.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  v.normalize();

  std::vector<double> history;
  double prev = 0.0;
  for (int it = 0; it < opts.max_iter; ++it) {
    // w = M^{-1} v,  M = W_E^{1/2} K W_Z^{-1/2}
    const Eigen::VectorXd w = wz.cwiseProduct(k.solve(Eigen::VectorXd(v.cwiseQuotient(we))));
    const double est = w.norm();
    history.push_back(est);
    if (!std::isfinite(est)) throw ConvergenceError("estimate_opnorm: non-finite iterate", history);
    if (it > 0 && std::abs(est - prev) <= opts.rel_tol * est) return est;
    prev = est;
    v = k.solve_transposed(Eigen::VectorXd(wz.cwiseProduct(w))).cwiseQuotient(we);
    const double vn = v.norm();
    if (!(vn > 0.0)) return est;
    v /= vn;
  }
  throw ConvergenceError("estimate_opnorm: power iteration stagnated", history);
}

double choose_mu(double opnorm, double theta) {
  if (!(opnorm > 0.0)) throw DomainError("choose_mu: operator norm must be positive");
  if (!(theta > 0.0 && theta < 1.0)) throw DomainError("choose_mu: theta must lie in (0,1)");
  return theta / opnorm;
}

DecayFit fit_decay(const std::vector<std::pair<double, double>>& samples) {
  DecayFit fit;
  for (const auto& [t, n] : samples) {
    if (n >= 1e-14 && std::isfinite(n)) fit.samples.emplace_back(t, n);
  }
  if (fit.samples.size() < 3) {
    throw DomainError("fit_decay: fewer than 3 samples above the 1e-14 noise floor");
  }
  const double m = static_cast<double>(fit.samples.size());
  double st = 0.0, sy = 0.0;
  for (const auto& [t, n] : fit.samples) {
    st += t;
    sy += std::log(n);
  }
  const double tbar = st / m;
  const double ybar = sy / m;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (const auto& [t, n] : fit.samples) {
    const double dt = t - tbar;
    const double dy = std::log(n) - ybar;
    stt += dt * dt;
    sty += dt * dy;
    syy += dy * dy;
  }
  if (!(stt > 0.0)) throw DomainError("fit_decay: samples share a single abscissa");
  const double slope = sty / stt;
  fit.mu_hat = -slope;
  fit.intercept = ybar - slope * tbar;
  // Constant samples are fitted exactly by a flat line.
  const double ss_res = std::max(0.0, syy - slope * sty);
  fit.r_squared = syy > 1e-28 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return fit;
}

Trajectory lxx_field(const ExtremalPoint& z0, const Problem& problem) {
  if (problem.spec().dynamics != DynamicsKind::SemilinearDistributed) {
    throw DomainError("lxx_field is defined for the semilinear model");
  }
  if (z0.slices() == 0 || z0.lambda.size() != z0.x.size()) {
    throw DimensionError("lxx_field: malformed extremal point");
  }
  const auto& cubic = problem.spec().cubic;
  Trajectory out;
  out.reserve(z0.x.size());
  for (std::size_t k = 0; k < z0.x.size(); ++k) {
    // Slice k pairs x_k with the multiplier of the step ending at t_k.
    const Field& x = z0.x[k];
    const Field& l = z0.lambda[k == 0 ? 0 : k - 1];
    if (x.size() != problem.dof_count() || l.size() != problem.dof_count()) {
      throw DimensionError("lxx_field: slice has wrong size");
    }
    Field v = problem.observation();
    for (Eigen::Index j = 0; j < v.size(); ++j) v[j] += cubic.second(x[j]) * l[j];
    out.push_back(std::move(v));
  }
  return out;
}

Trajectory sqrt_multiplier(const Trajectory& lxx) {
  double min_value = kInfinity;
  int min_t = -1;
  int min_node = -1;
  for (std::size_t k = 0; k < lxx.size(); ++k) {
    Eigen::Index j = 0;
    if (lxx[k].size() == 0) continue;
    const double m = lxx[k].minCoeff(&j);
    if (m < min_value) {
      min_value = m;
      min_t = static_cast<int>(k);
      min_node = static_cast<int>(j);
    }
  }
  if (min_value < -1e-12) {
    throw NonCoercivityError("L_xx has negative value " + std::to_string(min_value) +
                                 " at time index " + std::to_string(min_t) + ", node " +
                                 std::to_string(min_node),
                             min_value, min_t, min_node);
  }
  Trajectory c;
  c.reserve(lxx.size());
  for (const auto& f : lxx) c.push_back(f.cwiseMax(0.0).cwiseSqrt());
  return c;
}

Trajectory superposition_apply(int d, const Trajectory& x) {
  if (d < 1) throw DomainError("superposition exponent must be >= 1");
  Trajectory out;
  out.reserve(x.size());
  for (const auto& f : x) {
    Field p = f;
    for (int k = 1; k < d; ++k) p = p.cwiseProduct(f);
    out.push_back(std::move(p));
  }
  return out;
}

SuperpositionCheck superposition_derivative_check(int d, const Trajectory& x0,
                                                  const Trajectory& v,
                                                  const std::vector<double>& magnitudes,
                                                  const SpatialGrid& grid, const TimeGrid& tgrid,
                                                  const ScalingFunction& s) {
  if (x0.size() != v.size()) throw DimensionError("base point and direction differ in shape");
  for (std::size_t i = 0; i < magnitudes.size(); ++i) {
    if (!(magnitudes[i] > 0.0) || (i > 0 && !(magnitudes[i] < magnitudes[i - 1]))) {
      throw DomainError("magnitudes must be positive and decreasing");
    }
  }
  const Trajectory phi0 = superposition_apply(d, x0);
  const Trajectory dphi = superposition_apply(d - 1 > 0 ? d - 1 : 1, x0);
  const double p = 2.0 * d;
  const double x0_norm = scaled_norm(x0, ScalingFunction::unit(), p, p, grid, tgrid);

  SuperpositionCheck out;
  out.magnitudes = magnitudes;
  for (double m : magnitudes) {
    Trajectory step, rem;
    for (std::size_t k = 0; k < x0.size(); ++k) step.push_back(m * v[k]);
    const Trajectory moved = [&] {
      Trajectory y;
      for (std::size_t k = 0; k < x0.size(); ++k) y.push_back(x0[k] + step[k]);
      return superposition_apply(d, y);
    }();
    for (std::size_t k = 0; k < x0.size(); ++k) {
      const Field lin = d == 1 ? step[k] : Field(d * dphi[k].cwiseProduct(step[k]));
      rem.push_back(moved[k] - phi0[k] - lin);
    }
    const double num = scaled_norm(rem, s, 2.0, 2.0, grid, tgrid);
    const double den = scaled_norm(step, s, p, p, grid, tgrid);
    out.ratios.push_back(den > 0.0 ? num / den : 0.0);

    const double step_norm = scaled_norm(step, ScalingFunction::unit(), p, p, grid, tgrid);
    double bound = 0.0;
    double binom = d * (d - 1) / 2.0;
    for (int k = 2; k <= d; ++k) {
      bound += binom * std::pow(x0_norm, d - k) * std::pow(step_norm, k - 1);
      binom = binom * (d - k) / (k + 1);
    }
    out.bounds.push_back(bound);
  }
  return out;
}

Trajectory random_trajectory(int slices, int size, std::uint64_t seed, double sigma) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  Trajectory out;
  out.reserve(static_cast<std::size_t>(slices));
  for (int k = 0; k < slices; ++k) {
    Field f(size);
    for (int j = 0; j < size; ++j) f[j] = normal(rng);
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace turnpike
