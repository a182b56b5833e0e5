#include "turnpike/timegrid.hpp"

#include "turnpike/errors.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace turnpike {

std::string_view to_string(GridScheme scheme) {
  switch (scheme) {
    case GridScheme::Uniform:
      return "uniform";
    case GridScheme::Exponential:
      return "exponential";
    case GridScheme::PiecewiseUniform:
      return "pwuniform";
  }
  return "unknown";
}

GridScheme parse_grid_scheme(std::string_view name) {
  if (name == "uniform") return GridScheme::Uniform;
  if (name == "exponential" || name == "exp") return GridScheme::Exponential;
  if (name == "pwuniform" || name == "piecewise_uniform" || name == "pw_uniform") {
    return GridScheme::PiecewiseUniform;
  }
  throw DomainError("unknown grid scheme '" + std::string(name) + "'");
}

TimeGrid::TimeGrid(std::vector<double> vertices, GridScheme scheme, double parameter)
    : vertices_(std::move(vertices)), scheme_(scheme), parameter_(parameter) {
  if (vertices_.size() < 2) throw DomainError("time grid needs at least 2 vertices");
  if (vertices_.front() != 0.0) throw DomainError("time grid must start at 0");
  for (std::size_t i = 1; i < vertices_.size(); ++i) {
    if (!(vertices_[i] > vertices_[i - 1])) {
      throw DomainError("time grid vertices must be strictly increasing");
    }
  }
}

TimeGrid uniform_grid(double horizon, int n) {
  if (!(horizon > 0.0)) throw DomainError("uniform_grid: T must be positive");
  if (n < 2) throw DomainError("uniform_grid: N must be >= 2");
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = horizon * i / (n - 1);
  v.back() = horizon;
  return TimeGrid(std::move(v), GridScheme::Uniform);
}

TimeGrid exponential_grid(double horizon, int n, double c) {
  if (!(horizon > 0.0)) throw DomainError("exponential_grid: T must be positive");
  if (n < 2) throw DomainError("exponential_grid: N must be >= 2");
  if (!(c > 0.0)) throw DomainError("exponential_grid: c must be positive");
  // int_0^{t_i} e^{-cs} ds = i I/(N-1)  <=>  t_i = -log(1 - i q/(N-1)) / c,
  // q = 1 - e^{-cT} = c I.
  const double q = -std::expm1(-c * horizon);
  std::vector<double> v(static_cast<std::size_t>(n));
  v[0] = 0.0;
  for (int i = 1; i < n - 1; ++i) {
    v[static_cast<std::size_t>(i)] = -std::log1p(-q * i / (n - 1)) / c;
  }
  v.back() = horizon;
  return TimeGrid(std::move(v), GridScheme::Exponential, c);
}

TimeGrid piecewise_uniform_grid(double horizon, double tau, int n) {
  if (!(horizon > 0.0)) throw DomainError("piecewise_uniform_grid: T must be positive");
  if (!(tau > 0.0 && tau < horizon)) {
    throw DomainError("piecewise_uniform_grid: tau must lie in (0, T)");
  }
  if (n < 3) throw DomainError("piecewise_uniform_grid: N must be >= 3");
  const int first = (n - 1 + 1) / 2;
  const int second = n - 1 - first;
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i <= first; ++i) v.push_back(tau * i / first);
  for (int k = 1; k <= second; ++k) {
    v.push_back((tau * (second - k) + horizon * k) / second);
  }
  v[static_cast<std::size_t>(first)] = tau;
  v.back() = horizon;
  return TimeGrid(std::move(v), GridScheme::PiecewiseUniform, tau);
}

TimeGrid make_time_grid(GridScheme scheme, double horizon, int n, double parameter) {
  switch (scheme) {
    case GridScheme::Uniform:
      return uniform_grid(horizon, n);
    case GridScheme::Exponential:
      return exponential_grid(horizon, n, parameter);
    case GridScheme::PiecewiseUniform:
      return piecewise_uniform_grid(horizon, parameter, n);
  }
  throw DomainError("unknown grid scheme");
}

Eigen::VectorXd time_weights(const TimeGrid& grid) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(grid.size());
  for (int i = 0; i < grid.intervals(); ++i) {
    const double h = grid.step(i);
    w[i] += 0.5 * h;
    w[i + 1] += 0.5 * h;
  }
  return w;
}

void write_csv(std::ostream& out, const TimeGrid& grid) {
  const auto old = out.precision(17);
  for (double t : grid.vertices()) out << t << '\n';
  out.precision(old);
}

}  // namespace turnpike
