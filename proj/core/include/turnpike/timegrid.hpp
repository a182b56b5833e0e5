#pragma once

#include <Eigen/Core>

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace turnpike {

enum class GridScheme { Uniform, Exponential, PiecewiseUniform };

std::string_view to_string(GridScheme scheme);
/// Accepts "uniform", "exponential", "pwuniform" (also "piecewise_uniform").
GridScheme parse_grid_scheme(std::string_view name);

/// Strictly increasing vertices 0 = t_0 < ... < t_{N-1} = T.
class TimeGrid {
 public:
  TimeGrid(std::vector<double> vertices, GridScheme scheme, double parameter = 0.0);

  const std::vector<double>& vertices() const { return vertices_; }
  int size() const { return static_cast<int>(vertices_.size()); }
  int intervals() const { return size() - 1; }
  double operator[](int i) const { return vertices_[static_cast<std::size_t>(i)]; }
  double horizon() const { return vertices_.back(); }
  double step(int i) const { return (*this)[i + 1] - (*this)[i]; }

  GridScheme scheme() const { return scheme_; }
  /// c for exponential grids, tau for piecewise uniform grids, 0 otherwise.
  double parameter() const { return parameter_; }

 private:
  std::vector<double> vertices_;
  GridScheme scheme_;
  double parameter_;
};

TimeGrid uniform_grid(double horizon, int n);
/// Vertices with equal mass of e^{-ct} per interval.
TimeGrid exponential_grid(double horizon, int n, double c);
/// ceil((n-1)/2) uniform intervals on [0,tau], the rest uniform on [tau,T].
TimeGrid piecewise_uniform_grid(double horizon, double tau, int n);
/// Dispatch on the scheme; `parameter` is c or tau.
TimeGrid make_time_grid(GridScheme scheme, double horizon, int n, double parameter);

/// Trapezoidal weights; they sum to T.
Eigen::VectorXd time_weights(const TimeGrid& grid);

/// One vertex per line, 17 significant digits.
void write_csv(std::ostream& out, const TimeGrid& grid);

}  // namespace turnpike
