#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace turnpike {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sizes of fields, trajectories or grids do not match.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the admissible set (p < 1, c <= 0, tau not in (0,T), ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Sparse factorization failed or a solve did not meet its residual target.
class SolverError : public Error {
 public:
  SolverError(const std::string& what,
              double condition_estimate = std::numeric_limits<double>::quiet_NaN())
      : Error(what), condition_estimate_(condition_estimate) {}
  double condition_estimate() const { return condition_estimate_; }

 private:
  double condition_estimate_;
};

/// An iteration ran out of steps. Carries the residual (or step) history.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

/// Frozen-Jacobian iteration left its contraction neighborhood.
class DivergenceError : public ConvergenceError {
 public:
  using ConvergenceError::ConvergenceError;
};

/// The second derivative of the reduced Lagrangian has a negative nodal value,
/// so no pointwise square root exists.
class NonCoercivityError : public Error {
 public:
  NonCoercivityError(const std::string& what, double min_value, int time_index,
                     int node)
      : Error(what), min_value_(min_value), time_index_(time_index), node_(node) {}
  double min_value() const { return min_value_; }
  int time_index() const { return time_index_; }
  int node() const { return node_; }

 private:
  double min_value_;
  int time_index_;
  int node_;
};

/// Configuration file could not be parsed or validated.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0, std::string field = {})
      : Error(what), line_(line), field_(std::move(field)) {}
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

}  // namespace turnpike
