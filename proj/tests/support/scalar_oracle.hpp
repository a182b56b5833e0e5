#pragma once

// Dense reference solver for the scalar discrete optimal control problem
//
//   min sum_i dt_i [ (x_{i+1} - xd)^2 / 2 + alpha u_i^2 / 2 ]
//   s.t. (x_{i+1} - x_i) / dt_i + a x_{i+1} + e x_{i+1}^3 = u_i,  x_0 given,
//
// written directly from its Lagrangian. Unknowns x_1..x_{N-1} and
// lambda_0..lambda_{N-2} (u_i = lambda_i / alpha, lambda_{N-1} = 0), solved by
// Newton with a hand-written dense Jacobian. Shares no code with the library.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace oracle {

struct ScalarOCP {
  double a = 1.0;      // linear decay rate
  double e = 0.0;      // cubic weight
  double alpha = 0.1;
  double xd = 1.0;
  double x0 = 0.0;
  std::vector<double> t;  // time vertices
};

struct ScalarSolution {
  std::vector<double> x;       // N values, x[0] = x0
  std::vector<double> lambda;  // N values, lambda[N-1] = 0
  int iterations = 0;
};

inline ScalarSolution solve_tpbvp(const ScalarOCP& p, double tol = 1e-13) {
  const int N = static_cast<int>(p.t.size());
  const int m = N - 1;
  // v = [x_1..x_m, l_0..l_{m-1}]
  Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * m);
  auto X = [&](const Eigen::VectorXd& w, int j) { return j == 0 ? p.x0 : w[j - 1]; };
  auto L = [&](const Eigen::VectorXd& w, int i) { return i == m ? 0.0 : w[m + i]; };

  auto residual = [&](const Eigen::VectorXd& w) {
    Eigen::VectorXd r(2 * m);
    for (int i = 0; i < m; ++i) {
      const double dt = p.t[i + 1] - p.t[i];
      const double xn = X(w, i + 1);
      r[i] = (xn - X(w, i)) / dt + p.a * xn + p.e * xn * xn * xn - L(w, i) / p.alpha;
      r[m + i] = (xn - p.xd) - (L(w, i + 1) - L(w, i)) / dt +
                 (p.a + 3.0 * p.e * xn * xn) * L(w, i);
    }
    return r;
  };

  ScalarSolution out;
  Eigen::VectorXd r = residual(v);
  while (r.norm() > tol) {
    if (++out.iterations > 50) throw std::runtime_error("scalar oracle: no convergence");
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * m, 2 * m);
    for (int i = 0; i < m; ++i) {
      const double dt = p.t[i + 1] - p.t[i];
      const double xn = X(v, i + 1);
      // state row i
      J(i, i) = 1.0 / dt + p.a + 3.0 * p.e * xn * xn;
      if (i > 0) J(i, i - 1) = -1.0 / dt;
      J(i, m + i) = -1.0 / p.alpha;
      // adjoint row i
      J(m + i, i) = 1.0 + 6.0 * p.e * xn * L(v, i);
      J(m + i, m + i) = 1.0 / dt + p.a + 3.0 * p.e * xn * xn;
      if (i + 1 < m) J(m + i, m + i + 1) = -1.0 / dt;
    }
    const Eigen::VectorXd dv = J.partialPivLu().solve(-r);
    double step = 1.0;
    Eigen::VectorXd trial = v + dv;
    Eigen::VectorXd rt = residual(trial);
    while (rt.norm() >= r.norm() && step > 1e-6) {
      step *= 0.5;
      trial = v + step * dv;
      rt = residual(trial);
    }
    v = trial;
    r = rt;
  }
  out.x.push_back(p.x0);
  for (int j = 1; j <= m; ++j) out.x.push_back(v[j - 1]);
  for (int i = 0; i < m; ++i) out.lambda.push_back(v[m + i]);
  out.lambda.push_back(0.0);
  return out;
}

/// The objective above for given controls u_0..u_{N-2}, by forward rollout
/// with a scalar Newton per step.
inline double scalar_cost(const ScalarOCP& p, const std::vector<double>& u) {
  double x = p.x0;
  double j = 0.0;
  for (std::size_t i = 0; i + 1 < p.t.size(); ++i) {
    const double dt = p.t[i + 1] - p.t[i];
    double y = x;
    for (int it = 0; it < 60; ++it) {
      const double g = (y - x) / dt + p.a * y + p.e * y * y * y - u[i];
      const double dg = 1.0 / dt + p.a + 3.0 * p.e * y * y;
      y -= g / dg;
      if (std::abs(g) < 1e-15) break;
    }
    x = y;
    j += dt * (0.5 * (x - p.xd) * (x - p.xd) + 0.5 * p.alpha * u[i] * u[i]);
  }
  return j;
}

}  // namespace oracle
