#include "turnpike/errors.hpp"
#include "turnpike/problem.hpp"

#include "scalar_oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace turnpike;

namespace {

Problem semilinear(double e, ReferenceKind ref = ReferenceKind::Static, int nx = 13, int ny = 6) {
  OCPSpec s;
  s.cubic.e = e;
  s.reference = ref;
  return Problem(s, build_grid(nx, ny, 3.0, 1.0, BoundaryKind::Dirichlet));
}

Problem quasilinear(double c) {
  OCPSpec s;
  s.dynamics = DynamicsKind::QuasilinearBoundary;
  s.conductivity.c = c;
  s.alpha = 0.01;
  s.reference = ReferenceKind::Dynamic;
  return Problem(s, build_grid(9, 5, 3.0, 1.0, BoundaryKind::Neumann));
}

Field random_field(int n, unsigned seed, double scale = 1.0) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> d(0.0, scale);
  Field f(n);
  for (int i = 0; i < n; ++i) f[i] = d(rng);
  return f;
}

}  // namespace

TEST(Reference, StaticBump) {
  EXPECT_DOUBLE_EQ(reference_static(1.5, 0.5), 10.0);
  EXPECT_EQ(reference_static(1.5, 0.8), 0.0);
  EXPECT_EQ(reference_static(0.0, 0.0), 0.0);
  // s = 0.5 -> 10 exp(1 - 4/3)
  EXPECT_NEAR(reference_static(1.5 + 0.15, 0.5), 10.0 * std::exp(-1.0 / 3.0), 1e-12);
  EXPECT_NEAR(10.0 * std::exp(-1.0 / 3.0), 7.1653, 1e-4);
}

TEST(Reference, BumpIsContinuousAtSupportEdge) {
  EXPECT_LT(reference_bump(1.0 - 1e-6), 1e-8);
  EXPECT_EQ(reference_bump(1.0), 0.0);
  EXPECT_EQ(reference_bump(2.0), 0.0);
}

TEST(Reference, DynamicPeakPath) {
  const auto p0 = reference_peak(0.0);
  EXPECT_NEAR(p0.x(), 0.5, 1e-15);
  EXPECT_NEAR(p0.y(), 1.0, 1e-15);
  const auto p5 = reference_peak(5.0);
  EXPECT_NEAR(p5.x(), 1.5, 1e-15);
  EXPECT_NEAR(p5.y(), 0.0, 1e-15);
  const auto p10 = reference_peak(10.0);
  EXPECT_NEAR(p10.x(), 2.5, 1e-15);
  EXPECT_NEAR(p10.y(), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(reference_dynamic(5.0, 1.5, 0.0), 10.0);
}

TEST(Reference, TimeOffsetShiftsDynamicReference) {
  const Problem p = semilinear(1.0, ReferenceKind::Dynamic);
  const Problem q = p.with_time_offset(2.0);
  EXPECT_EQ((q.reference(1.0) - p.reference(3.0)).norm(), 0.0);
}

TEST(Nonlinearity, DerivativesAreConsistent) {
  const CubicNonlinearity f{1.3, 0.2};
  for (double w : {-1.5, -0.2, 0.4, 2.0}) {
    double prev = kInfinity;
    for (double h : {1e-2, 1e-3}) {
      const double fd = (f.value(w + h) - f.value(w)) / h;
      const double err = std::abs(fd - f.first(w) - 0.5 * h * f.second(w));
      EXPECT_LT(err, prev);
      prev = err;
    }
    EXPECT_NEAR((f.first(w + 1e-6) - f.first(w - 1e-6)) / 2e-6, f.second(w), 1e-6);
  }
}

TEST(Cost, Examples) {
  const Problem p = semilinear(1.0);
  const auto tg = uniform_grid(4.0, 9);
  const int n = p.dof_count();
  Trajectory xd(9, p.reference(0.0));
  const Trajectory u0 = zero_trajectory(9, p.control_size());
  EXPECT_EQ(cost(xd, u0, p, tg), 0.0);

  const Trajectory x0 = zero_trajectory(9, n);
  const double ref_sq = norm_l2(p.grid(), p.reference(0.0));
  EXPECT_NEAR(cost(x0, u0, p, tg), 0.5 * 4.0 * ref_sq * ref_sq, 1e-10);

  const Trajectory u1(9, Field::Ones(p.control_size()));
  OCPSpec s2 = p.spec();
  s2.alpha *= 2.0;
  const Problem p2(s2, p.grid());
  const double c1 = cost(xd, u1, p, tg);
  EXPECT_NEAR(cost(xd, u1, p2, tg), 2.0 * c1, 1e-12 * c1);
}

TEST(DynamicsResidual, ZeroIsEquilibrium) {
  const Problem p = semilinear(1.0);
  const auto tg = uniform_grid(2.0, 5);
  const auto r = dynamics_residual(zero_trajectory(5, p.dof_count()),
                                   zero_trajectory(5, p.control_size()), p, tg);
  for (const auto& f : r) EXPECT_EQ(f.norm(), 0.0);
}

TEST(DynamicsResidual, ConstantStateOnNeumannGrid) {
  OCPSpec s;
  s.cubic = {1.0, 0.0};
  const Problem p(s, build_grid(6, 4, 3.0, 1.0, BoundaryKind::Neumann));
  const auto tg = uniform_grid(1.0, 4);
  const double k = 0.7;
  const Trajectory x(4, Field::Constant(p.dof_count(), k));
  s.x0 = x[0];
  const Problem q(s, p.grid());
  const auto r = dynamics_residual(x, zero_trajectory(4, q.control_size()), q, tg);
  EXPECT_EQ(r[0].norm(), 0.0);
  for (int i = 1; i < 4; ++i) {
    EXPECT_LT((r[static_cast<std::size_t>(i)].array() - k * k * k).abs().maxCoeff(), 1e-13);
  }
}

TEST(DynamicsResidual, MatchesScalarBackwardEuler) {
  // One interior node: -d Lap_h x = d (2/hx^2 + 2/hy^2) x.
  OCPSpec s;
  s.cubic.e = 1.0;
  s.diffusion = 0.1;
  s.x0 = Field::Constant(1, 0.4);
  const Problem p(s, build_grid(3, 3, 3.0, 1.0, BoundaryKind::Dirichlet));
  ASSERT_EQ(p.dof_count(), 1);
  const double a = 0.1 * (2.0 / (1.5 * 1.5) + 2.0 / (0.5 * 0.5));
  const auto tg = exponential_grid(3.0, 7, 1.0);
  Trajectory u;
  for (int i = 0; i < 7; ++i) u.push_back(Field::Constant(1, std::sin(1.0 + i)));
  const Trajectory x = simulate_state(p, tg, u);
  const auto r = dynamics_residual(x, u, p, tg);
  for (const auto& f : r) EXPECT_LT(std::abs(f[0]), 1e-11);

  // Same rollout from the oracle's scalar Newton.
  oracle::ScalarOCP sp;
  sp.a = a;
  sp.e = 1.0;
  sp.x0 = 0.4;
  sp.t = tg.vertices();
  double xs = sp.x0;
  for (int i = 0; i + 1 < 7; ++i) {
    const double dt = tg.step(i);
    double y = xs;
    for (int it = 0; it < 50; ++it) {
      y -= ((y - xs) / dt + a * y + y * y * y - u[static_cast<std::size_t>(i)][0]) /
           (1.0 / dt + a + 3.0 * y * y);
    }
    xs = y;
    EXPECT_NEAR(x[static_cast<std::size_t>(i + 1)][0], xs, 1e-12);
  }
}

TEST(DynamicsResidual, EnergyDecaysWithoutControl) {
  OCPSpec s;
  s.cubic = {1.0, 0.0};
  const auto g = build_grid(13, 6, 3.0, 1.0, BoundaryKind::Dirichlet);
  s.x0 = random_field(g.dof_count(), 3, 2.0);
  const Problem p(s, g);
  const auto tg = exponential_grid(5.0, 12, 1.0);
  const auto x = simulate_state(p, tg, zero_trajectory(12, p.control_size()));
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    EXPECT_LE(norm_l2(g, x[i + 1]), norm_l2(g, x[i]));
  }
}

TEST(Operators, JacobianMatchesFiniteDifferences) {
  const Problem problems[] = {semilinear(2.0), quasilinear(0.3)};
  for (const auto& p : problems) {
    const Field x = random_field(p.dof_count(), 5);
    const Field v = random_field(p.dof_count(), 6);
    const double h = 1e-6;
    const Field fd = (p.state_operator(x + h * v) - p.state_operator(x - h * v)) / (2 * h);
    const Field jv = p.state_jacobian(x) * v;
    EXPECT_LT((fd - jv).norm(), 1e-7 * jv.norm());
  }
}

TEST(Operators, AdjointIsWeightedTranspose) {
  const Problem problems[] = {semilinear(2.0), quasilinear(0.3)};
  for (const auto& p : problems) {
    const auto& g = p.grid();
    const Field x = random_field(p.dof_count(), 7);
    const Field v = random_field(p.dof_count(), 8);
    const Field l = random_field(p.dof_count(), 9);
    const double lhs = inner_l2(g, p.state_jacobian(x) * v, l);
    const double rhs = inner_l2(g, v, p.adjoint_apply(x, l));
    EXPECT_NEAR(lhs, rhs, 1e-11 * std::abs(lhs));
    EXPECT_LT((p.adjoint_jacobian(x) * l - p.adjoint_apply(x, l)).norm(), 1e-9 * l.norm());
  }
}

TEST(Operators, HessianMatchesFiniteDifferences) {
  const Problem problems[] = {semilinear(2.0), quasilinear(0.3)};
  for (const auto& p : problems) {
    const Field x = random_field(p.dof_count(), 10);
    const Field l = random_field(p.dof_count(), 11);
    const Field v = random_field(p.dof_count(), 12);
    const double h = 1e-6;
    const Field fd = (p.adjoint_apply(x + h * v, l) - p.adjoint_apply(x - h * v, l)) / (2 * h);
    const Field hv = p.adjoint_hessian(x, l) * v;
    EXPECT_LT((fd - hv).norm(), 1e-7 * hv.norm());
  }
}

TEST(Operators, ImplicitStepSolvesStepEquation) {
  const Problem p = quasilinear(0.5);
  const Field x = random_field(p.dof_count(), 13);
  const Field f = random_field(p.dof_count(), 14);
  const Field y = p.implicit_step(x, 0.3, f);
  const Field r = (y - x) / 0.3 + p.state_operator(y) - f;
  EXPECT_LT(r.lpNorm<Eigen::Infinity>(), 1e-10);
  EXPECT_THROW(p.implicit_step(x, 0.0, f), DomainError);
}

TEST(Problem, Validation) {
  OCPSpec s;
  s.alpha = 0.0;
  const auto g = build_grid(5, 5, 1.0, 1.0, BoundaryKind::Dirichlet);
  EXPECT_THROW(Problem(s, g), DomainError);
  s.alpha = 0.1;
  s.cubic.e = -1.0;
  EXPECT_THROW(Problem(s, g), DomainError);
  s.cubic.e = 1.0;
  s.x0 = Field::Ones(3);
  EXPECT_THROW(Problem(s, g), DimensionError);
  OCPSpec q;
  q.dynamics = DynamicsKind::QuasilinearBoundary;
  EXPECT_THROW(Problem(q, g), DomainError);
}
