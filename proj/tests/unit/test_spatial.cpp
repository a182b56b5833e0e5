#include "turnpike/errors.hpp"
#include "turnpike/spatial.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace turnpike;

namespace {

constexpr double kPi = 3.14159265358979323846;

Field random_field(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Field f(n);
  for (int i = 0; i < n; ++i) f[i] = u(rng);
  return f;
}

}  // namespace

TEST(SpatialGrid, SmallestNeumannGrid) {
  const auto g = build_grid(2, 2, 1.0, 1.0, BoundaryKind::Neumann);
  EXPECT_EQ(g.dof_count(), 4);
  EXPECT_DOUBLE_EQ(g.hx(), 1.0);
  EXPECT_DOUBLE_EQ(g.hy(), 1.0);
}

TEST(SpatialGrid, DirichletCountsInteriorNodes) {
  const auto g = build_grid(4, 4, 3.0, 1.0, BoundaryKind::Dirichlet);
  EXPECT_EQ(g.dof_count(), 4);
  EXPECT_DOUBLE_EQ(g.hx(), 1.0);
  EXPECT_DOUBLE_EQ(g.hy(), 1.0 / 3.0);
  EXPECT_EQ(build_grid(31, 11, 3.0, 1.0, BoundaryKind::Dirichlet).dof_count(), 29 * 9);
}

TEST(SpatialGrid, RejectsDegenerateInput) {
  EXPECT_THROW(build_grid(1, 4, 1.0, 1.0, BoundaryKind::Neumann), DomainError);
  EXPECT_THROW(build_grid(2, 2, 1.0, 1.0, BoundaryKind::Dirichlet), DomainError);
  EXPECT_THROW(build_grid(3, 3, 0.0, 1.0, BoundaryKind::Neumann), DomainError);
}

TEST(SpatialGrid, WeightsSumToArea) {
  const auto g = build_grid(7, 5, 3.0, 1.0, BoundaryKind::Neumann);
  EXPECT_NEAR(g.weights().sum(), 3.0, 1e-14);
  EXPECT_NEAR(g.boundary_weights().sum(), 8.0, 1e-14);
}

TEST(Elliptic, ConstantsAreInNeumannKernel) {
  const auto g = build_grid(6, 4, 3.0, 1.0, BoundaryKind::Neumann);
  const EllipticOperator a(g, 0.1);
  EXPECT_LT(a.apply(Field::Constant(g.dof_count(), 2.5)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Elliptic, SineModeIsEigenfield) {
  const auto g = build_grid(31, 11, 3.0, 1.0, BoundaryKind::Dirichlet);
  const double c = 0.1;
  const EllipticOperator a(g, c);
  const Field v = g.sample([&](double x, double y) {
    return std::sin(kPi * x / g.lx()) * std::sin(kPi * y / g.ly());
  });
  const double sx = std::sin(kPi * g.hx() / (2.0 * g.lx()));
  const double sy = std::sin(kPi * g.hy() / (2.0 * g.ly()));
  const double ev = c * (4.0 / (g.hx() * g.hx()) * sx * sx + 4.0 / (g.hy() * g.hy()) * sy * sy);
  EXPECT_LT((a.apply(v) - ev * v).cwiseAbs().maxCoeff(), 1e-10 * ev);
  EXPECT_NEAR(a.smallest_eigenvalue(), ev, 1e-8 * ev);
}

TEST(Elliptic, LinearFieldOnNeumannGrid) {
  // 3x3 unit grid, h = 1/2, v = x. Interior column: zero. Reflected ghost
  // at x = 0 mirrors v(h) = 1/2, so -Lap v = -(2 v(h) - 2 v(0)) / h^2 = -4;
  // at x = 1 it is +4. Nodes on y = 0, 1 see zero y-curvature.
  const auto g = build_grid(3, 3, 1.0, 1.0, BoundaryKind::Neumann);
  const EllipticOperator a(g, 1.0);
  const Field v = g.sample([](double x, double) { return x; });
  const Field av = a.apply(v);
  for (int k = 0; k < g.dof_count(); ++k) {
    const auto [i, j] = g.node(k);
    const double expected = i == 0 ? -4.0 : (i == 2 ? 4.0 : 0.0);
    EXPECT_NEAR(av[k], expected, 1e-12) << "node " << i << "," << j;
  }
}

TEST(Elliptic, SelfAdjointInWeightedProduct) {
  for (auto bc : {BoundaryKind::Dirichlet, BoundaryKind::Neumann}) {
    const auto g = build_grid(9, 6, 3.0, 1.0, bc);
    const EllipticOperator a(g, 0.3);
    const Field f = random_field(g.dof_count(), 1);
    const Field h = random_field(g.dof_count(), 2);
    const double lhs = inner_l2(g, a.apply(f), h);
    const double rhs = inner_l2(g, f, a.apply(h));
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::abs(lhs));
  }
}

TEST(Elliptic, DirichletCoercivity) {
  const auto g = build_grid(13, 7, 3.0, 1.0, BoundaryKind::Dirichlet);
  const EllipticOperator a(g, 0.1);
  const double alpha = a.coercivity_constant();
  ASSERT_GT(alpha, 0.0);
  for (unsigned s = 0; s < 10; ++s) {
    const Field v = random_field(g.dof_count(), 10 + s);
    const double nh1 = norm_h1(g, v);
    EXPECT_GE(inner_l2(g, a.apply(v), v), alpha * nh1 * nh1 * (1.0 - 1e-10));
  }
}

TEST(Norms, ZeroAndConstantFields) {
  const auto g = build_grid(7, 5, 3.0, 1.0, BoundaryKind::Neumann);
  const Field zero = Field::Zero(g.dof_count());
  for (double p : {1.0, 2.0, 4.0, kInfinity}) EXPECT_EQ(norm_lp(g, zero, p), 0.0);
  EXPECT_NEAR(norm_l2(g, Field::Ones(g.dof_count())), std::sqrt(3.0), 1e-14);
  const double c = -1.7;
  const Field k = Field::Constant(g.dof_count(), c);
  for (double p : {1.0, 3.0, 6.0}) {
    EXPECT_NEAR(norm_lp(g, k, p), std::abs(c) * std::pow(3.0, 1.0 / p), 1e-13);
  }
  EXPECT_NEAR(norm_lp(g, k, kInfinity), std::abs(c), 0.0);
  EXPECT_NEAR(norm_h1(g, k), std::abs(c) * std::sqrt(3.0), 1e-13);
  EXPECT_THROW(norm_lp(g, k, 0.5), DomainError);
}

TEST(Norms, QuadratureConvergesWithRefinement) {
  // Reference value from a much finer grid.
  double prev = kInfinity;
  for (int n : {5, 9, 17, 33}) {
    const auto g = build_grid(n, n, 1.0, 1.0, BoundaryKind::Neumann);
    const Field f = g.sample([](double x, double y) {
      return std::sin(kPi * x) * std::sin(kPi * y) + x * y;
    });
    const auto fine = build_grid(257, 257, 1.0, 1.0, BoundaryKind::Neumann);
    const Field ff = fine.sample([](double x, double y) {
      return std::sin(kPi * x) * std::sin(kPi * y) + x * y;
    });
    const double err = std::abs(norm_lp(g, f, 3.0) - norm_lp(fine, ff, 3.0));
    EXPECT_LT(err, prev);
    prev = err;
  }
}

TEST(Control, DistributedIdentityAndEmptyMask) {
  const auto g = build_grid(7, 5, 3.0, 1.0, BoundaryKind::Dirichlet);
  const auto full = ControlOperator::distributed(g, Eigen::VectorXd::Ones(g.dof_count()));
  const Field one = Field::Ones(full.control_size());
  EXPECT_EQ((control_injection(g, one, full) - Field::Ones(g.dof_count())).norm(), 0.0);

  const auto none = ControlOperator::distributed(g, Eigen::VectorXd::Zero(g.dof_count()));
  EXPECT_EQ(none.control_size(), 0);
  EXPECT_EQ(control_injection(g, Field(0), none).norm(), 0.0);
}

TEST(Control, BoundaryInjectionOnUnitGrid) {
  // Ghost substitution of kappa dx/dnu = u: arc length / cell area, i.e.
  // 2/h on edge nodes and 2/hx + 2/hy at corners (h = 1/2).
  const auto g = build_grid(3, 3, 1.0, 1.0, BoundaryKind::Neumann);
  const auto b = ControlOperator::boundary(g);
  EXPECT_EQ(b.control_size(), 8);
  const Field bu = control_injection(g, Field::Ones(8), b);
  for (int k = 0; k < g.dof_count(); ++k) {
    const auto [i, j] = g.node(k);
    const bool cx = i == 0 || i == 2;
    const bool cy = j == 0 || j == 2;
    const double expected = cx && cy ? 8.0 : (cx || cy ? 4.0 : 0.0);
    EXPECT_DOUBLE_EQ(bu[k], expected);
  }
  EXPECT_THROW(ControlOperator::boundary(build_grid(3, 3, 1, 1, BoundaryKind::Dirichlet)),
               DomainError);
}

TEST(Control, AdjointConsistency) {
  const auto gn = build_grid(9, 6, 3.0, 1.0, BoundaryKind::Neumann);
  const auto gd = build_grid(9, 6, 3.0, 1.0, BoundaryKind::Dirichlet);
  Eigen::VectorXd mask = Eigen::VectorXd::Zero(gd.dof_count());
  for (int k = 0; k < gd.dof_count(); k += 2) mask[k] = 1.0;
  const std::pair<const SpatialGrid*, ControlOperator> cases[] = {
      {&gn, ControlOperator::boundary(gn)},
      {&gd, ControlOperator::distributed(gd, mask)},
  };
  for (const auto& [g, op] : cases) {
    for (unsigned s = 0; s < 5; ++s) {
      const Field u = random_field(op.control_size(), 20 + s);
      const Field l = random_field(g->dof_count(), 40 + s);
      const double lhs = inner_l2(*g, op.apply(u), l);
      const Field bstar = op.adjoint(l);
      const double rhs = (op.control_weights().array() * u.array() * bstar.array()).sum();
      EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST(Control, SizeMismatchThrows) {
  const auto g = build_grid(5, 5, 1.0, 1.0, BoundaryKind::Neumann);
  const auto b = ControlOperator::boundary(g);
  EXPECT_THROW(b.apply(Field::Ones(3)), DimensionError);
  EXPECT_THROW(b.adjoint(Field::Ones(3)), DimensionError);
  EXPECT_THROW(inner_l2(g, Field::Ones(3), Field::Ones(3)), DimensionError);
}
