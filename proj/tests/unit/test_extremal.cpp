#include "turnpike/errors.hpp"
#include "turnpike/extremal.hpp"

#include "scalar_oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace turnpike;

namespace {

Problem small_problem(double e, ReferenceKind ref = ReferenceKind::Static) {
  OCPSpec s;
  s.cubic.e = e;
  s.reference = ref;
  s.reference_scale = 0.2;
  return Problem(s, build_grid(9, 5, 3.0, 1.0, BoundaryKind::Dirichlet));
}

Trajectory random_traj(int slices, int n, unsigned seed, double scale = 1.0) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> d(0.0, scale);
  Trajectory t;
  for (int i = 0; i < slices; ++i) {
    Field f(n);
    for (int j = 0; j < n; ++j) f[j] = d(rng);
    t.push_back(f);
  }
  return t;
}

Perturbation random_perturbation(int n, int slices, unsigned seed, double scale) {
  Perturbation p;
  p.eps1 = random_traj(slices - 1, n, seed, scale);
  p.eps2 = random_traj(slices - 1, n, seed + 1, scale);
  p.epsT = random_traj(1, n, seed + 2, scale)[0];
  p.eps0 = random_traj(1, n, seed + 3, scale)[0];
  return p;
}

// The single interior node of a 3x3 Dirichlet grid on [0,3]x[0,1].
struct ScalarCase {
  Problem problem;
  oracle::ScalarOCP ocp;
};

ScalarCase scalar_case(double e, double x0, const TimeGrid& tg) {
  OCPSpec s;
  s.cubic.e = e;
  s.diffusion = 0.1;
  s.alpha = 0.05;
  s.reference_scale = 0.15;  // x_d = 1.5 at the center node
  s.x0 = Field::Constant(1, x0);
  Problem p(s, build_grid(3, 3, 3.0, 1.0, BoundaryKind::Dirichlet));
  oracle::ScalarOCP o;
  o.a = 0.1 * (2.0 / (1.5 * 1.5) + 2.0 / (0.5 * 0.5));
  o.e = e;
  o.alpha = 0.05;
  o.xd = 1.5;
  o.x0 = x0;
  o.t = tg.vertices();
  return {std::move(p), o};
}

}  // namespace

TEST(Packing, RoundTrip) {
  const int n = 4, slices = 5;
  ExtremalPoint z{random_traj(slices, n, 1), random_traj(slices, n, 2)};
  const auto v = pack(z);
  ASSERT_EQ(v.size(), 2 * n * slices);
  EXPECT_EQ(v.segment(0, n), z.x[0]);
  EXPECT_EQ(v.segment(n, n), z.lambda[0]);
  EXPECT_EQ(v.segment(2 * n, n), z.x[1]);
  const auto back = unpack_point(v, n, slices);
  for (int i = 0; i < slices; ++i) {
    EXPECT_EQ(back.x[static_cast<std::size_t>(i)], z.x[static_cast<std::size_t>(i)]);
    EXPECT_EQ(back.lambda[static_cast<std::size_t>(i)], z.lambda[static_cast<std::size_t>(i)]);
  }
  const auto eps = random_perturbation(n, slices, 3, 1.0);
  const auto pe = pack(eps);
  EXPECT_EQ(pe.segment(0, n), eps.eps0);
  EXPECT_EQ(pe.segment(n, n), eps.eps1[0]);
  EXPECT_EQ(pe.segment(2 * n, n), eps.eps2[0]);
  EXPECT_EQ(pe.segment(2 * n * slices - n, n), eps.epsT);
  EXPECT_EQ(pack(unpack_perturbation(pe, n, slices)), pe);
  EXPECT_THROW(unpack_point(v, n + 1, slices), DimensionError);
}

TEST(Residual, MatchesScalarOracleEquations) {
  const auto tg = exponential_grid(4.0, 9, 0.7);
  auto sc = scalar_case(1.0, 0.4, tg);
  const auto sol = oracle::solve_tpbvp(sc.ocp);
  ExtremalPoint z = zero_extremal(1, 9);
  for (std::size_t i = 0; i < 9; ++i) {
    z.x[i][0] = sol.x[i];
    z.lambda[i][0] = sol.lambda[i];
  }
  const auto r = residual_vector(z, sc.problem, tg, zero_perturbation(1, 9));
  EXPECT_LT(r.lpNorm<Eigen::Infinity>(), 1e-10);
}

TEST(Newton, AgreesWithScalarOracle) {
  for (double e : {0.0, 1.0, 4.0}) {
    const auto tg = uniform_grid(3.0, 31);
    auto sc = scalar_case(e, -0.8, tg);
    const auto sol = oracle::solve_tpbvp(sc.ocp);
    ExtremalPoint init = zero_extremal(1, 31);
    init.x[0] = sc.problem.x0();
    const auto res = newton_solve(sc.problem, tg, zero_perturbation(1, 31), init);
    for (std::size_t i = 0; i < 31; ++i) {
      EXPECT_NEAR(res.z.x[i][0], sol.x[i], 1e-6) << "e=" << e << " i=" << i;
      EXPECT_NEAR(res.z.lambda[i][0], sol.lambda[i], 1e-6) << "e=" << e << " i=" << i;
    }
  }
}

TEST(Newton, OptimalControlMinimizesScalarCost) {
  const auto tg = uniform_grid(2.0, 11);
  auto sc = scalar_case(1.0, 0.0, tg);
  const auto sol = oracle::solve_tpbvp(sc.ocp);
  std::vector<double> u;
  for (int i = 0; i < 10; ++i) u.push_back(sol.lambda[static_cast<std::size_t>(i)] / 0.05);
  const double j0 = oracle::scalar_cost(sc.ocp, u);
  for (int k = 0; k < 10; ++k) {
    for (double d : {-1e-2, 1e-2}) {
      auto v = u;
      v[static_cast<std::size_t>(k)] += d;
      EXPECT_GT(oracle::scalar_cost(sc.ocp, v), j0);
    }
  }
}

TEST(Newton, LinearQuadraticConvergesInOneStep) {
  const Problem p = small_problem(0.0);
  const auto tg = uniform_grid(2.0, 8);
  const auto res = newton_solve(p, tg, zero_perturbation(p.dof_count(), 8),
                                zero_extremal(p.dof_count(), 8));
  EXPECT_EQ(res.iterations, 1);
  EXPECT_LT(res.residual_history.back(), 1e-9);
}

TEST(Newton, ConvergesQuadratically) {
  const Problem p = small_problem(3.0, ReferenceKind::Dynamic);
  const auto tg = uniform_grid(4.0, 12);
  const auto res = newton_solve(p, tg, zero_perturbation(p.dof_count(), 12),
                                zero_extremal(p.dof_count(), 12));
  const auto& h = res.residual_history;
  ASSERT_GE(h.size(), 3u);
  EXPECT_LT(h.back(), 1e-9);
  // Last contraction far below linear rate.
  const auto m = h.size();
  EXPECT_LT(h[m - 1], 1e-2 * h[m - 2]);
}

TEST(Newton, ReportsFailure) {
  const Problem p = small_problem(1.0);
  const auto tg = uniform_grid(2.0, 6);
  NewtonOptions o;
  o.max_iter = 1;
  o.tol = 1e-14;
  auto init = zero_extremal(p.dof_count(), 6);
  init.x[3] = Field::Constant(p.dof_count(), 50.0);
  try {
    newton_solve(p, tg, zero_perturbation(p.dof_count(), 6), init, o);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_FALSE(e.history().empty());
  }
}

TEST(KKT, DirectionalDerivativeOfResidual) {
  const Problem p = small_problem(2.0, ReferenceKind::Dynamic);
  const auto tg = exponential_grid(3.0, 7, 1.0);
  const int n = p.dof_count();
  const ExtremalPoint z{random_traj(7, n, 4), random_traj(7, n, 5)};
  const ExtremalPoint dz{random_traj(7, n, 6), random_traj(7, n, 7)};
  const auto eps = zero_perturbation(n, 7);
  const auto k = assemble_kkt(z, p, tg);
  const double h = 1e-6;
  const Eigen::VectorXd zp = pack(z), d = pack(dz);
  const Eigen::VectorXd fd = (residual_vector(unpack_point(zp + h * d, n, 7), p, tg, eps) -
                              residual_vector(unpack_point(zp - h * d, n, 7), p, tg, eps)) /
                             (2 * h);
  const Eigen::VectorXd kd = pack(k.apply(dz));
  EXPECT_LT((fd - kd).norm(), 1e-6 * kd.norm());
  EXPECT_LT((k.matrix() * d - kd).norm(), 1e-12 * kd.norm());
}

TEST(KKT, SolveRoundTrip) {
  const Problem p = small_problem(1.0);
  const auto tg = uniform_grid(2.0, 6);
  const int n = p.dof_count();
  const auto k = assemble_kkt(zero_extremal(n, 6), p, tg);
  const auto rhs = random_perturbation(n, 6, 8, 1.0);
  const auto dz = solve_kkt(k, rhs);
  EXPECT_LT((pack(k.apply(dz)) - pack(rhs)).norm(), 1e-9 * pack(rhs).norm());
  const Eigen::VectorXd b = pack(rhs);
  const Eigen::VectorXd y = k.solve_transposed(b);
  EXPECT_LT((SparseMatrix(k.matrix().transpose()) * y - b).norm(), 1e-9 * b.norm());
  EXPECT_GT(k.condition_estimate(), 0.0);
  EXPECT_THROW(k.solve(Eigen::VectorXd::Ones(3)), DimensionError);
}

TEST(FrozenNewton, MatchesNewtonForLinearDynamics) {
  const Problem p = small_problem(0.0);
  const auto tg = uniform_grid(2.0, 8);
  const int n = p.dof_count();
  const auto zero = zero_perturbation(n, 8);
  const auto base = newton_solve(p, tg, zero, zero_extremal(n, 8));
  const auto eps = random_perturbation(n, 8, 9, 0.5);
  const auto full = newton_solve(p, tg, eps, base.z);
  const auto frozen = frozen_newton_solve(p, tg, eps, base.z, zero);
  EXPECT_LE(frozen.iterations, 2);
  EXPECT_LT((pack(frozen.z) - pack(full.z)).norm(), 1e-8 * pack(full.z).norm());
}

TEST(FrozenNewton, ContractsForSmallPerturbations) {
  const Problem p = small_problem(2.0);
  const auto tg = uniform_grid(3.0, 10);
  const int n = p.dof_count();
  const auto zero = zero_perturbation(n, 10);
  const auto base = newton_solve(p, tg, zero, zero_extremal(n, 10));
  const auto eps = random_perturbation(n, 10, 10, 1e-3);
  const auto frozen = frozen_newton_solve(p, tg, eps, base.z, zero);
  ASSERT_FALSE(frozen.ratios.empty());
  for (double r : frozen.ratios) EXPECT_LT(r, 0.5);
  const auto full = newton_solve(p, tg, eps, base.z);
  EXPECT_LT((pack(frozen.z) - pack(full.z)).lpNorm<Eigen::Infinity>(), 1e-8);
}

TEST(FrozenNewton, RejectsBasePointThatIsNotASolution) {
  const Problem p = small_problem(1.0);
  const auto tg = uniform_grid(2.0, 5);
  const int n = p.dof_count();
  const auto zero = zero_perturbation(n, 5);
  EXPECT_THROW(frozen_newton_solve(p, tg, zero, zero_extremal(n, 5), zero), DomainError);
}

TEST(Static, SolvesSteadyOptimalitySystem) {
  const Problem p = small_problem(1.0);
  const auto s = solve_static(p);
  EXPECT_LT(static_residual(p, s.x, s.lambda).norm(), 1e-9);
  EXPECT_LT((s.u - p.control().adjoint(s.lambda) / p.alpha()).norm(), 1e-14);
  EXPECT_THROW(solve_static(small_problem(1.0, ReferenceKind::Dynamic)), DomainError);
}

TEST(Static, ConstantExtremalSolvesPerturbedDynamics) {
  const Problem p = small_problem(2.0);
  const auto s = solve_static(p);
  const auto tg = exponential_grid(5.0, 9, 1.0);
  const auto z = constant_extremal(s.x, s.lambda, 9);
  const auto eps = static_as_perturbation(s.x, s.lambda, p.x0(), tg);
  EXPECT_LT(residual_vector(z, p, tg, eps).lpNorm<Eigen::Infinity>(), 1e-9);
  EXPECT_EQ(eps.epsT, s.lambda);
  EXPECT_EQ(eps.eps0, s.x - p.x0());
}

TEST(Control, RecoveredFromAdjoint) {
  const Problem p = small_problem(1.0);
  const auto lam = random_traj(4, p.dof_count(), 11);
  const auto u = recover_control(lam, p);
  ASSERT_EQ(u.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_LT((u[i] * p.alpha() - lam[i]).norm(), 1e-12);
}

TEST(ReducedGradient, MatchesFiniteDifferences) {
  const Problem p = small_problem(1.5, ReferenceKind::Dynamic);
  const auto tg = exponential_grid(3.0, 7, 1.0);
  auto u = random_traj(7, p.control_size(), 12);
  u.back().setZero();
  const auto g = reduced_gradient(p, tg, u);
  EXPECT_EQ(g.back().norm(), 0.0);
  const double h = 1e-5;
  std::mt19937 rng(13);
  std::uniform_int_distribution<int> slot(0, 5), node(0, p.control_size() - 1);
  for (int trial = 0; trial < 12; ++trial) {
    const auto k = static_cast<std::size_t>(slot(rng));
    const int j = node(rng);
    auto up = u, um = u;
    up[k][j] += h;
    um[k][j] -= h;
    const double fd = (reduced_objective(p, tg, up) - reduced_objective(p, tg, um)) / (2 * h);
    EXPECT_NEAR(fd, g[k][j], 1e-5 * std::max(1.0, std::abs(g[k][j])));
  }
}

TEST(ReducedGradient, VanishesAtExtremal) {
  const Problem p = small_problem(1.0, ReferenceKind::Dynamic);
  const auto tg = uniform_grid(2.0, 9);
  const int n = p.dof_count();
  const auto res = newton_solve(p, tg, zero_perturbation(n, 9), zero_extremal(n, 9));
  const auto u = recover_control(res.z.lambda, p);
  double worst = 0.0;
  for (const auto& gi : reduced_gradient(p, tg, u)) worst = std::max(worst, gi.norm());
  EXPECT_LT(worst, 1e-8);
}

TEST(ExtremalCsv, RoundTrip) {
  const auto tg = exponential_grid(2.0, 4, 1.0);
  const ExtremalPoint z{random_traj(4, 3, 14), random_traj(4, 3, 15)};
  std::stringstream io;
  write_csv(io, z, tg);
  EXPECT_EQ(io.str().substr(0, 19), "time,node,x,lambda\n");
  const auto back = read_extremal_csv(io);
  EXPECT_EQ(pack(back), pack(z));
  std::istringstream bad("time,node,x,lambda\n0,0,1\n");
  EXPECT_THROW(read_extremal_csv(bad), Error);
}
