#include "turnpike/errors.hpp"
#include "turnpike/extremal.hpp"

#include <umfpack.h>

#include <array>
#include <cmath>

namespace turnpike {

// UMFPACK numeric factorization of the compressed-column matrix.
struct KKTSystem::Factorization {
  void* numeric = nullptr;
  double rcond = 0.0;

  Factorization() = default;
  Factorization(const Factorization&) = delete;
  Factorization& operator=(const Factorization&) = delete;
  ~Factorization() {
    if (numeric) umfpack_di_free_numeric(&numeric);
  }

  Eigen::VectorXd solve(const SparseMatrix& m, const Eigen::VectorXd& b, bool transpose) const {
    Eigen::VectorXd x(b.size());
    std::array<double, UMFPACK_INFO> info{};
    const int status = umfpack_di_solve(transpose ? UMFPACK_At : UMFPACK_A, m.outerIndexPtr(),
                                        m.innerIndexPtr(), m.valuePtr(), x.data(), b.data(),
                                        numeric, nullptr, info.data());
    if (status < 0) throw SolverError("UMFPACK solve failed with status " + std::to_string(status));
    return x;
  }
};

KKTSystem::KKTSystem(SparseMatrix matrix, int size, int slices)
    : matrix_(std::move(matrix)), size_(size), slices_(slices) {
  if (matrix_.rows() != matrix_.cols() ||
      matrix_.rows() != 2 * static_cast<Eigen::Index>(size) * slices) {
    throw DimensionError("KKT matrix does not match the layout");
  }
  matrix_.makeCompressed();
}

void KKTSystem::factorize() const {
  if (lu_) return;
  auto f = std::make_shared<Factorization>();
  const int n = static_cast<int>(matrix_.rows());
  std::array<double, UMFPACK_CONTROL> control{};
  std::array<double, UMFPACK_INFO> info{};
  umfpack_di_defaults(control.data());
  void* symbolic = nullptr;
  int status = umfpack_di_symbolic(n, n, matrix_.outerIndexPtr(), matrix_.innerIndexPtr(),
                                   matrix_.valuePtr(), &symbolic, control.data(), info.data());
  if (status < 0) {
    throw SolverError("KKT symbolic factorization failed with status " + std::to_string(status),
                      std::numeric_limits<double>::infinity());
  }
  status = umfpack_di_numeric(matrix_.outerIndexPtr(), matrix_.innerIndexPtr(),
                              matrix_.valuePtr(), symbolic, &f->numeric, control.data(),
                              info.data());
  umfpack_di_free_symbolic(&symbolic);
  if (status != UMFPACK_OK) {
    throw SolverError("KKT factorization failed with status " + std::to_string(status),
                      std::numeric_limits<double>::infinity());
  }
  f->rcond = info[UMFPACK_RCOND];
  lu_ = std::move(f);
}

namespace {

template <typename Solve, typename Apply>
Eigen::VectorXd checked_solve(const Eigen::VectorXd& rhs, Solve&& solve, Apply&& apply,
                              const KKTSystem& k) {
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) return Eigen::VectorXd::Zero(rhs.size());
  Eigen::VectorXd x = solve(rhs);
  Eigen::VectorXd r = rhs - apply(x);
  if (x.allFinite() && r.norm() <= 1e-10 * bnorm) return x;
  x += solve(r);
  r = rhs - apply(x);
  if (x.allFinite() && r.norm() <= 1e-10 * bnorm) return x;
  throw SolverError("KKT solve missed its residual target (relative residual " +
                        std::to_string(r.norm() / bnorm) + ")",
                    k.condition_estimate());
}

}  // namespace

Eigen::VectorXd KKTSystem::solve(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != rows()) throw DimensionError("KKT right-hand side has wrong size");
  factorize();
  return checked_solve(
      rhs, [&](const Eigen::VectorXd& b) -> Eigen::VectorXd { return lu_->solve(matrix_, b, false); },
      [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return matrix_ * x; }, *this);
}

Eigen::VectorXd KKTSystem::solve_transposed(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != rows()) throw DimensionError("KKT right-hand side has wrong size");
  factorize();
  return checked_solve(
      rhs,
      [&](const Eigen::VectorXd& b) -> Eigen::VectorXd { return lu_->solve(matrix_, b, true); },
      [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return matrix_.transpose() * x; },
      *this);
}

ExtremalPoint KKTSystem::solve(const Perturbation& rhs) const {
  return unpack_point(solve(pack(rhs)), size_, slices_);
}

Perturbation KKTSystem::apply(const ExtremalPoint& dz) const {
  return unpack_perturbation(matrix_ * pack(dz), size_, slices_);
}

double KKTSystem::condition_estimate() const {
  try {
    factorize();
  } catch (const SolverError&) {
    return std::numeric_limits<double>::infinity();
  }
  // UMFPACK's cheap estimate: ratio of extreme pivot magnitudes.
  return lu_->rcond > 0.0 ? 1.0 / lu_->rcond : std::numeric_limits<double>::infinity();
}

ExtremalPoint solve_kkt(const KKTSystem& k, const Perturbation& rhs) { return k.solve(rhs); }

}  // namespace turnpike
