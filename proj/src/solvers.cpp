#include "msgr/solvers.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace msgr {

struct SpdFactorization::Impl {
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<std::int64_t>> ldlt;
};

SpdFactorization::SpdFactorization() : impl_(std::make_unique<Impl>()) {}
SpdFactorization::SpdFactorization(const SparseMatrix& a, const std::string& what)
    : impl_(std::make_unique<Impl>()) {
  compute(a, what);
}
SpdFactorization::~SpdFactorization() = default;
SpdFactorization::SpdFactorization(SpdFactorization&&) noexcept = default;
SpdFactorization& SpdFactorization::operator=(SpdFactorization&&) noexcept = default;

void SpdFactorization::compute(const SparseMatrix& a, const std::string& what) {
  if (a.rows() != a.cols()) throw Error(ErrorCode::invalid_argument, what + ": not square");
  n_ = a.rows();
  if (n_ == 0) return;
  impl_->ldlt.compute(a);
  if (impl_->ldlt.info() != Eigen::Success) {
    throw Error(ErrorCode::singular_system, "singular system: factorization of " + what + " failed");
  }
  const Vector d = impl_->ldlt.vectorD();
  const double scale = d.cwiseAbs().maxCoeff();
  if (!(d.minCoeff() > 1e-14 * scale)) {
    throw Error(ErrorCode::singular_system,
                "singular system: " + what + " is not positive definite (pivot " +
                    std::to_string(d.minCoeff()) + ")");
  }
}

Vector SpdFactorization::solve(const Vector& b) const {
  if (n_ == 0) return Vector(0);
  return impl_->ldlt.solve(b);
}

DenseMatrix SpdFactorization::solve(const DenseMatrix& b) const {
  if (n_ == 0) return DenseMatrix(0, b.cols());
  return impl_->ldlt.solve(b);
}

struct LuFactorization::Impl {
  SparseMatrix a;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<std::int64_t>> lu;
};

LuFactorization::LuFactorization() : impl_(std::make_unique<Impl>()) {}
LuFactorization::LuFactorization(const SparseMatrix& a, const std::string& what)
    : impl_(std::make_unique<Impl>()) {
  impl_->a = a;
  impl_->lu.analyzePattern(impl_->a);
  impl_->lu.factorize(impl_->a);
  if (impl_->lu.info() != Eigen::Success) {
    throw Error(ErrorCode::singular_system,
                "singular system: LU of " + what + " failed (" + impl_->lu.lastErrorMessage() + ")");
  }
}
LuFactorization::~LuFactorization() = default;
LuFactorization::LuFactorization(LuFactorization&&) noexcept = default;
LuFactorization& LuFactorization::operator=(LuFactorization&&) noexcept = default;

DenseMatrix LuFactorization::solve(const DenseMatrix& b) const {
  DenseMatrix x = impl_->lu.solve(b);
  const DenseMatrix r = b - impl_->a * x;
  x += impl_->lu.solve(r);
  return x;
}

SparseMatrix saddle_matrix(const SparseMatrix& a, const SparseMatrix& s) {
  const Index n = a.rows(), m = s.rows();
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(a.nonZeros() + 2 * s.nonZeros()));
  for (Index c = 0; c < a.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(a, c); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  }
  for (Index c = 0; c < s.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(s, c); it; ++it) {
      t.emplace_back(n + it.row(), it.col(), it.value());
      t.emplace_back(it.col(), n + it.row(), it.value());
    }
  }
  return from_triplets(n + m, n + m, t);
}

Vector conjugate_gradient(const SparseMatrix& a, const Vector& b, double rel_tol,
                          Index max_iterations) {
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  cg.setTolerance(rel_tol);
  cg.setMaxIterations(max_iterations > 0 ? max_iterations : 10 * a.rows() + 100);
  cg.compute(a);
  Vector x = cg.solve(b);
  if (cg.info() != Eigen::Success) {
    throw Error(ErrorCode::singular_system,
                "singular system: CG stopped at relative residual " + std::to_string(cg.error()));
  }
  return x;
}

}  // namespace msgr
