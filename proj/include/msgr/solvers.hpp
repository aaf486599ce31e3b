#pragma once

#include <memory>
#include <string>

#include "msgr/types.hpp"

namespace msgr {

/// Sparse Cholesky (LDL^T) of a symmetric positive definite matrix.
/// Throws singular_system when a pivot is not strictly positive.
class SpdFactorization {
 public:
  SpdFactorization();
  explicit SpdFactorization(const SparseMatrix& a, const std::string& what = "matrix");
  ~SpdFactorization();
  SpdFactorization(SpdFactorization&&) noexcept;
  SpdFactorization& operator=(SpdFactorization&&) noexcept;

  void compute(const SparseMatrix& a, const std::string& what = "matrix");
  Vector solve(const Vector& b) const;
  DenseMatrix solve(const DenseMatrix& b) const;
  Index size() const { return n_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  Index n_ = 0;
};

/// Sparse LU for general (here: symmetric indefinite saddle-point)
/// matrices, with one step of iterative refinement on every solve.
class LuFactorization {
 public:
  LuFactorization();
  explicit LuFactorization(const SparseMatrix& a, const std::string& what = "matrix");
  ~LuFactorization();
  LuFactorization(LuFactorization&&) noexcept;
  LuFactorization& operator=(LuFactorization&&) noexcept;

  DenseMatrix solve(const DenseMatrix& b) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// [[A, S^T], [S, 0]].
SparseMatrix saddle_matrix(const SparseMatrix& a, const SparseMatrix& s);

/// Conjugate gradients with Jacobi preconditioning to the given relative
/// residual; throws singular_system on stagnation.
Vector conjugate_gradient(const SparseMatrix& a, const Vector& b, double rel_tol,
                          Index max_iterations = 0);

}  // namespace msgr
