// Copyright 2026 The dqfi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <utility>
#include <vector>

namespace dqfi {

using cplx = std::complex<double>;

/// Dense complex vector.
class CVector {
 public:
  CVector() = default;
  explicit CVector(std::size_t dim) : data_(dim) {}
  /// Throws DomainError if any entry is not finite.
  explicit CVector(std::vector<cplx> entries);
  CVector(std::initializer_list<cplx> entries);

  std::size_t dim() const { return data_.size(); }
  cplx& operator[](std::size_t i) { return data_[i]; }
  const cplx& operator[](std::size_t i) const { return data_[i]; }
  const std::vector<cplx>& entries() const { return data_; }

  double norm() const;
  double max_abs() const;
  bool all_finite() const;
  CVector conj() const;

  CVector& operator+=(const CVector& o);
  CVector& operator-=(const CVector& o);
  CVector& operator*=(cplx s);

 private:
  std::vector<cplx> data_;
};

/// Dense complex matrix, row-major.
class CMatrix {
 public:
  CMatrix() = default;
  CMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  /// Throws DomainError on a size mismatch or a non-finite entry.
  CMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> entries);
  CMatrix(std::initializer_list<std::initializer_list<cplx>> rows);

  static CMatrix identity(std::size_t n);
  static CMatrix diagonal(const std::vector<cplx>& d);
  static CMatrix from_columns(const std::vector<CVector>& cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool is_square() const { return rows_ == cols_; }

  cplx& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  const std::vector<cplx>& entries() const { return data_; }

  CMatrix adjoint() const;
  CMatrix transpose() const;
  CMatrix conj() const;
  cplx trace() const;
  CVector column(std::size_t j) const;
  void set_column(std::size_t j, const CVector& v);

  /// Max column sum.
  double norm1() const;
  /// Max row sum.
  double norm_inf() const;
  double max_abs() const;
  double frobenius() const;
  bool all_finite() const;

  CMatrix& operator+=(const CMatrix& o);
  CMatrix& operator-=(const CMatrix& o);
  CMatrix& operator*=(cplx s);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> data_;
};

CMatrix operator+(CMatrix a, const CMatrix& b);
CMatrix operator-(CMatrix a, const CMatrix& b);
CMatrix operator*(const CMatrix& a, const CMatrix& b);
CMatrix operator*(cplx s, CMatrix a);
CVector operator*(const CMatrix& a, const CVector& v);
CVector operator+(CVector a, const CVector& b);
CVector operator-(CVector a, const CVector& b);
CVector operator*(cplx s, CVector v);

/// <a|b> with the first argument conjugated.
cplx inner(const CVector& a, const CVector& b);
/// |a><b|
CMatrix outer(const CVector& a, const CVector& b);

CMatrix kron(const CMatrix& a, const CMatrix& b);

/// e^{scale * a} by Pade(13) scaling and squaring. Throws OverflowError.
CMatrix matexp(const CMatrix& a, double scale = 1.0);

/// Frechet derivative of the exponential: d/de e^{scale (a + e E)} at e = 0.
CMatrix matexp_frechet(const CMatrix& a, const CMatrix& e, double scale = 1.0);

/// LU factorization with partial pivoting.
class LuDecomposition {
 public:
  /// Throws SingularMatrixError when a pivot falls below n * eps * max|a_ij|.
  explicit LuDecomposition(const CMatrix& a);
  CMatrix solve(const CMatrix& b) const;
  CVector solve(const CVector& b) const;

 private:
  CMatrix lu_;
  std::vector<std::size_t> perm_;
};

CMatrix solve(const CMatrix& a, const CMatrix& b);
CMatrix inverse(const CMatrix& a);

struct EigResult {
  std::vector<cplx> values;
  CMatrix right_vectors;  // unit-norm columns
  double residual = 0.0;
  /// Index pairs whose eigenvalues nearly coincide and whose eigenvectors
  /// are numerically parallel (defective cluster).
  std::vector<std::pair<std::size_t, std::size_t>> degenerate_pairs;
};

/// Balancing, Hessenberg reduction, shifted complex QR and triangular
/// back-substitution. Values are returned in Schur order.
/// Throws ConvergenceError when the sweep cap is hit.
EigResult eig_general(const CMatrix& a);

/// Cyclic Jacobi. Values ascending, orthonormal vectors.
/// Throws DomainError when a is not Hermitian to within `herm_tol` (relative).
EigResult eig_hermitian(const CMatrix& a, double herm_tol = 1e-10);

/// a^dag (a a^dag + delta I)^{-1}. Throws SingularMatrixError at delta = 0
/// when a a^dag is singular.
CMatrix pinv(const CMatrix& a, double delta);
/// delta = 0 with fallback to 1e-12 ||a a^dag||_inf.
CMatrix pinv(const CMatrix& a);

/// Rescale v by a unit phase so its first largest-magnitude entry is real-positive.
void fix_phase(CVector& v);

/// Sine of the angle between two nonzero vectors.
double angle_sine(const CVector& a, const CVector& b);

}  // namespace dqfi
