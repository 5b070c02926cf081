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

#include "dqfi/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dqfi/errors.hpp"

namespace dqfi {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

void require_square(const CMatrix& a, const char* what) {
  if (!a.is_square()) throw DomainError(std::string(what) + ": matrix is not square");
}

}  // namespace

// ---------------------------------------------------------------- CVector

CVector::CVector(std::vector<cplx> entries) : data_(std::move(entries)) {
  if (!all_finite()) throw DomainError("CVector: non-finite entry");
}

CVector::CVector(std::initializer_list<cplx> entries) : CVector(std::vector<cplx>(entries)) {}

double CVector::norm() const {
  double s = 0.0;
  for (const auto& z : data_) s += std::norm(z);
  return std::sqrt(s);
}

double CVector::max_abs() const {
  double m = 0.0;
  for (const auto& z : data_) m = std::max(m, std::abs(z));
  return m;
}

bool CVector::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), finite);
}

CVector CVector::conj() const {
  CVector r(dim());
  for (std::size_t i = 0; i < dim(); ++i) r[i] = std::conj(data_[i]);
  return r;
}

CVector& CVector::operator+=(const CVector& o) {
  if (o.dim() != dim()) throw DomainError("CVector: dimension mismatch");
  for (std::size_t i = 0; i < dim(); ++i) data_[i] += o[i];
  return *this;
}

CVector& CVector::operator-=(const CVector& o) {
  if (o.dim() != dim()) throw DomainError("CVector: dimension mismatch");
  for (std::size_t i = 0; i < dim(); ++i) data_[i] -= o[i];
  return *this;
}

CVector& CVector::operator*=(cplx s) {
  for (auto& z : data_) z *= s;
  return *this;
}

CVector operator+(CVector a, const CVector& b) { return a += b; }
CVector operator-(CVector a, const CVector& b) { return a -= b; }
CVector operator*(cplx s, CVector v) { return v *= s; }

cplx inner(const CVector& a, const CVector& b) {
  if (a.dim() != b.dim()) throw DomainError("inner: dimension mismatch");
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

CMatrix outer(const CVector& a, const CVector& b) {
  CMatrix r(a.dim(), b.dim());
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < b.dim(); ++j) r(i, j) = a[i] * std::conj(b[j]);
  return r;
}

// ---------------------------------------------------------------- CMatrix

CMatrix::CMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows * cols) throw DomainError("CMatrix: entry count does not match shape");
  if (!all_finite()) throw DomainError("CMatrix: non-finite entry");
}

CMatrix::CMatrix(std::initializer_list<std::initializer_list<cplx>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DomainError("CMatrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  if (!all_finite()) throw DomainError("CMatrix: non-finite entry");
}

CMatrix CMatrix::identity(std::size_t n) {
  CMatrix r(n, n);
  for (std::size_t i = 0; i < n; ++i) r(i, i) = 1.0;
  return r;
}

CMatrix CMatrix::diagonal(const std::vector<cplx>& d) {
  CMatrix r(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) r(i, i) = d[i];
  return r;
}

CMatrix CMatrix::from_columns(const std::vector<CVector>& cols) {
  if (cols.empty()) return {};
  CMatrix r(cols.front().dim(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) r.set_column(j, cols[j]);
  return r;
}

CMatrix CMatrix::adjoint() const {
  CMatrix r(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) r(j, i) = std::conj((*this)(i, j));
  return r;
}

CMatrix CMatrix::transpose() const {
  CMatrix r(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
  return r;
}

CMatrix CMatrix::conj() const {
  CMatrix r = *this;
  for (auto& z : r.data_) z = std::conj(z);
  return r;
}

cplx CMatrix::trace() const {
  cplx s = 0.0;
  for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) s += (*this)(i, i);
  return s;
}

CVector CMatrix::column(std::size_t j) const {
  CVector v(rows_);
  for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
  return v;
}

void CMatrix::set_column(std::size_t j, const CVector& v) {
  if (v.dim() != rows_) throw DomainError("set_column: dimension mismatch");
  for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

double CMatrix::norm1() const {
  double m = 0.0;
  for (std::size_t j = 0; j < cols_; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) s += std::abs((*this)(i, j));
    m = std::max(m, s);
  }
  return m;
}

double CMatrix::norm_inf() const {
  double m = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) s += std::abs((*this)(i, j));
    m = std::max(m, s);
  }
  return m;
}

double CMatrix::max_abs() const {
  double m = 0.0;
  for (const auto& z : data_) m = std::max(m, std::abs(z));
  return m;
}

double CMatrix::frobenius() const {
  double s = 0.0;
  for (const auto& z : data_) s += std::norm(z);
  return std::sqrt(s);
}

bool CMatrix::all_finite() const { return std::all_of(data_.begin(), data_.end(), finite); }

CMatrix& CMatrix::operator+=(const CMatrix& o) {
  if (o.rows_ != rows_ || o.cols_ != cols_) throw DomainError("CMatrix: shape mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
  return *this;
}

CMatrix& CMatrix::operator-=(const CMatrix& o) {
  if (o.rows_ != rows_ || o.cols_ != cols_) throw DomainError("CMatrix: shape mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
  return *this;
}

CMatrix& CMatrix::operator*=(cplx s) {
  for (auto& z : data_) z *= s;
  return *this;
}

CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
CMatrix operator*(cplx s, CMatrix a) { return a *= s; }

CMatrix operator*(const CMatrix& a, const CMatrix& b) {
  if (a.cols() != b.rows()) throw DomainError("CMatrix: product shape mismatch");
  CMatrix r(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const cplx aik = a(i, k);
      if (aik == cplx(0.0)) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) r(i, j) += aik * b(k, j);
    }
  return r;
}

CVector operator*(const CMatrix& a, const CVector& v) {
  if (a.cols() != v.dim()) throw DomainError("CMatrix: matrix-vector shape mismatch");
  CVector r(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    cplx s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * v[j];
    r[i] = s;
  }
  return r;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix r(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      for (std::size_t k = 0; k < b.rows(); ++k)
        for (std::size_t l = 0; l < b.cols(); ++l)
          r(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
  return r;
}

// ---------------------------------------------------------------- LU

LuDecomposition::LuDecomposition(const CMatrix& a) : lu_(a), perm_(a.rows()) {
  require_square(a, "LuDecomposition");
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
  const double tiny = static_cast<double>(std::max<std::size_t>(n, 1)) * kEps * a.max_abs();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(lu_(i, k)) > std::abs(lu_(p, k))) p = i;
    if (!(std::abs(lu_(p, k)) > tiny)) throw SingularMatrixError("LU: matrix is numerically singular");
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(p, j));
      std::swap(perm_[k], perm_[p]);
    }
    const cplx piv = lu_(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const cplx f = lu_(i, k) / piv;
      lu_(i, k) = f;
      if (f == cplx(0.0)) continue;
      for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
    }
  }
}

CMatrix LuDecomposition::solve(const CMatrix& b) const {
  const std::size_t n = lu_.rows();
  if (b.rows() != n) throw DomainError("LU solve: shape mismatch");
  CMatrix x(n, b.cols());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) x(i, j) = b(perm_[i], j);
  for (std::size_t c = 0; c < b.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < i; ++k) x(i, c) -= lu_(i, k) * x(k, c);
    for (std::size_t ii = n; ii-- > 0;) {
      for (std::size_t k = ii + 1; k < n; ++k) x(ii, c) -= lu_(ii, k) * x(k, c);
      x(ii, c) /= lu_(ii, ii);
    }
  }
  return x;
}

CVector LuDecomposition::solve(const CVector& b) const {
  CMatrix bm(b.dim(), 1);
  bm.set_column(0, b);
  return solve(bm).column(0);
}

CMatrix solve(const CMatrix& a, const CMatrix& b) { return LuDecomposition(a).solve(b); }

CMatrix inverse(const CMatrix& a) { return solve(a, CMatrix::identity(a.rows())); }

// ---------------------------------------------------------------- matexp

CMatrix matexp(const CMatrix& a, double scale) {
  require_square(a, "matexp");
  if (!std::isfinite(scale)) throw DomainError("matexp: non-finite scale");
  const std::size_t n = a.rows();
  CMatrix A = cplx(scale) * a;
  const double norm = A.norm1();
  if (!std::isfinite(norm)) throw OverflowError("matexp: input norm overflows");

  constexpr double kTheta13 = 5.4;
  int s = 0;
  if (norm > kTheta13) s = static_cast<int>(std::ceil(std::log2(norm / kTheta13)));
  if (s > 0) A *= cplx(std::ldexp(1.0, -s));

  static constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                 1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,       1323241920.0,
                                 40840800.0,          960960.0,            16380.0,
                                 182.0,               1.0};
  const CMatrix I = CMatrix::identity(n);
  const CMatrix A2 = A * A;
  const CMatrix A4 = A2 * A2;
  const CMatrix A6 = A4 * A2;
  CMatrix u_inner = A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 +
                    b[3] * A2 + b[1] * I;
  const CMatrix U = A * u_inner;
  const CMatrix V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 +
                    b[2] * A2 + b[0] * I;
  CMatrix R = solve(V - U, V + U);
  for (int k = 0; k < s; ++k) {
    R = R * R;
    if (!R.all_finite()) throw OverflowError("matexp: overflow during squaring");
  }
  if (!R.all_finite()) throw OverflowError("matexp: result overflows");
  return R;
}

CMatrix matexp_frechet(const CMatrix& a, const CMatrix& e, double scale) {
  require_square(a, "matexp_frechet");
  const std::size_t n = a.rows();
  if (e.rows() != n || e.cols() != n) throw DomainError("matexp_frechet: shape mismatch");
  CMatrix block(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      block(i, j) = a(i, j);
      block(n + i, n + j) = a(i, j);
      block(i, n + j) = e(i, j);
    }
  const CMatrix big = matexp(block, scale);
  CMatrix r(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) r(i, j) = big(i, n + j);
  return r;
}

// ---------------------------------------------------------------- eigen helpers

void fix_phase(CVector& v) {
  const double m = v.max_abs();
  if (m == 0.0) return;
  for (std::size_t i = 0; i < v.dim(); ++i) {
    if (std::abs(v[i]) >= (1.0 - 1e-8) * m) {
      v *= std::conj(v[i]) / std::abs(v[i]);
      v[i] = std::abs(v[i]);
      return;
    }
  }
}

double angle_sine(const CVector& a, const CVector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double c = std::abs(inner(a, b)) / (na * nb);
  return std::sqrt(std::max(0.0, 1.0 - c * c));
}

namespace {

// Diagonal similarity D^{-1} A D with power-of-two scalings.
std::vector<double> balance(CMatrix& h) {
  const std::size_t n = h.rows();
  std::vector<double> d(n, 1.0);
  constexpr double radix = 2.0;
  bool done = false;
  for (int pass = 0; !done && pass < 100; ++pass) {
    done = true;
    for (std::size_t i = 0; i < n; ++i) {
      double c = 0.0;
      double r = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(h(j, i));
        r += std::abs(h(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix;
      double f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= radix * radix;
      }
      g = r * radix;
      while (c >= g) {
        f /= radix;
        c /= radix * radix;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        d[i] *= f;
        for (std::size_t j = 0; j < n; ++j) h(i, j) /= f;
        for (std::size_t j = 0; j < n; ++j) h(j, i) *= f;
      }
    }
  }
  return d;
}

// Householder reduction to upper Hessenberg form; q accumulates the transform.
void hessenberg(CMatrix& h, CMatrix& q) {
  const std::size_t n = h.rows();
  for (std::size_t k = 0; k + 2 < n; ++k) {
    double alpha_norm = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) alpha_norm += std::norm(h(i, k));
    alpha_norm = std::sqrt(alpha_norm);
    if (alpha_norm == 0.0) continue;
    const cplx x0 = h(k + 1, k);
    const cplx phase = std::abs(x0) > 0.0 ? x0 / std::abs(x0) : cplx(1.0);
    const cplx alpha = -phase * alpha_norm;
    std::vector<cplx> v(n, 0.0);
    for (std::size_t i = k + 1; i < n; ++i) v[i] = h(i, k);
    v[k + 1] -= alpha;
    double vn = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) vn += std::norm(v[i]);
    vn = std::sqrt(vn);
    if (vn == 0.0) continue;
    for (std::size_t i = k + 1; i < n; ++i) v[i] /= vn;
    // h <- (I - 2vv^dag) h
    for (std::size_t j = 0; j < n; ++j) {
      cplx s = 0.0;
      for (std::size_t i = k + 1; i < n; ++i) s += std::conj(v[i]) * h(i, j);
      for (std::size_t i = k + 1; i < n; ++i) h(i, j) -= 2.0 * v[i] * s;
    }
    // h <- h (I - 2vv^dag), q <- q (I - 2vv^dag)
    for (std::size_t i = 0; i < n; ++i) {
      cplx s = 0.0;
      cplx sq = 0.0;
      for (std::size_t j = k + 1; j < n; ++j) {
        s += h(i, j) * v[j];
        sq += q(i, j) * v[j];
      }
      for (std::size_t j = k + 1; j < n; ++j) {
        h(i, j) -= 2.0 * s * std::conj(v[j]);
        q(i, j) -= 2.0 * sq * std::conj(v[j]);
      }
    }
    for (std::size_t i = k + 2; i < n; ++i) h(i, k) = 0.0;
  }
}

struct Givens {
  double c;
  cplx s;
};

Givens make_givens(cplx a, cplx b) {
  const double r = std::hypot(std::abs(a), std::abs(b));
  if (r == 0.0) return {1.0, 0.0};
  if (std::abs(a) == 0.0) return {0.0, 1.0};
  const double c = std::abs(a) / r;
  const cplx s = (a / std::abs(a)) * std::conj(b) / r;
  return {c, s};
}

// Shifted QR on a Hessenberg matrix until upper triangular; z accumulates.
void schur(CMatrix& h, CMatrix& z) {
  const std::size_t n = h.rows();
  if (n == 0) return;
  const std::size_t cap = 100 * n;
  std::size_t total = 0;
  int iter = 0;
  const double hnorm = std::max(h.frobenius(), std::numeric_limits<double>::min());
  std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(n) - 1;
  std::vector<Givens> rot(n);
  while (hi > 0) {
    std::ptrdiff_t l = hi;
    for (; l > 0; --l) {
      double scale = std::abs(h(l - 1, l - 1)) + std::abs(h(l, l));
      if (scale == 0.0) scale = hnorm;
      if (std::abs(h(l, l - 1)) <= 1e-14 * scale) {
        h(l, l - 1) = 0.0;
        break;
      }
    }
    if (l == hi) {
      --hi;
      iter = 0;
      continue;
    }
    if (++total > cap) throw ConvergenceError("eig_general: QR iteration cap reached");
    ++iter;

    cplx mu;
    if (iter % 10 == 0) {
      mu = h(hi, hi) + 0.75 * std::abs(h(hi, hi - 1));
    } else {
      const cplx a = h(hi - 1, hi - 1);
      const cplx b = h(hi - 1, hi);
      const cplx c = h(hi, hi - 1);
      const cplx d = h(hi, hi);
      const cplx half = 0.5 * (a - d);
      const cplx disc = std::sqrt(half * half + b * c);
      const cplx m1 = 0.5 * (a + d) + disc;
      const cplx m2 = 0.5 * (a + d) - disc;
      mu = std::abs(m1 - d) < std::abs(m2 - d) ? m1 : m2;
    }

    for (std::ptrdiff_t k = l; k <= hi; ++k) h(k, k) -= mu;
    for (std::ptrdiff_t k = l; k < hi; ++k) {
      const Givens g = make_givens(h(k, k), h(k + 1, k));
      rot[k] = g;
      for (std::size_t j = k; j < n; ++j) {
        const cplx x = h(k, j);
        const cplx y = h(k + 1, j);
        h(k, j) = g.c * x + g.s * y;
        h(k + 1, j) = -std::conj(g.s) * x + g.c * y;
      }
      h(k + 1, k) = 0.0;
    }
    for (std::ptrdiff_t k = l; k < hi; ++k) {
      const Givens g = rot[k];
      const std::size_t last = static_cast<std::size_t>(std::min<std::ptrdiff_t>(k + 1, hi));
      for (std::size_t i = 0; i <= last; ++i) {
        const cplx x = h(i, k);
        const cplx y = h(i, k + 1);
        h(i, k) = g.c * x + std::conj(g.s) * y;
        h(i, k + 1) = -g.s * x + g.c * y;
      }
      for (std::size_t i = 0; i < n; ++i) {
        const cplx x = z(i, k);
        const cplx y = z(i, k + 1);
        z(i, k) = g.c * x + std::conj(g.s) * y;
        z(i, k + 1) = -g.s * x + g.c * y;
      }
    }
    for (std::ptrdiff_t k = l; k <= hi; ++k) h(k, k) += mu;
  }
}

// Eigenvectors of an upper-triangular t by back-substitution.
CMatrix triangular_vectors(const CMatrix& t) {
  const std::size_t n = t.rows();
  CMatrix x(n, n);
  const double smin = std::max(kEps * t.frobenius(), std::numeric_limits<double>::min());
  for (std::size_t k = n; k-- > 0;) {
    std::vector<cplx> v(k + 1, 0.0);
    v[k] = 1.0;
    for (std::size_t i = k; i-- > 0;) {
      cplx s = 0.0;
      for (std::size_t j = i + 1; j <= k; ++j) s += t(i, j) * v[j];
      cplx den = t(i, i) - t(k, k);
      if (std::abs(den) < smin) den = smin;
      v[i] = -s / den;
      double big = 0.0;
      for (std::size_t j = i; j <= k; ++j) big = std::max(big, std::abs(v[j]));
      if (big > 1e100) {
        for (std::size_t j = i; j <= k; ++j) v[j] /= big;
      }
    }
    for (std::size_t i = 0; i <= k; ++i) x(i, k) = v[i];
  }
  return x;
}

double max_residual(const CMatrix& a, const std::vector<cplx>& values, const CMatrix& vecs) {
  double r = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const CVector v = vecs.column(k);
    r = std::max(r, (a * v - values[k] * v).norm());
  }
  return r;
}

}  // namespace

EigResult eig_general(const CMatrix& a) {
  require_square(a, "eig_general");
  if (!a.all_finite()) throw DomainError("eig_general: non-finite input");
  const std::size_t n = a.rows();
  EigResult res;
  if (n == 0) return res;

  CMatrix h = a;
  const std::vector<double> d = balance(h);
  CMatrix q = CMatrix::identity(n);
  hessenberg(h, q);
  schur(h, q);

  res.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) res.values[i] = h(i, i);
  CMatrix vecs = q * triangular_vectors(h);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) vecs(i, j) *= d[i];

  std::vector<CVector> cols(n);
  for (std::size_t k = 0; k < n; ++k) {
    cols[k] = vecs.column(k);
    cols[k] *= 1.0 / cols[k].norm();
  }

  // Near-equal eigenvalues: flag coalesced vectors, orthonormalize the rest.
  const double scale = std::max(1.0, a.frobenius());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double gap = std::abs(res.values[i] - res.values[j]);
      if (gap > 1e-6 * scale) continue;
      if (angle_sine(cols[i], cols[j]) < 1e-6) res.degenerate_pairs.emplace_back(i, j);
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      if (std::abs(res.values[i] - res.values[j]) > 1e-10 * scale) continue;
      const bool coalesced = std::any_of(res.degenerate_pairs.begin(), res.degenerate_pairs.end(),
                                         [&](const auto& p) { return p.first == i || p.second == i || p.first == j || p.second == j; });
      if (coalesced) continue;
      cols[j] -= inner(cols[i], cols[j]) * cols[i];
      cols[j] *= 1.0 / cols[j].norm();
    }
  }
  for (auto& c : cols) fix_phase(c);
  res.right_vectors = CMatrix::from_columns(cols);
  res.residual = max_residual(a, res.values, res.right_vectors);
  if (!(res.residual <= 1e-8 * scale))
    throw ConvergenceError("eig_general: residual " + std::to_string(res.residual) + " above tolerance");
  return res;
}

EigResult eig_hermitian(const CMatrix& a, double herm_tol) {
  require_square(a, "eig_hermitian");
  const std::size_t n = a.rows();
  const double anorm = std::max(1.0, a.norm_inf());
  if ((a - a.adjoint()).norm_inf() > herm_tol * anorm)
    throw DomainError("eig_hermitian: input is not Hermitian");
  CMatrix h = 0.5 * (a + a.adjoint());
  CMatrix v = CMatrix::identity(n);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += std::norm(h(p, q));
    if (std::sqrt(off) <= 1e-15 * std::max(h.frobenius(), std::numeric_limits<double>::min())) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = std::abs(h(p, q));
        if (apq == 0.0) continue;
        // Phase on column q makes h(p,q) real, then a real Jacobi rotation.
        const cplx ph = std::conj(h(p, q)) / apq;
        for (std::size_t i = 0; i < n; ++i) {
          h(i, q) *= ph;
          v(i, q) *= ph;
        }
        for (std::size_t j = 0; j < n; ++j) h(q, j) *= std::conj(ph);
        const double app = h(p, p).real();
        const double aqq = h(q, q).real();
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t j = 0; j < n; ++j) {
          const cplx x = h(p, j);
          const cplx y = h(q, j);
          h(p, j) = c * x - s * y;
          h(q, j) = s * x + c * y;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const cplx x = h(i, p);
          const cplx y = h(i, q);
          h(i, p) = c * x - s * y;
          h(i, q) = s * x + c * y;
          const cplx vx = v(i, p);
          const cplx vy = v(i, q);
          v(i, p) = c * vx - s * vy;
          v(i, q) = s * vx + c * vy;
        }
        h(p, q) = 0.0;
        h(q, p) = 0.0;
      }
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return h(x, x).real() < h(y, y).real(); });
  EigResult res;
  std::vector<CVector> cols;
  for (std::size_t k : order) {
    res.values.emplace_back(h(k, k).real(), 0.0);
    CVector c = v.column(k);
    fix_phase(c);
    cols.push_back(std::move(c));
  }
  res.right_vectors = CMatrix::from_columns(cols);
  res.residual = max_residual(a, res.values, res.right_vectors);
  return res;
}

CMatrix pinv(const CMatrix& a, double delta) {
  if (!(delta >= 0.0)) throw DomainError("pinv: delta must be non-negative");
  const CMatrix ad = a.adjoint();
  CMatrix g = a * ad;
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) += delta;
  // a^dag g^{-1} = (g^{-dag} a)^dag = (g^{-1} a)^dag since g is Hermitian.
  return solve(g, a).adjoint();
}

CMatrix pinv(const CMatrix& a) {
  try {
    return pinv(a, 0.0);
  } catch (const SingularMatrixError&) {
    const CMatrix g = a * a.adjoint();
    const double delta = 1e-12 * g.norm_inf();
    if (delta == 0.0) return CMatrix(a.cols(), a.rows());
    return pinv(a, delta);
  }
}

}  // namespace dqfi
