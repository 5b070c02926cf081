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

#include <cstddef>
#include <vector>

#include "dqfi/liouville.hpp"
#include "dqfi/linalg.hpp"

namespace dqfi {

/// Eigenvalues sorted by descending real part, ties by ascending imaginary
/// part. Right vectors have unit norm; left vectors satisfy <chi_n|phi_m> = delta_nm.
struct BiorthogonalSpectrum {
  std::vector<cplx> values;
  std::vector<CVector> right;
  std::vector<CVector> left;
  double condition = 1.0;        // max_n ||chi_n||
  bool ill_conditioned = false;  // near-EP warning; spectral sums are unreliable

  std::size_t size() const { return values.size(); }
  double x(std::size_t n) const { return values[n].real(); }
  double y(std::size_t n) const { return values[n].imag(); }
  double upsilon(std::size_t n, std::size_t m) const { return x(n) - x(m); }
  double beta(std::size_t n, std::size_t m) const { return y(n) - y(m); }
  CMatrix right_matrix() const { return CMatrix::from_columns(right); }
  CMatrix left_matrix() const { return CMatrix::from_columns(left); }
};

struct EpCluster {
  std::vector<std::size_t> members;
  cplx eigenvalue;
  std::size_t order = 0;
  double coalescence = 0.0;            // 1 - smallest eigenvector angle-sine
  std::vector<CVector> jordan_chain;   // empty until jordan_chain() fills it
};

/// Condition number above which the spectrum is marked ill-conditioned.
inline constexpr double kConditionThreshold = 1e6;

/// Throws PairingError when left and right clusters cannot be matched.
BiorthogonalSpectrum biorthogonal_spectrum(const CMatrix& L);
/// Additionally requires a zero leading eigenvalue (NumericError otherwise).
BiorthogonalSpectrum biorthogonal_spectrum(const LiouvillianMatrix& L);

/// Index permutation implementing the spectrum ordering.
std::vector<std::size_t> spectral_order(const std::vector<cplx>& values);

/// eig_tol < 0 selects 1e-7 max|L_n|.
std::vector<EpCluster> detect_eps(const BiorthogonalSpectrum& s, double eig_tol = -1.0, double vec_tol = 1e-4);

/// Fills the chain {v1, v2} with (L - lambda) v2 = v1. Throws UnsupportedError
/// for order > 2 and DomainError for non-defective or inconsistent input.
EpCluster jordan_chain(const CMatrix& L, const EpCluster& cluster);

/// Right basis of eigenvectors and Jordan chains with its dual left basis.
struct JordanBasis {
  std::vector<cplx> block_values;
  std::vector<std::size_t> block_sizes;
  CMatrix right;  // columns in block order
  CMatrix left;   // (right^{-1})^dag
};

/// Replaces each chained cluster of s by its Jordan chain.
JordanBasis jordan_basis(const BiorthogonalSpectrum& s, const std::vector<EpCluster>& chained);

struct Splitting {
  cplx splitting;
  double chi;  // +inf at the exceptional point
};

/// Eigenvalue splitting 2 sqrt(gamma^2 - omega^2) of the spin-flip model and its susceptibility.
Splitting splitting_susceptibility(double omega, double gamma_x);

struct PiEigenmatrix {
  CMatrix matrix;
  cplx eigenvalue;
};

/// |phi_n><chi_m| with eigenvalue L_n - L_m under [L, .]. Zero-based indices.
PiEigenmatrix pi_eigenmatrix(const BiorthogonalSpectrum& s, std::size_t n, std::size_t m);

}  // namespace dqfi
