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

#include "dqfi/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "dqfi/errors.hpp"

namespace dqfi {

namespace {

double max_modulus(const std::vector<cplx>& v) {
  double m = 0.0;
  for (cplx z : v) m = std::max(m, std::abs(z));
  return m;
}

// Single-linkage clusters of values within tol; each cluster lists indices.
std::vector<std::vector<std::size_t>> clusters_of(const std::vector<cplx>& vals, double tol) {
  const std::size_t n = vals.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(vals[i] - vals[j]) <= tol) parent[find(i)] = find(j);
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::ptrdiff_t> slot(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<std::ptrdiff_t>(out.size());
      out.emplace_back();
    }
    out[slot[r]].push_back(i);
  }
  return out;
}

cplx centroid(const std::vector<cplx>& vals, const std::vector<std::size_t>& idx) {
  cplx s = 0.0;
  for (std::size_t i : idx) s += vals[i];
  return s / static_cast<double>(idx.size());
}

}  // namespace

std::vector<std::size_t> spectral_order(const std::vector<cplx>& values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  const double tol = 1e-9 * std::max(1.0, max_modulus(values));
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a].real() > values[b].real(); });
  // Runs of equal real part are ordered by imaginary part.
  std::size_t start = 0;
  for (std::size_t k = 1; k <= n; ++k) {
    if (k == n || values[idx[k - 1]].real() - values[idx[k]].real() > tol) {
      std::stable_sort(idx.begin() + start, idx.begin() + k,
                       [&](std::size_t a, std::size_t b) { return values[a].imag() < values[b].imag(); });
      start = k;
    }
  }
  return idx;
}

BiorthogonalSpectrum biorthogonal_spectrum(const CMatrix& L) {
  const EigResult rr = eig_general(L);
  const EigResult lr = eig_general(L.adjoint());
  const std::size_t n = rr.values.size();

  std::vector<cplx> lvals(n);
  for (std::size_t i = 0; i < n; ++i) lvals[i] = std::conj(lr.values[i]);
  const double tol = std::max(1e-7 * max_modulus(rr.values), 1e-12);
  const auto rc = clusters_of(rr.values, tol);
  const auto lc = clusters_of(lvals, tol);
  if (rc.size() != lc.size()) throw PairingError("biorthogonal_spectrum: cluster counts differ (near EP)");

  std::vector<CVector> right(n), left(n);
  std::vector<bool> used(lc.size(), false);
  bool singular_overlap = false;
  for (const auto& r : rc) {
    const cplx c = centroid(rr.values, r);
    std::ptrdiff_t best = -1;
    double bestd = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < lc.size(); ++k) {
      if (used[k]) continue;
      const double d = std::abs(centroid(lvals, lc[k]) - c);
      if (d < bestd) {
        bestd = d;
        best = static_cast<std::ptrdiff_t>(k);
      }
    }
    if (best < 0 || lc[best].size() != r.size() || bestd > tol + 1e-6 * std::max(1.0, std::abs(c)))
      throw PairingError("biorthogonal_spectrum: ambiguous left/right pairing (near EP)");
    used[best] = true;
    const auto& l = lc[best];

    // Dual basis within the cluster: X <- X S^{-dag}, S = X^dag Phi.
    const std::size_t k = r.size();
    CMatrix S(k, k);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b)
        S(a, b) = inner(lr.right_vectors.column(l[a]), rr.right_vectors.column(r[b]));
    CMatrix Sinv;
    try {
      Sinv = inverse(S);
    } catch (const SingularMatrixError&) {
      Sinv = pinv(S);
      singular_overlap = true;
    }
    const CMatrix T = Sinv.adjoint();
    for (std::size_t b = 0; b < k; ++b) {
      CVector chi(n);
      for (std::size_t a = 0; a < k; ++a) chi += T(a, b) * lr.right_vectors.column(l[a]);
      right[r[b]] = rr.right_vectors.column(r[b]);
      left[r[b]] = chi;
    }
  }

  BiorthogonalSpectrum s;
  for (std::size_t i : spectral_order(rr.values)) {
    s.values.push_back(rr.values[i]);
    s.right.push_back(right[i]);
    s.left.push_back(left[i]);
  }
  s.condition = 0.0;
  for (const auto& chi : s.left) s.condition = std::max(s.condition, chi.norm());
  if (!std::isfinite(s.condition)) s.condition = std::numeric_limits<double>::infinity();
  s.ill_conditioned = singular_overlap || !(s.condition <= kConditionThreshold);
  for (std::size_t i = 0; i < n && !s.ill_conditioned; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (angle_sine(s.right[i], s.right[j]) < 1e-2) s.ill_conditioned = true;
  return s;
}

BiorthogonalSpectrum biorthogonal_spectrum(const LiouvillianMatrix& L) {
  BiorthogonalSpectrum s = biorthogonal_spectrum(L.matrix);
  const double tol = 1e-9 * std::max(1.0, L.matrix.max_abs());
  // Zero eigenvalues lead even when purely imaginary ones share their real part.
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_partition(idx.begin(), idx.end(), [&](std::size_t i) { return std::abs(s.values[i]) <= tol; });
  if (s.size() == 0 || std::abs(s.values[idx[0]]) > tol)
    throw NumericError("biorthogonal_spectrum: Liouvillian has no zero eigenvalue");
  BiorthogonalSpectrum out = s;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.values[k] = s.values[idx[k]];
    out.right[k] = s.right[idx[k]];
    out.left[k] = s.left[idx[k]];
  }
  return out;
}

std::vector<EpCluster> detect_eps(const BiorthogonalSpectrum& s, double eig_tol, double vec_tol) {
  if (eig_tol < 0.0) eig_tol = 1e-7 * max_modulus(s.values);
  std::vector<EpCluster> out;
  for (const auto& c : clusters_of(s.values, eig_tol)) {
    if (c.size() < 2) continue;
    // Within a value cluster, group eigenvectors that are numerically parallel.
    const auto groups = [&] {
      std::vector<std::size_t> parent(c.size());
      std::iota(parent.begin(), parent.end(), 0);
      auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
      };
      for (std::size_t a = 0; a < c.size(); ++a)
        for (std::size_t b = a + 1; b < c.size(); ++b)
          if (angle_sine(s.right[c[a]], s.right[c[b]]) < vec_tol) parent[find(a)] = find(b);
      std::vector<std::vector<std::size_t>> g(c.size());
      for (std::size_t a = 0; a < c.size(); ++a) g[find(a)].push_back(c[a]);
      return g;
    }();
    for (const auto& g : groups) {
      if (g.size() < 2) continue;
      EpCluster ep;
      ep.members = g;
      ep.order = g.size();
      ep.eigenvalue = centroid(s.values, g);
      double smin = 1.0;
      for (std::size_t a = 0; a < g.size(); ++a)
        for (std::size_t b = a + 1; b < g.size(); ++b) smin = std::min(smin, angle_sine(s.right[g[a]], s.right[g[b]]));
      ep.coalescence = 1.0 - smin;
      out.push_back(std::move(ep));
    }
  }
  return out;
}

EpCluster jordan_chain(const CMatrix& L, const EpCluster& cluster) {
  if (cluster.order > 2) throw UnsupportedError("jordan_chain: only order-2 exceptional points are supported");
  if (cluster.order < 2) throw DomainError("jordan_chain: cluster order must be 2");
  const std::size_t n = L.rows();
  CMatrix A = L;
  for (std::size_t i = 0; i < n; ++i) A(i, i) -= cluster.eigenvalue;

  // Singular value decomposition of A through the Hermitian eigenproblem of A^dag A.
  const EigResult g = eig_hermitian(A.adjoint() * A);
  std::vector<double> sv(n);
  for (std::size_t i = 0; i < n; ++i) sv[i] = std::sqrt(std::max(0.0, g.values[i].real()));
  const double smax = std::max(sv.back(), std::numeric_limits<double>::min());
  const double null_tol = 1e-6 * smax;
  if (sv[0] > null_tol) throw DomainError("jordan_chain: lambda is not an eigenvalue");
  if (n > 1 && sv[1] <= null_tol) throw DomainError("jordan_chain: cluster is not defective");

  CVector v1 = g.right_vectors.column(0);
  fix_phase(v1);
  // Minimum-norm least-squares solution of A v2 = v1 via the truncated pseudoinverse.
  const CVector rhs = A.adjoint() * v1;
  CVector v2(n);
  for (std::size_t i = 1; i < n; ++i) {
    if (sv[i] <= 1e-8 * smax) continue;
    const CVector w = g.right_vectors.column(i);
    v2 += (inner(w, rhs) / (sv[i] * sv[i])) * w;
  }
  v2 -= inner(v1, v2) * v1;
  if ((A * v2 - v1).norm() > 1e-6) throw DomainError("jordan_chain: inconsistent chain equation");

  EpCluster out = cluster;
  out.jordan_chain = {v1, v2};
  return out;
}

JordanBasis jordan_basis(const BiorthogonalSpectrum& s, const std::vector<EpCluster>& chained) {
  const std::size_t n = s.size();
  std::vector<std::ptrdiff_t> owner(n, -1);
  for (std::size_t c = 0; c < chained.size(); ++c) {
    if (chained[c].jordan_chain.size() != chained[c].members.size())
      throw DomainError("jordan_basis: cluster without a Jordan chain");
    for (std::size_t m : chained[c].members) owner[m] = static_cast<std::ptrdiff_t>(c);
  }
  JordanBasis jb;
  std::vector<CVector> cols;
  std::vector<bool> emitted(chained.size(), false);
  for (std::size_t i = 0; i < n; ++i) {
    if (owner[i] < 0) {
      jb.block_values.push_back(s.values[i]);
      jb.block_sizes.push_back(1);
      cols.push_back(s.right[i]);
    } else if (!emitted[owner[i]]) {
      const EpCluster& c = chained[owner[i]];
      emitted[owner[i]] = true;
      jb.block_values.push_back(c.eigenvalue);
      jb.block_sizes.push_back(c.jordan_chain.size());
      for (const auto& v : c.jordan_chain) cols.push_back(v);
    }
  }
  jb.right = CMatrix::from_columns(cols);
  jb.left = inverse(jb.right).adjoint();
  return jb;
}

Splitting splitting_susceptibility(double omega, double gamma_x) {
  if (!(omega > 0.0) || !(gamma_x >= 0.0)) throw DomainError("splitting_susceptibility: need omega > 0, gamma_x >= 0");
  const cplx root = std::sqrt(cplx(gamma_x * gamma_x - omega * omega));
  const double chi = std::abs(root) == 0.0 ? std::numeric_limits<double>::infinity() : std::abs(2.0 * omega / root);
  return {2.0 * root, chi};
}

PiEigenmatrix pi_eigenmatrix(const BiorthogonalSpectrum& s, std::size_t n, std::size_t m) {
  if (n >= s.size() || m >= s.size()) throw DomainError("pi_eigenmatrix: index out of range");
  return {outer(s.right[n], s.left[m]), s.values[n] - s.values[m]};
}

}  // namespace dqfi
