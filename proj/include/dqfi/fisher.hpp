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
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "dqfi/generator.hpp"
#include "dqfi/liouville.hpp"
#include "dqfi/spectral.hpp"

namespace dqfi {

struct FisherResult {
  double t = 0.0;
  double dqfi = 0.0;
  std::optional<double> cqfi;
  double purity = 1.0;
  Route route = Route::Spectral;
  bool fallback = false;  // requested route was unusable and `route` replaced it
  std::map<Route, double> route_residuals;  // |F(route) - F(reference)|
  std::optional<double> bound;              // variance-split upper bound
  double var_bound = 0.0;                   // 1/(n F)
};

/// "quadrature" or "quadrature(fallback)".
std::string route_label(const FisherResult& r);

struct SldPair {
  CMatrix dsld;  // M^2 x M^2
  std::optional<CMatrix> csld;
};

/// 4[<Xi^dag Xi> - <Xi^dag><Xi>] in a purity-normalized state.
/// Throws DomainError for an unnormalized state and NumericError when the
/// imaginary residue exceeds 1e-10 (1 + |F|).
double dqfi_covariance(const LiouvilleState& state_n, const GeneratorPair& g);

/// 4(||w||^2 - |<r|w>|^2) for w = Xi r, both scaled by the same norm as r.
double dqfi_from_action(const CVector& r, const CVector& w);

/// 4(<dr|dr> - |<r|dr>|^2); both vectors in the normalized gauge.
double dqfi_derivative(const LiouvilleState& state_n, const CVector& dstate_n);

/// d/dtheta of e^{L(theta) t} rho0 by central differences, checked against
/// the estimate at h/2. Throws NumericError when they differ by more than
/// 1e-5 max(1, |d|). h <= 0 selects default_fd_step.
CVector state_derivative_fd(const OpenSystemModel& model, double theta, const LiouvilleState& rho0, double t,
                            double h = 0.0);

/// d/dtheta of the purity-normalized state v/||v|| given v and dv.
CVector normalized_derivative(const CVector& v, const CVector& dv);

/// 4 t^2 Cov(L^dag, L) for L(theta) = theta L_base.
double dqfi_overall_factor(const CMatrix& L_base, const LiouvilleState& state_n, double t);

/// DQFI with the state frozen at the steady state |phi_1> and the generator
/// at time t. Throws IllConditionedError on an EP-flagged spectrum and
/// DomainError when L_1 is not zero.
double dqfi_steady_series(const BiorthogonalSpectrum& s, const CMatrix& dL, double t);
/// t -> infinity of dqfi_steady_series. Throws DomainError unless
/// Re L_n < 0 for n >= 2.
double dqfi_steady_limit(const BiorthogonalSpectrum& s, const CMatrix& dL);

/// 2(|dr><r| + |r><dr|) in the normalized gauge.
SldPair dsld(const LiouvilleState& state_n, const CVector& dstate_n);

// Density-matrix forms. rho is Hermitian with unit trace and drho Hermitian
// with zero trace. Eigenvalues p_k > 1e-12 max p form the support; elements
// with both indices outside it are set to zero.

/// Symmetric logarithmic derivative in the computational basis (csld) and
/// its Liouville-space counterpart (dsld).
SldPair csld(const CMatrix& rho, const CMatrix& drho);
/// Same as csld; the name mirrors dsld.
SldPair dsld_spectral(const CMatrix& rho, const CMatrix& drho);
double cqfi_spectral(const CMatrix& rho, const CMatrix& drho);
double dqfi_spectral_mixed(const CMatrix& rho, const CMatrix& drho);

/// i (dU/dtheta) U^dag by central differences. Throws DomainError when U is
/// not unitary within 1e-10 at theta or theta +- h.
CMatrix conventional_generator(const std::function<CMatrix(double)>& U, double theta, double h);

struct ClosedHelpers {
  double f_pure = 0.0;  // 4 <Delta h^2> in psi
  double f_max = 0.0;   // (eta_max - eta_min)^2
  CVector optimal_probe;
};

/// h Hermitian, psi normalized.
ClosedHelpers cqfi_closed_helpers(const CMatrix& h, const CVector& psi);

/// 1/(n f); +inf for f = 0. Throws DomainError for f < 0 or n = 0.
double crb_bounds(double f, std::size_t n);

struct EvaluateOptions {
  std::optional<Route> route;  // empty: select_route
  std::size_t protocols = 1;
  bool cqfi = true;
  bool bound = true;
  bool residual = true;
  double fd_step = 0.0;
};

/// Fixed model, parameter and initial state evaluated at many times.
/// The spectrum is computed once; at() is safe to call concurrently.
class Evaluator {
 public:
  Evaluator(const OpenSystemModel& model, double theta, LiouvilleState rho0, EvaluateOptions opts = {});

  FisherResult at(double t) const;

  /// Empty when the eigensolver failed; the spectral route then falls back.
  const std::optional<BiorthogonalSpectrum>& spectrum() const { return spectrum_; }
  const LiouvillianMatrix& liouvillian() const { return L_; }
  const CMatrix& d_liouvillian() const { return dL_; }

 private:
  CVector action(Route r, double t, const CVector& v) const;
  std::optional<double> bound(Route r, double t, const CMatrix& U) const;

  OpenSystemModel model_;
  double theta_;
  LiouvilleState rho0_;
  EvaluateOptions opts_;
  LiouvillianMatrix L_;
  CMatrix dL_;
  std::optional<BiorthogonalSpectrum> spectrum_;
  std::optional<JordanBasis> jordan_;
};

}  // namespace dqfi
