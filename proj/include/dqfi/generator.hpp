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

#include <optional>
#include <string>

#include "dqfi/liouville.hpp"
#include "dqfi/linalg.hpp"
#include "dqfi/spectral.hpp"

namespace dqfi {

/// Frechet is the block-exponential derivative of the propagator; it only
/// produces generator actions and serves as the reference route.
enum class Route { Spectral, Quadrature, PropagatorFd, EpJordan, Analytic, Frechet };

std::string route_name(Route r);
/// Throws DomainError on an unknown name.
Route parse_route(const std::string& name);

/// Xi = i (dU) U^{-1} with its adjoint and Hermitian split Xi = Theta - i Lambda.
struct GeneratorPair {
  CMatrix xi;
  CMatrix xi_dag;
  CMatrix theta_herm;   // (Xi + Xi^dag) / 2
  CMatrix lambda_herm;  // i (Xi - Xi^dag) / 2
  Route route = Route::Spectral;
  double t = 0.0;
  std::optional<double> residual_vs_alternate;
};

/// Fills xi_dag, theta_herm and lambda_herm from xi.
GeneratorPair hermitian_split(GeneratorPair g);

/// Sum over the biorthogonal basis. Throws IllConditionedError on a spectrum
/// flagged as near an exceptional point.
GeneratorPair generator_spectral(const BiorthogonalSpectrum& s, const CMatrix& dL, double t);

/// Gauss-Legendre (16 nodes per panel) with dyadic refinement.
/// Throws OverflowError when t max|Re L_n| > 300 and ConvergenceError
/// when 2^14 panels are not enough.
GeneratorPair generator_quadrature(const CMatrix& L, const CMatrix& dL, double t, std::size_t panels = 1);

/// i (dU/dtheta) pinv(U) with a central difference in theta. h <= 0 selects the default step.
GeneratorPair generator_propagator_fd(const OpenSystemModel& model, double theta, double t, double h = 0.0);

/// Exact evaluation in a Jordan basis (blocks of size <= 2).
GeneratorPair generator_ep(const JordanBasis& jb, const CMatrix& dL, double t);

/// [(max Theta + max Lambda) - (min Theta + min Lambda)]^2.
double dqfi_upper_bound(const GeneratorPair& g);

/// Spectral unless the spectrum is ill-conditioned, quadrature otherwise.
Route select_route(const BiorthogonalSpectrum& s);

// Xi(t) applied to the propagated state, i.e. i d/dtheta (e^{Lt} rho0).
// These avoid forming Xi, whose entries grow like e^{|Re L| t}.

/// Throws IllConditionedError like generator_spectral.
CVector generator_action_spectral(const BiorthogonalSpectrum& s, const CMatrix& dL, const CVector& rho0, double t);
CVector generator_action_quadrature(const CMatrix& L, const CMatrix& dL, const CVector& rho0, double t);
/// Frechet derivative of the exponential via a block matrix exponential.
CVector generator_action_frechet(const CMatrix& L, const CMatrix& dL, const CVector& rho0, double t);

/// (e^z - 1) / z, accurate near zero.
cplx phi1(cplx z);

}  // namespace dqfi
