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

#include <string>
#include <vector>

#include "dqfi/generator.hpp"
#include "dqfi/liouville.hpp"
#include "dqfi/spectral.hpp"

namespace dqfi {

/// Closed forms for H = omega sigma_z / 2 with a sigma_x jump at rate gamma_x,
/// probed from (|e> + |g>)/sqrt(2).
struct TwoLevelParams {
  double omega = 1.0;
  double gamma_x = 0.0;
  cplx Omega;  // sqrt(gamma_x^2 - omega^2), principal branch
  bool is_lep = false;
};

/// Throws DomainError unless omega > 0 and gamma_x >= 0.
TwoLevelParams make_params(double omega, double gamma_x);

/// At the exceptional point the coalesced pair is returned with
/// ill_conditioned set and infinite condition.
BiorthogonalSpectrum analytic_spectrum(const TwoLevelParams& p);

GeneratorPair analytic_generator(const TwoLevelParams& p, double t);

struct AnalyticState {
  LiouvilleState state;  // purity-normalized
  cplx wp;               // coherence rho_eg(t)
};

AnalyticState analytic_state(const TwoLevelParams& p, double t);
/// d(wp)/d(omega).
cplx analytic_wp_derivative(const TwoLevelParams& p, double t);

double analytic_dqfi(const TwoLevelParams& p, double t);
double analytic_cqfi(const TwoLevelParams& p, double t);

enum class Figure { Fig1, Fig2, Fig3 };
enum class CurveLabel { Dqfi, Cqfi, EigReal, EigImag };

std::string curve_label_name(CurveLabel l);

struct AnalyticCurve {
  std::vector<double> grid;  // gamma_x/omega for fig1, t otherwise
  std::vector<double> values;
  CurveLabel label = CurveLabel::Dqfi;
  double gamma_x = 0.0;   // fig2/fig3 rate
  int eigen_index = 0;    // fig1: 1-based eigenvalue label, 0 otherwise
};

struct FigureGrid {
  double start = 0.0;
  double stop = 1.0;
  std::size_t points = 2;
  std::vector<double> values() const;
};

/// fig1: gamma_x/omega in [0, 2.5] with 251 points. fig2/fig3: t in [0, 200]
/// with 4001 points.
FigureGrid default_grid(Figure f);
/// Rates used by fig2 and fig3, in units of omega.
const std::vector<double>& figure_rates();

/// omega = 1 throughout. fig1 curves follow the closed-form labelling L1..L4.
std::vector<AnalyticCurve> figure_data(Figure f, const FigureGrid& grid);

/// Interior local maxima of v whose value exceeds `floor`.
std::size_t count_local_maxima(const std::vector<double>& v, double floor);
/// Interior local extrema (maxima and minima) whose three-point neighbourhood
/// rises above `floor`.
std::size_t count_local_extrema(const std::vector<double>& v, double floor);

}  // namespace dqfi
