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

#include "dqfi/twolevel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dqfi/errors.hpp"

namespace dqfi {

namespace {

const cplx kI(0.0, 1.0);

// Even entire functions of z, by series near the origin:
//   S = sinh z / z, C = (cosh z - 1)/z^2, Q = (sinh z - z)/z^3, T = (z cosh z - sinh z)/z^3.
struct Hyper {
  cplx S, C, Q, T;
};

Hyper hyper(cplx z) {
  if (std::abs(z) < 1.0) {
    const cplx z2 = z * z;
    cplx S = 0.0, C = 0.0, Q = 0.0, T = 0.0;
    cplx p = 1.0;    // z^{2k}
    double f = 1.0;  // (2k+1)!
    for (int k = 0; k < 20; ++k) {
      const double f2 = f * (2 * k + 2);
      const double f3 = f2 * (2 * k + 3);
      S += p / f;
      C += p / f2;
      Q += p / f3;
      T += (2.0 * (k + 1)) * p / f3;
      p *= z2;
      f = f3;
    }
    return {S, C, Q, T};
  }
  const cplx sh = std::sinh(z);
  const cplx ch = std::cosh(z);
  const cplx z3 = z * z * z;
  return {sh / z, (ch - 1.0) / (z * z), (sh - z) / z3, (z * ch - sh) / z3};
}

cplx wp_value(const TwoLevelParams& p, double t) {
  const cplx z = p.Omega * t;
  const Hyper h = hyper(z);
  return std::exp(-p.gamma_x * t) / 2.0 * (std::cosh(z) + (p.gamma_x - kI * p.omega) * t * h.S);
}

CVector state_vector(cplx wp) {
  const double n = std::sqrt(0.5 + 2.0 * std::norm(wp));
  return CVector{0.5 / n, wp / n, std::conj(wp) / n, 0.5 / n};
}

}  // namespace

TwoLevelParams make_params(double omega, double gamma_x) {
  if (!(omega > 0.0) || !(gamma_x >= 0.0)) throw DomainError("two-level: need omega > 0 and gamma_x >= 0");
  TwoLevelParams p;
  p.omega = omega;
  p.gamma_x = gamma_x;
  p.is_lep = std::abs(gamma_x - omega) < 1e-9 * omega;
  p.Omega = p.is_lep ? cplx(0.0) : std::sqrt(cplx((gamma_x - omega) * (gamma_x + omega)));
  return p;
}

BiorthogonalSpectrum analytic_spectrum(const TwoLevelParams& p) {
  const double g = p.gamma_x;
  const double w = p.omega;
  const cplx O = p.Omega;
  const double r2 = 1.0 / std::sqrt(2.0);

  std::vector<cplx> vals{0.0, -2.0 * g, -g - O, -g + O};
  std::vector<CVector> right{CVector{r2, 0.0, 0.0, r2}, CVector{-r2, 0.0, 0.0, r2}};
  std::vector<CVector> left = right;

  // Omega - i w = g^2 / (Omega + i w) avoids cancellation for small g. At g = 0
  // the second coherence vector degenerates and is replaced by its limit.
  const cplx c3 = -kI * w - O;
  const cplx c4 = g > 0.0 ? g * g / (O + kI * w) : cplx(0.0);
  const double a1 = 1.0 / std::sqrt(std::norm(c3) + g * g);
  right.push_back(CVector{0.0, a1 * c3, a1 * g, 0.0});
  if (g > 0.0) {
    const double a2 = 1.0 / std::sqrt(std::norm(c4) + g * g);
    right.push_back(CVector{0.0, a2 * c4, a2 * g, 0.0});
  } else {
    right.push_back(CVector{0.0, 0.0, 1.0, 0.0});
  }

  BiorthogonalSpectrum s;
  if (p.is_lep) {
    // Coalesced pair: the dual vectors are self-orthogonal and cannot be normalized.
    left.push_back(right[2].conj());
    left.push_back(right[3].conj());
    s.ill_conditioned = true;
    s.condition = std::numeric_limits<double>::infinity();
  } else {
    // L is complex symmetric, so the dual of phi is conj(phi) / conj(phi^T phi).
    for (std::size_t k = 2; k < 4; ++k) {
      const CVector& f = right[k];
      cplx ff = 0.0;
      for (std::size_t i = 0; i < 4; ++i) ff += f[i] * f[i];
      CVector d = f.conj();
      d *= 1.0 / std::conj(ff);
      left.push_back(d);
    }
  }
  for (std::size_t i : spectral_order(vals)) {
    s.values.push_back(vals[i]);
    s.right.push_back(right[i]);
    s.left.push_back(left[i]);
  }
  if (!s.ill_conditioned) {
    s.condition = 0.0;
    for (const auto& c : s.left) s.condition = std::max(s.condition, c.norm());
    s.ill_conditioned = s.condition > kConditionThreshold;
  }
  return s;
}

GeneratorPair analytic_generator(const TwoLevelParams& p, double t) {
  if (!(t >= 0.0)) throw DomainError("analytic_generator: t must be non-negative");
  const double g = p.gamma_x;
  const double w = p.omega;
  const Hyper h = hyper(2.0 * p.Omega * t);
  const double t2 = t * t;
  const double t3 = t2 * t;
  GeneratorPair out;
  out.xi = CMatrix(4, 4);
  out.xi(1, 1) = t + 4.0 * g * g * t3 * h.Q;
  out.xi(2, 2) = -out.xi(1, 1);
  out.xi(1, 2) = -2.0 * g * t2 * h.C + 4.0 * kI * w * g * t3 * h.Q;
  out.xi(2, 1) = 2.0 * g * t2 * h.C + 4.0 * kI * w * g * t3 * h.Q;
  out.route = Route::Analytic;
  out.t = t;
  return hermitian_split(std::move(out));
}

AnalyticState analytic_state(const TwoLevelParams& p, double t) {
  if (!(t >= 0.0)) throw DomainError("analytic_state: t must be non-negative");
  const cplx wp = wp_value(p, t);
  AnalyticState a;
  a.wp = wp;
  a.state.vector = state_vector(wp);
  a.state.normalized = true;
  a.state.purity = 0.5 + 2.0 * std::norm(wp);
  return a;
}

cplx analytic_wp_derivative(const TwoLevelParams& p, double t) {
  const double g = p.gamma_x;
  const double w = p.omega;
  const Hyper h = hyper(p.Omega * t);
  const cplx s = t * h.S;  // sinh(Omega t)/Omega
  return std::exp(-g * t) / 2.0 * (-w * t * s - kI * s - (g - kI * w) * w * t * t * t * h.T);
}

double analytic_dqfi(const TwoLevelParams& p, double t) {
  if (!(t >= 0.0)) throw DomainError("analytic_dqfi: t must be non-negative");
  if (p.is_lep) {
    // Covariance of the closed-form generator in the closed-form state.
    const GeneratorPair g = analytic_generator(p, t);
    const CVector r = analytic_state(p, t).state.vector;
    const CVector xr = g.xi * r;
    const double second = std::pow(xr.norm(), 2);
    const cplx first = inner(r, xr);
    return std::max(0.0, 4.0 * (second - std::norm(first)));
  }
  const cplx wp = wp_value(p, t);
  const cplx dwp = analytic_wp_derivative(p, t);
  const double N = 0.5 + 2.0 * std::norm(wp);
  const double dabs = 2.0 * (std::conj(wp) * dwp).real();
  return 4.0 / N * (2.0 * std::norm(dwp) - dabs * dabs / N);
}

double analytic_cqfi(const TwoLevelParams& p, double t) {
  if (!(t >= 0.0)) throw DomainError("analytic_cqfi: t must be non-negative");
  const cplx wp = wp_value(p, t);
  const cplx dwp = analytic_wp_derivative(p, t);
  const double den = 1.0 - 4.0 * std::norm(wp);
  // Pure state: F = 2 Tr[(d rho)^2].
  if (den <= 1e-12) return 4.0 * std::norm(dwp);
  const cplx a = wp * std::conj(dwp);
  const cplx num = 4.0 * a * a + 4.0 * std::conj(a) * std::conj(a) + 2.0 * std::norm(dwp);
  return 2.0 * std::norm(dwp) + num.real() / den;
}

std::string curve_label_name(CurveLabel l) {
  switch (l) {
    case CurveLabel::Dqfi: return "dqfi";
    case CurveLabel::Cqfi: return "cqfi";
    case CurveLabel::EigReal: return "eig-real";
    case CurveLabel::EigImag: return "eig-imag";
  }
  return "unknown";
}

std::vector<double> FigureGrid::values() const {
  if (points < 2 || !(stop > start)) throw DomainError("figure grid: need at least two increasing points");
  std::vector<double> v(points);
  for (std::size_t i = 0; i < points; ++i)
    v[i] = start + (stop - start) * static_cast<double>(i) / static_cast<double>(points - 1);
  return v;
}

FigureGrid default_grid(Figure f) {
  if (f == Figure::Fig1) return {0.0, 2.5, 251};
  return {0.0, 200.0, 4001};
}

const std::vector<double>& figure_rates() {
  static const std::vector<double> rates{0.05, 0.3, 0.5, 1.0, 2.0};
  return rates;
}

std::vector<AnalyticCurve> figure_data(Figure f, const FigureGrid& grid) {
  const std::vector<double> x = grid.values();
  std::vector<AnalyticCurve> out;
  if (f == Figure::Fig1) {
    for (int n = 1; n <= 4; ++n) {
      for (CurveLabel label : {CurveLabel::EigReal, CurveLabel::EigImag}) {
        AnalyticCurve c;
        c.grid = x;
        c.label = label;
        c.eigen_index = n;
        for (double g : x) {
          const TwoLevelParams p = make_params(1.0, g);
          const cplx vals[] = {0.0, -2.0 * g, -g - p.Omega, -g + p.Omega};
          const cplx v = vals[n - 1];
          c.values.push_back(label == CurveLabel::EigReal ? v.real() : v.imag());
        }
        out.push_back(std::move(c));
      }
    }
    return out;
  }
  for (double g : figure_rates()) {
    const TwoLevelParams p = make_params(1.0, g);
    AnalyticCurve d;
    d.grid = x;
    d.label = CurveLabel::Dqfi;
    d.gamma_x = g;
    for (double t : x) d.values.push_back(analytic_dqfi(p, t));
    out.push_back(std::move(d));
    if (f == Figure::Fig3) {
      AnalyticCurve c;
      c.grid = x;
      c.label = CurveLabel::Cqfi;
      c.gamma_x = g;
      for (double t : x) c.values.push_back(analytic_cqfi(p, t));
      out.push_back(std::move(c));
    }
  }
  return out;
}

std::size_t count_local_maxima(const std::vector<double>& v, double floor) {
  std::size_t n = 0;
  for (std::size_t i = 1; i + 1 < v.size(); ++i)
    if (v[i] > v[i - 1] && v[i] >= v[i + 1] && v[i] > floor) ++n;
  return n;
}

std::size_t count_local_extrema(const std::vector<double>& v, double floor) {
  std::size_t n = 0;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    const bool peak = v[i] > v[i - 1] && v[i] >= v[i + 1];
    const bool dip = v[i] < v[i - 1] && v[i] <= v[i + 1];
    if ((peak || dip) && std::max({v[i - 1], v[i], v[i + 1]}) > floor) ++n;
  }
  return n;
}

}  // namespace dqfi
