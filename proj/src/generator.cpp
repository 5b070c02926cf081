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

#include "dqfi/generator.hpp"

#include <algorithm>
#include <array>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <limits>
#include <string>

#include "dqfi/errors.hpp"

namespace dqfi {

namespace {

const cplx kI(0.0, 1.0);

void require_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("generator: t must be finite and non-negative");
}

// Composite 16-point Gauss-Legendre on [0, t], doubling panels until two
// successive estimates agree to 1e-10 relative to max(1, |estimate|).
template <class F>
auto gauss_legendre(F&& f, double t, std::size_t panels) {
  using G = boost::math::quadrature::gauss<double, 16>;
  const auto& x = G::abscissa();
  const auto& w = G::weights();
  auto rule = [&](std::size_t np) {
    const double h = t / static_cast<double>(np);
    decltype(f(0.0)) acc = f(0.0);
    acc *= 0.0;
    for (std::size_t p = 0; p < np; ++p) {
      const double mid = (static_cast<double>(p) + 0.5) * h;
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double dx = 0.5 * h * x[k];
        auto v = f(mid - dx);
        v += f(mid + dx);
        v *= 0.5 * h * w[k];
        acc += v;
      }
    }
    return acc;
  };
  constexpr std::size_t kMaxPanels = std::size_t{1} << 14;
  std::size_t np = std::max<std::size_t>(panels, 1);
  auto prev = rule(np);
  while (np < kMaxPanels) {
    np *= 2;
    auto next = rule(np);
    const double diff = (next - prev).max_abs();
    prev = std::move(next);
    if (diff <= 1e-10 * std::max(1.0, prev.max_abs())) return prev;
  }
  throw ConvergenceError("quadrature: refinement did not converge within 2^14 panels");
}

void guard_overflow(const CMatrix& L, double t) {
  double re = 0.0;
  for (cplx z : eig_general(L).values) re = std::max(re, std::abs(z.real()));
  if (t * re > 300.0)
    throw OverflowError("quadrature: t*max|Re L_n| = " + std::to_string(t * re) + " exceeds the overflow guard");
}

// int_0^t mu^k e^{z mu} dmu for k = 0, 1, 2.
std::array<cplx, 3> moment_integrals(cplx z, double t) {
  std::array<cplx, 3> out{};
  const cplx zt = z * t;
  if (std::abs(zt) <= 1.0) {
    for (int k = 0; k < 3; ++k) {
      cplx sum = 0.0;
      cplx term = 1.0;  // (zt)^j / j!
      for (int j = 0; j < 40; ++j) {
        const cplx add = term / static_cast<double>(k + j + 1);
        sum += add;
        if (std::abs(add) < 1e-18 * std::abs(sum)) break;
        term *= zt / static_cast<double>(j + 1);
      }
      out[k] = std::pow(t, k + 1) * sum;
    }
    return out;
  }
  const cplx e = std::exp(zt);
  out[0] = (e - 1.0) / z;
  out[1] = (t * e - out[0]) / z;
  out[2] = (t * t * e - 2.0 * out[1]) / z;
  return out;
}

void require_well_conditioned(const BiorthogonalSpectrum& s) {
  if (s.ill_conditioned)
    throw IllConditionedError("spectral generator: spectrum is near an exceptional point (condition " +
                              std::to_string(s.condition) + ")");
}

}  // namespace

std::string route_name(Route r) {
  switch (r) {
    case Route::Spectral: return "spectral";
    case Route::Quadrature: return "quadrature";
    case Route::PropagatorFd: return "propagator-fd";
    case Route::EpJordan: return "ep-jordan";
    case Route::Analytic: return "analytic";
    case Route::Frechet: return "frechet";
  }
  return "unknown";
}

Route parse_route(const std::string& name) {
  for (Route r : {Route::Spectral, Route::Quadrature, Route::PropagatorFd, Route::EpJordan, Route::Analytic,
                  Route::Frechet})
    if (route_name(r) == name) return r;
  if (name == "fd") return Route::PropagatorFd;
  if (name == "jordan") return Route::EpJordan;
  throw DomainError("unknown route '" + name + "'");
}

cplx phi1(cplx z) {
  if (z == cplx(0.0)) return 1.0;
  const double x = z.real();
  const double y = z.imag();
  if (x > 700.0) return (std::exp(z) - 1.0) / z;
  const double s = std::sin(0.5 * y);
  const cplx em1(std::expm1(x) * std::cos(y) - 2.0 * s * s, std::exp(x) * std::sin(y));
  return em1 / z;
}

GeneratorPair hermitian_split(GeneratorPair g) {
  g.xi_dag = g.xi.adjoint();
  g.theta_herm = 0.5 * (g.xi + g.xi_dag);
  g.lambda_herm = (0.5 * kI) * (g.xi - g.xi_dag);
  return g;
}

GeneratorPair generator_spectral(const BiorthogonalSpectrum& s, const CMatrix& dL, double t) {
  require_time(t);
  require_well_conditioned(s);
  const std::size_t n = s.size();
  // D_nm = <chi_n| dL |phi_m>
  std::vector<CVector> dphi(n);
  for (std::size_t m = 0; m < n; ++m) dphi[m] = dL * s.right[m];
  CMatrix K(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      K(a, b) = kI * inner(s.left[a], dphi[b]) * t * phi1((s.values[a] - s.values[b]) * t);
  GeneratorPair g;
  g.xi = s.right_matrix() * K * s.left_matrix().adjoint();
  g.route = Route::Spectral;
  g.t = t;
  return hermitian_split(std::move(g));
}

GeneratorPair generator_quadrature(const CMatrix& L, const CMatrix& dL, double t, std::size_t panels) {
  require_time(t);
  guard_overflow(L, t);
  auto integrand = [&](double mu) {
    CMatrix back;
    try {
      back = matexp(L, -mu);
    } catch (const OverflowError&) {
      throw OverflowError("quadrature: e^{-mu L} overflows at mu = " + std::to_string(mu));
    }
    return matexp(L, mu) * dL * back;
  };
  GeneratorPair g;
  g.xi = kI * gauss_legendre(integrand, t, panels);
  g.route = Route::Quadrature;
  g.t = t;
  return hermitian_split(std::move(g));
}

GeneratorPair generator_propagator_fd(const OpenSystemModel& model, double theta, double t, double h) {
  require_time(t);
  if (h <= 0.0) h = default_fd_step(theta);
  const CMatrix up = matexp(build_liouvillian(model, theta + h).matrix, t);
  const CMatrix um = matexp(build_liouvillian(model, theta - h).matrix, t);
  const CMatrix u = matexp(build_liouvillian(model, theta).matrix, t);
  const CMatrix du = (1.0 / (2.0 * h)) * (up - um);
  GeneratorPair g;
  g.xi = kI * du * pinv(u);
  if (!g.xi.all_finite()) throw NumericError("propagator-fd: propagator is numerically singular");
  g.route = Route::PropagatorFd;
  g.t = t;
  return hermitian_split(std::move(g));
}

GeneratorPair generator_ep(const JordanBasis& jb, const CMatrix& dL, double t) {
  require_time(t);
  const std::size_t n = jb.right.rows();
  std::vector<std::size_t> start;
  std::size_t pos = 0;
  for (std::size_t sz : jb.block_sizes) {
    if (sz > 2) throw UnsupportedError("generator_ep: Jordan blocks larger than 2 are not supported");
    start.push_back(pos);
    pos += sz;
  }
  if (pos != n) throw DomainError("generator_ep: block sizes do not match the basis");

  const CMatrix D = jb.left.adjoint() * dL * jb.right;
  CMatrix K(n, n);
  for (std::size_t a = 0; a < jb.block_sizes.size(); ++a) {
    for (std::size_t b = 0; b < jb.block_sizes.size(); ++b) {
      const std::size_t pa = jb.block_sizes[a];
      const std::size_t pb = jb.block_sizes[b];
      const auto I = moment_integrals(jb.block_values[a] - jb.block_values[b], t);
      // Block of D, then N_a D, D N_b and N_a D N_b (N is the nilpotent shift).
      auto d = [&](std::size_t i, std::size_t j) -> cplx {
        return (i < pa && j < pb) ? D(start[a] + i, start[b] + j) : cplx(0.0);
      };
      for (std::size_t i = 0; i < pa; ++i) {
        for (std::size_t j = 0; j < pb; ++j) {
          const cplx nd = d(i + 1, j);
          const cplx dn = j > 0 ? d(i, j - 1) : cplx(0.0);
          const cplx ndn = j > 0 ? d(i + 1, j - 1) : cplx(0.0);
          K(start[a] + i, start[b] + j) = I[0] * d(i, j) + I[1] * (nd - dn) - I[2] * ndn;
        }
      }
    }
  }
  GeneratorPair g;
  g.xi = kI * jb.right * K * jb.left.adjoint();
  g.route = Route::EpJordan;
  g.t = t;
  return hermitian_split(std::move(g));
}

double dqfi_upper_bound(const GeneratorPair& g) {
  const EigResult th = eig_hermitian(g.theta_herm, 1e-8);
  const EigResult la = eig_hermitian(g.lambda_herm, 1e-8);
  const double top = th.values.back().real() + la.values.back().real();
  const double bottom = th.values.front().real() + la.values.front().real();
  return (top - bottom) * (top - bottom);
}

Route select_route(const BiorthogonalSpectrum& s) { return s.ill_conditioned ? Route::Quadrature : Route::Spectral; }

CVector generator_action_spectral(const BiorthogonalSpectrum& s, const CMatrix& dL, const CVector& rho0, double t) {
  require_time(t);
  require_well_conditioned(s);
  const std::size_t n = s.size();
  std::vector<cplx> a(n);
  for (std::size_t m = 0; m < n; ++m) a[m] = inner(s.left[m], rho0);
  CVector w(rho0.dim());
  for (std::size_t p = 0; p < n; ++p) {
    cplx c = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      if (a[m] == cplx(0.0)) continue;
      // int_0^t e^{L_p mu} e^{L_m (t - mu)} dmu, factored on the slower exponent.
      const cplx lp = s.values[p];
      const cplx lm = s.values[m];
      const cplx hi = lp.real() >= lm.real() ? lp : lm;
      const cplx lo = lp.real() >= lm.real() ? lm : lp;
      const cplx e = std::exp(hi * t) * t * phi1((lo - hi) * t);
      c += inner(s.left[p], dL * s.right[m]) * e * a[m];
    }
    w += (kI * c) * s.right[p];
  }
  return w;
}

CVector generator_action_quadrature(const CMatrix& L, const CMatrix& dL, const CVector& rho0, double t) {
  require_time(t);
  auto integrand = [&](double mu) { return matexp(L, mu) * (dL * (matexp(L, t - mu) * rho0)); };
  CVector w = gauss_legendre(integrand, t, 1);
  w *= kI;
  return w;
}

CVector generator_action_frechet(const CMatrix& L, const CMatrix& dL, const CVector& rho0, double t) {
  require_time(t);
  CVector w = matexp_frechet(L, dL, t) * rho0;
  w *= kI;
  return w;
}

}  // namespace dqfi
