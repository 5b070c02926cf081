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

#include "dqfi/fisher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "dqfi/errors.hpp"

namespace dqfi {

namespace {

const cplx kI(0.0, 1.0);

void require_normalized(const CVector& v, const char* who) {
  if (std::abs(v.norm() - 1.0) > 1e-10) throw DomainError(std::string(who) + ": state is not purity-normalized");
}

// Checks the imaginary residue of a quantity that is real in exact arithmetic.
double real_checked(cplx v, const char* who) {
  if (std::abs(v.imag()) > 1e-10 * (1.0 + std::abs(v.real())))
    throw NumericError(std::string(who) + ": imaginary residue " + std::to_string(v.imag()));
  return v.real();
}

double clamp_nonnegative(double f, double scale, const char* who) {
  if (f < -1e-10 * (1.0 + scale)) throw NumericError(std::string(who) + ": negative Fisher information");
  return std::max(f, 0.0);
}

double hermiticity_defect(const CMatrix& a) { return (a - a.adjoint()).max_abs(); }

// rho = sum_k p_k |psi_k><psi_k| with p descending, and D = Psi^dag drho Psi.
struct RhoBasis {
  std::vector<double> p;
  CMatrix psi;
  CMatrix d;
  std::vector<bool> support;
};

RhoBasis decompose(const CMatrix& rho, const CMatrix& drho) {
  const std::size_t n = rho.rows();
  if (rho.cols() != n || drho.rows() != n || drho.cols() != n)
    throw DomainError("density-matrix forms: rho and drho must be square and of equal size");
  const double scale = std::max(1.0, drho.max_abs());
  if (hermiticity_defect(rho) > 1e-10 || std::abs(rho.trace() - 1.0) > 1e-8)
    throw DomainError("density-matrix forms: rho must be Hermitian with unit trace");
  if (hermiticity_defect(drho) > 1e-10 * scale || std::abs(drho.trace()) > 1e-8 * scale)
    throw DomainError("density-matrix forms: drho must be Hermitian and traceless");

  const EigResult e = eig_hermitian(0.5 * (rho + rho.adjoint()));
  RhoBasis b;
  b.psi = CMatrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = n - 1 - k;
    b.p.push_back(e.values[src].real());
    b.psi.set_column(k, e.right_vectors.column(src));
  }
  const double cut = 1e-12 * b.p.front();
  for (double& p : b.p) {
    b.support.push_back(p > cut);
    if (p <= cut) p = 0.0;
  }
  b.d = b.psi.adjoint() * (0.5 * (drho + drho.adjoint())) * b.psi;
  return b;
}

// Pairwise weight 2/(p_k + p_j); both indices are never outside the support.
double pair_weight(const RhoBasis& b, std::size_t k, std::size_t j) {
  const double s = b.p[k] + b.p[j];
  if (!(s > 0.0)) throw NumericError("density-matrix forms: p_k + p_j vanishes inside the support");
  return 2.0 / s;
}

}  // namespace

std::string route_label(const FisherResult& r) {
  return route_name(r.route) + (r.fallback ? "(fallback)" : "");
}

double dqfi_covariance(const LiouvilleState& state_n, const GeneratorPair& g) {
  const CVector& r = state_n.vector;
  require_normalized(r, "dqfi_covariance");
  const CVector xr = g.xi * r;
  const cplx second = inner(r, g.xi_dag * xr);
  const cplx first = inner(r, g.xi_dag * r) * inner(r, xr);
  const double f = real_checked(4.0 * (second - first), "dqfi_covariance");
  return clamp_nonnegative(f, 4.0 * std::abs(second), "dqfi_covariance");
}

double dqfi_from_action(const CVector& r, const CVector& w) {
  const double ww = w.norm() * w.norm();
  return clamp_nonnegative(4.0 * (ww - std::norm(inner(r, w))), 4.0 * ww, "dqfi_from_action");
}

double dqfi_derivative(const LiouvilleState& state_n, const CVector& dstate_n) {
  require_normalized(state_n.vector, "dqfi_derivative");
  return dqfi_from_action(state_n.vector, dstate_n);
}

CVector state_derivative_fd(const OpenSystemModel& model, double theta, const LiouvilleState& rho0, double t, double h) {
  if (!(t >= 0.0)) throw DomainError("state_derivative_fd: t must be non-negative");
  if (h <= 0.0) h = default_fd_step(theta);
  auto evolve = [&](double th) { return matexp(build_liouvillian(model, th).matrix, t) * rho0.vector; };
  auto central = [&](double step) {
    CVector d = evolve(theta + step);
    d -= evolve(theta - step);
    d *= 1.0 / (2.0 * step);
    return d;
  };
  const CVector coarse = central(h);
  const CVector fine = central(0.5 * h);
  if ((coarse - fine).max_abs() > 1e-5 * std::max(1.0, fine.max_abs()))
    throw NumericError("state_derivative_fd: step-size estimates disagree beyond 1e-5");
  // Richardson extrapolation of the two central differences.
  CVector out = fine;
  out *= 4.0 / 3.0;
  CVector c = coarse;
  c *= 1.0 / 3.0;
  out -= c;
  return out;
}

CVector normalized_derivative(const CVector& v, const CVector& dv) {
  const double n = v.norm();
  if (n == 0.0) throw DomainError("normalized_derivative: zero state");
  const double dn = inner(v, dv).real() / n;
  CVector out = dv;
  out *= 1.0 / n;
  CVector corr = v;
  corr *= dn / (n * n);
  out -= corr;
  return out;
}

double dqfi_overall_factor(const CMatrix& L_base, const LiouvilleState& state_n, double t) {
  const CVector& r = state_n.vector;
  require_normalized(r, "dqfi_overall_factor");
  const CVector x = L_base * r;
  const double xx = x.norm() * x.norm();
  return clamp_nonnegative(4.0 * t * t * (xx - std::norm(inner(r, x))), 4.0 * t * t * xx, "dqfi_overall_factor");
}

namespace {

void require_steady(const BiorthogonalSpectrum& s) {
  if (s.ill_conditioned) throw IllConditionedError("steady-state DQFI: spectrum is flagged near an exceptional point");
  double scale = 1.0;
  for (cplx v : s.values) scale = std::max(scale, std::abs(v));
  if (s.size() == 0 || std::abs(s.values[0]) > 1e-9 * scale)
    throw DomainError("steady-state DQFI: the leading eigenvalue is not zero");
}

// 4 sum_{n,k >= 2} conj(c_n) c_k [<phi_n|phi_k> - <phi_n|phi_1><phi_1|phi_k>].
double steady_quadratic_form(const BiorthogonalSpectrum& s, const std::vector<cplx>& c) {
  CVector p1 = s.right[0];
  p1 *= 1.0 / p1.norm();
  cplx f = 0.0;
  for (std::size_t n = 1; n < s.size(); ++n) {
    if (c[n] == cplx(0.0)) continue;
    for (std::size_t k = 1; k < s.size(); ++k) {
      if (c[k] == cplx(0.0)) continue;
      const cplx g = inner(s.right[n], s.right[k]) - inner(s.right[n], p1) * inner(p1, s.right[k]);
      f += std::conj(c[n]) * c[k] * g;
    }
  }
  return clamp_nonnegative(real_checked(4.0 * f, "steady-state DQFI"), 0.0, "steady-state DQFI");
}

// <chi_k| dL |phi_1> with phi_1 unit-normalized.
std::vector<cplx> steady_couplings(const BiorthogonalSpectrum& s, const CMatrix& dL) {
  CVector p1 = s.right[0];
  p1 *= 1.0 / p1.norm();
  const CVector dp = dL * p1;
  std::vector<cplx> out(s.size());
  for (std::size_t k = 1; k < s.size(); ++k) out[k] = inner(s.left[k], dp);
  return out;
}

}  // namespace

double dqfi_steady_series(const BiorthogonalSpectrum& s, const CMatrix& dL, double t) {
  if (!(t >= 0.0)) throw DomainError("dqfi_steady_series: t must be non-negative");
  require_steady(s);
  std::vector<cplx> c = steady_couplings(s, dL);
  for (std::size_t k = 1; k < s.size(); ++k) c[k] *= t * phi1((s.values[k] - s.values[0]) * t);
  return steady_quadratic_form(s, c);
}

double dqfi_steady_limit(const BiorthogonalSpectrum& s, const CMatrix& dL) {
  require_steady(s);
  double scale = 1.0;
  for (cplx v : s.values) scale = std::max(scale, std::abs(v));
  std::vector<cplx> c = steady_couplings(s, dL);
  for (std::size_t k = 1; k < s.size(); ++k) {
    if (!(s.values[k].real() < -1e-12 * scale))
      throw DomainError("dqfi_steady_limit: a non-decaying mode has no long-time limit");
    c[k] /= -(s.values[k] - s.values[0]);
  }
  return steady_quadratic_form(s, c);
}

SldPair dsld(const LiouvilleState& state_n, const CVector& dstate_n) {
  require_normalized(state_n.vector, "dsld");
  const CVector& r = state_n.vector;
  return SldPair{2.0 * (outer(dstate_n, r) + outer(r, dstate_n)), std::nullopt};
}

SldPair csld(const CMatrix& rho, const CMatrix& drho) {
  const RhoBasis b = decompose(rho, drho);
  const std::size_t n = b.p.size();
  // <psi_k|M|psi_j> = dp_k/p_k delta_kj - 2(p_k - p_j)/(p_k + p_j) <psi_k|d psi_j>
  // with <psi_k|d psi_j> = D_kj/(p_j - p_k); both reduce to 2 D_kj/(p_k + p_j).
  CMatrix m(n, n);
  double p2 = 0.0, pdp = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (b.support[k]) {
      p2 += b.p[k] * b.p[k];
      pdp += b.p[k] * b.d(k, k).real();
    }
    for (std::size_t j = 0; j < n; ++j)
      if (b.support[k] || b.support[j]) m(k, j) = pair_weight(b, k, j) * b.d(k, j);
  }
  const CMatrix hat = b.psi * m * b.psi.adjoint();
  const CMatrix id = CMatrix::identity(n);
  CMatrix tilde = kron(hat, id) + kron(id, hat.transpose());
  const double shift = 2.0 * pdp / p2;
  for (std::size_t i = 0; i < tilde.rows(); ++i) tilde(i, i) -= shift;
  return SldPair{tilde, hat};
}

SldPair dsld_spectral(const CMatrix& rho, const CMatrix& drho) { return csld(rho, drho); }

double cqfi_spectral(const CMatrix& rho, const CMatrix& drho) {
  const RhoBasis b = decompose(rho, drho);
  const std::size_t n = b.p.size();
  // sum dp^2/p + 4 sum p_k <dpsi_k|dpsi_k> - 8 sum p_k p_j/(p_k + p_j) |<psi_k|dpsi_j>|^2,
  // summed pairwise so that the near-degenerate 1/(p_k - p_j)^2 factors cancel exactly.
  double f = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (b.support[k]) f += std::pow(b.d(k, k).real(), 2) / b.p[k];
    for (std::size_t j = k + 1; j < n; ++j)
      if (b.support[k] || b.support[j]) f += 2.0 * pair_weight(b, k, j) * std::norm(b.d(k, j));
  }
  return f;
}

double dqfi_spectral_mixed(const CMatrix& rho, const CMatrix& drho) {
  const RhoBasis b = decompose(rho, drho);
  const std::size_t n = b.p.size();
  double p2 = 0.0, pdp = 0.0, dp2 = 0.0, off = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (b.support[k]) {
      const double dp = b.d(k, k).real();
      p2 += b.p[k] * b.p[k];
      pdp += b.p[k] * dp;
      dp2 += dp * dp;
    }
    // 8 p_k^2 <dpsi_k|dpsi_k> - 8 p_k p_j |<psi_k|dpsi_j>|^2 collected per pair.
    for (std::size_t j = k + 1; j < n; ++j)
      if (b.support[k] || b.support[j]) off += std::norm(b.d(k, j));
  }
  return clamp_nonnegative(4.0 * dp2 / p2 + 8.0 * off / p2 - 4.0 * pdp * pdp / (p2 * p2), 4.0 * dp2 / p2,
                           "dqfi_spectral_mixed");
}

CMatrix conventional_generator(const std::function<CMatrix(double)>& U, double theta, double h) {
  if (!(h > 0.0)) throw DomainError("conventional_generator: h must be positive");
  const CMatrix u0 = U(theta);
  const CMatrix up = U(theta + h);
  const CMatrix um = U(theta - h);
  for (const CMatrix* u : {&u0, &up, &um})
    if ((u->adjoint() * *u - CMatrix::identity(u->rows())).max_abs() > 1e-10)
      throw DomainError("conventional_generator: the family is not unitary");
  return (kI / (2.0 * h)) * (up - um) * u0.adjoint();
}

ClosedHelpers cqfi_closed_helpers(const CMatrix& h, const CVector& psi) {
  if (hermiticity_defect(h) > 1e-10 * std::max(1.0, h.max_abs()))
    throw DomainError("cqfi_closed_helpers: generator is not Hermitian");
  require_normalized(psi, "cqfi_closed_helpers");
  const CVector hp = h * psi;
  const double mean = inner(psi, hp).real();
  ClosedHelpers out;
  out.f_pure = std::max(0.0, 4.0 * (hp.norm() * hp.norm() - mean * mean));
  const EigResult e = eig_hermitian(h, 1e-10 * std::max(1.0, h.max_abs()));
  const std::size_t last = e.values.size() - 1;
  const double spread = e.values[last].real() - e.values[0].real();
  out.f_max = spread * spread;
  out.optimal_probe = e.right_vectors.column(last);
  out.optimal_probe += e.right_vectors.column(0);
  out.optimal_probe *= 1.0 / std::sqrt(2.0);
  return out;
}

double crb_bounds(double f, std::size_t n) {
  if (n == 0) throw DomainError("crb_bounds: protocol count must be at least 1");
  if (!(f >= 0.0)) throw DomainError("crb_bounds: Fisher information must be non-negative");
  if (f == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (static_cast<double>(n) * f);
}

Evaluator::Evaluator(const OpenSystemModel& model, double theta, LiouvilleState rho0, EvaluateOptions opts)
    : model_(model),
      theta_(theta),
      rho0_(std::move(rho0)),
      opts_(opts),
      L_(build_liouvillian(model, theta)),
      dL_(dqfi::d_liouvillian(model, theta)) {
  if (rho0_.vector.dim() != L_.matrix.rows()) throw DomainError("Evaluator: initial state has the wrong dimension");
  if (opts_.route == Route::Analytic) throw DomainError("Evaluator: the analytic route is limited to the two-level oracle");
  if (opts_.protocols == 0) throw DomainError("Evaluator: protocol count must be at least 1");
  try {
    spectrum_ = biorthogonal_spectrum(L_);
  } catch (const NumericError&) {
    return;
  }
  try {
    std::vector<EpCluster> chained;
    for (const EpCluster& c : detect_eps(*spectrum_)) chained.push_back(jordan_chain(L_.matrix, c));
    jordan_ = jordan_basis(*spectrum_, chained);
  } catch (const Error&) {
    jordan_.reset();
  }
}

CVector Evaluator::action(Route r, double t, const CVector& v) const {
  switch (r) {
    case Route::Spectral: return generator_action_spectral(*spectrum_, dL_, rho0_.vector, t);
    case Route::Quadrature: return generator_action_quadrature(L_.matrix, dL_, rho0_.vector, t);
    case Route::Frechet: return generator_action_frechet(L_.matrix, dL_, rho0_.vector, t);
    case Route::EpJordan: return generator_ep(*jordan_, dL_, t).xi * v;
    case Route::PropagatorFd: {
      CVector w = state_derivative_fd(model_, theta_, rho0_, t, opts_.fd_step);
      w *= kI;
      return w;
    }
    case Route::Analytic: break;
  }
  throw DomainError("Evaluator: unsupported route");
}

std::optional<double> Evaluator::bound(Route r, double t, const CMatrix& U) const {
  try {
    GeneratorPair g;
    switch (r) {
      case Route::Spectral: g = generator_spectral(*spectrum_, dL_, t); break;
      case Route::Quadrature: g = generator_quadrature(L_.matrix, dL_, t); break;
      case Route::EpJordan: g = generator_ep(*jordan_, dL_, t); break;
      case Route::PropagatorFd: g = generator_propagator_fd(model_, theta_, t, opts_.fd_step); break;
      case Route::Frechet:
        g.xi = kI * matexp_frechet(L_.matrix, dL_, t) * inverse(U);
        g.route = Route::Frechet;
        g.t = t;
        g = hermitian_split(std::move(g));
        break;
      case Route::Analytic: return std::nullopt;
    }
    const double b = dqfi_upper_bound(g);
    if (!std::isfinite(b)) return std::nullopt;
    return b;
  } catch (const Error&) {
    return std::nullopt;
  }
}

FisherResult Evaluator::at(double t) const {
  if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("Evaluator: t must be finite and non-negative");
  const std::size_t M = model_.dim();
  const CMatrix U = matexp(L_.matrix, t);
  const CVector v = U * rho0_.vector;
  const cplx tr = devectorize(v, M).trace();
  const double n = v.norm();

  FisherResult out;
  out.t = t;
  out.purity = n * n / std::norm(tr);

  Route r = opts_.route.value_or(spectrum_ ? select_route(*spectrum_) : Route::Quadrature);
  if ((r == Route::Spectral && (!spectrum_ || spectrum_->ill_conditioned)) || (r == Route::EpJordan && !jordan_)) {
    r = Route::Quadrature;
    out.fallback = true;
  }
  out.route = r;

  const CVector w = action(r, t, v);
  LiouvilleState state_n;
  state_n.vector = v;
  state_n.vector *= 1.0 / n;
  state_n.normalized = true;
  state_n.purity = out.purity;
  CVector wn = w;
  wn *= 1.0 / n;
  out.dqfi = dqfi_from_action(state_n.vector, wn);

  if (opts_.residual && r != Route::Frechet) {
    CVector ref = generator_action_frechet(L_.matrix, dL_, rho0_.vector, t);
    ref *= 1.0 / n;
    out.route_residuals[Route::Frechet] = std::abs(out.dqfi - dqfi_from_action(state_n.vector, ref));
  }
  if (opts_.cqfi) {
    const CMatrix rho = (1.0 / tr) * devectorize(v, M);
    const CMatrix drho = (-kI / tr) * devectorize(w, M);
    out.cqfi = cqfi_spectral(0.5 * (rho + rho.adjoint()), 0.5 * (drho + drho.adjoint()));
  }
  if (opts_.bound) out.bound = bound(r, t, U);
  out.var_bound = crb_bounds(out.dqfi, opts_.protocols);
  return out;
}

}  // namespace dqfi
