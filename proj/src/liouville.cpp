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

#include "dqfi/liouville.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "dqfi/errors.hpp"

namespace dqfi {

namespace {

const cplx kI(0.0, 1.0);

// Tr[rho] and Tr[rho^2] of a devectorized Hermitian state.
std::pair<cplx, double> trace_and_square(const CVector& v, std::size_t M) {
  cplx tr = 0.0;
  for (std::size_t i = 0; i < M; ++i) tr += v[i * M + i];
  const double n = v.norm();
  return {tr, n * n};
}

double hermiticity_defect(const CVector& v, std::size_t M) {
  double d = 0.0;
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t j = 0; j < M; ++j) d = std::max(d, std::abs(v[i * M + j] - std::conj(v[j * M + i])));
  return d;
}

CMatrix pauli(char c) {
  switch (c) {
    case 'x': return CMatrix{{0.0, 1.0}, {1.0, 0.0}};
    case 'y': return CMatrix{{0.0, -kI}, {kI, 0.0}};
    default: return CMatrix{{1.0, 0.0}, {0.0, -1.0}};
  }
}

}  // namespace

OpenSystemModel::OpenSystemModel(std::size_t dim, HamiltonianFn hamiltonian, std::vector<JumpChannel> jumps,
                                 DerivativeFn derivatives, std::string name)
    : dim_(dim),
      hamiltonian_(std::move(hamiltonian)),
      jumps_(std::move(jumps)),
      derivatives_(std::move(derivatives)),
      name_(std::move(name)) {
  if (dim_ == 0) throw DomainError("model: dimension must be positive");
  if (!hamiltonian_) throw DomainError("model: missing Hamiltonian");
  for (const auto& j : jumps_) {
    if (j.op.rows() != dim_ || j.op.cols() != dim_) throw DomainError("model: jump operator has wrong shape");
    if (!j.rate) throw DomainError("model: jump channel without rate");
  }
}

CMatrix OpenSystemModel::hamiltonian(double theta) const {
  CMatrix h = hamiltonian_(theta);
  if (h.rows() != dim_ || h.cols() != dim_) throw DomainError("model: Hamiltonian has wrong shape");
  if ((h - h.adjoint()).max_abs() > 1e-12 * std::max(1.0, h.max_abs()))
    throw DomainError("model: Hamiltonian is not Hermitian at theta = " + std::to_string(theta));
  return h;
}

double OpenSystemModel::rate(std::size_t k, double theta) const {
  const double g = jumps_.at(k).rate(theta);
  if (!std::isfinite(g) || g < 0.0)
    throw DomainError("model: rate " + std::to_string(k) + " is negative or non-finite at theta = " +
                      std::to_string(theta));
  return g;
}

ModelDerivatives OpenSystemModel::derivatives(double theta) const {
  if (!derivatives_) throw DomainError("model: analytic derivatives not available");
  ModelDerivatives d = derivatives_(theta);
  if (d.d_hamiltonian.rows() != dim_ || d.d_hamiltonian.cols() != dim_ || d.d_rates.size() != jumps_.size())
    throw DomainError("model: analytic derivatives have wrong shape");
  return d;
}

CVector vectorize(const CMatrix& rho) {
  if (!rho.is_square()) throw DomainError("vectorize: matrix is not square");
  return CVector(rho.entries());
}

std::size_t liouville_dim(std::size_t n) {
  const auto M = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  if (M * M != n) throw DomainError("vector length " + std::to_string(n) + " is not a perfect square");
  return M;
}

CMatrix devectorize(const CVector& v, std::size_t M) {
  if (v.dim() != M * M) throw DomainError("devectorize: length does not match M^2");
  return CMatrix(M, M, v.entries());
}

LiouvilleState make_state(const CMatrix& rho) {
  if (!rho.is_square()) throw DomainError("state: density matrix is not square");
  if ((rho - rho.adjoint()).max_abs() > 1e-10) throw DomainError("state: density matrix is not Hermitian");
  if (std::abs(rho.trace() - 1.0) > 1e-10) throw DomainError("state: density matrix trace is not one");
  LiouvilleState s;
  s.vector = vectorize(rho);
  s.purity = std::pow(s.vector.norm(), 2);
  return s;
}

LiouvilleState make_pure_state(const CVector& psi) {
  const double n = psi.norm();
  if (n == 0.0) throw DomainError("state: zero ket");
  CVector u = psi;
  u *= 1.0 / n;
  return make_state(outer(u, u));
}

CMatrix liouvillian_from_parts(const CMatrix& h, const std::vector<CMatrix>& ops, const std::vector<double>& rates) {
  const std::size_t M = h.rows();
  const CMatrix I = CMatrix::identity(M);
  CMatrix L = -kI * (kron(h, I) - kron(I, h.transpose()));
  for (std::size_t k = 0; k < ops.size(); ++k) {
    if (rates[k] == 0.0) continue;
    const CMatrix& g = ops[k];
    const CMatrix gdg = g.adjoint() * g;
    L += rates[k] * (kron(g, g.conj()) - 0.5 * (kron(gdg, I) + kron(I, gdg.transpose())));
  }
  return L;
}

LiouvillianMatrix build_liouvillian(const OpenSystemModel& model, double theta) {
  std::vector<CMatrix> ops;
  std::vector<double> rates;
  for (std::size_t k = 0; k < model.jump_count(); ++k) {
    ops.push_back(model.jump_op(k));
    rates.push_back(model.rate(k, theta));
  }
  LiouvillianMatrix L{liouvillian_from_parts(model.hamiltonian(theta), ops, rates), theta};

  // <<vec(I)| L = 0 row by row.
  const std::size_t M = model.dim();
  const double scale = std::max(1.0, L.matrix.max_abs());
  for (std::size_t c = 0; c < M * M; ++c) {
    cplx s = 0.0;
    for (std::size_t i = 0; i < M; ++i) s += L.matrix(i * M + i, c);
    if (std::abs(s) > 1e-10 * scale) throw NumericError("build_liouvillian: trace is not preserved");
  }
  return L;
}

double default_fd_step(double theta) { return 1e-6 * std::max(1.0, std::abs(theta)); }

CMatrix d_liouvillian(const OpenSystemModel& model, double theta, DerivativeMode mode, double h) {
  if (mode == DerivativeMode::Analytic) {
    const ModelDerivatives d = model.derivatives(theta);
    std::vector<CMatrix> ops;
    for (std::size_t k = 0; k < model.jump_count(); ++k) ops.push_back(model.jump_op(k));
    return liouvillian_from_parts(d.d_hamiltonian, ops, d.d_rates);
  }
  if (h <= 0.0) h = default_fd_step(theta);
  const CMatrix lp = build_liouvillian(model, theta + h).matrix;
  const CMatrix lm = build_liouvillian(model, theta - h).matrix;
  return (1.0 / (2.0 * h)) * (lp - lm);
}

CMatrix d_liouvillian(const OpenSystemModel& model, double theta) {
  return d_liouvillian(model, theta,
                       model.has_analytic_derivatives() ? DerivativeMode::Analytic : DerivativeMode::CentralFd);
}

LiouvilleState propagate(const LiouvillianMatrix& L, const LiouvilleState& rho0, double t) {
  if (!(t >= 0.0)) throw DomainError("propagate: t must be non-negative");
  const std::size_t M = liouville_dim(rho0.vector.dim());
  LiouvilleState out;
  out.vector = matexp(L.matrix, t) * rho0.vector;
  const auto [tr0, sq0] = trace_and_square(rho0.vector, M);
  const auto [tr, sq] = trace_and_square(out.vector, M);
  const double tol = 1e-9 * std::max(1.0, rho0.vector.norm());
  if (std::abs(tr - tr0) > tol || hermiticity_defect(out.vector, M) > tol)
    throw NumericError("propagate: state lost Hermiticity or trace");
  out.purity = sq / std::norm(tr);
  return out;
}

LiouvilleState purity_normalize(const LiouvilleState& s) {
  const double n = s.vector.norm();
  if (n == 0.0) throw DomainError("purity_normalize: zero vector");
  LiouvilleState out = s;
  out.vector *= 1.0 / n;
  out.normalized = true;
  return out;
}

namespace models {

OpenSystemModel spin_flip(double gamma_x) {
  const CMatrix sz = pauli('z');
  return OpenSystemModel(
      2, [sz](double w) { return (0.5 * w) * sz; }, {{pauli('x'), [gamma_x](double) { return gamma_x; }}},
      [sz](double) { return ModelDerivatives{0.5 * sz, {0.0}}; }, "spin-flip");
}

OpenSystemModel field_angle(double B, double dephasing) {
  const CMatrix sx = pauli('x');
  const CMatrix sz = pauli('z');
  return OpenSystemModel(
      2, [=](double th) { return B * (std::cos(th) * sx + std::sin(th) * sz); },
      {{sz, [dephasing](double) { return dephasing; }}},
      [=](double th) { return ModelDerivatives{B * (-std::sin(th) * sx + std::cos(th) * sz), {0.0}}; },
      "field-angle");
}

OpenSystemModel dephasing_rate() {
  return OpenSystemModel(
      2, [](double) { return CMatrix(2, 2); }, {{pauli('z'), [](double g) { return g; }}},
      [](double) { return ModelDerivatives{CMatrix(2, 2), {1.0}}; }, "dephasing-rate");
}

OpenSystemModel pumped_decay(double omega, double gamma) {
  const CMatrix lower{{0.0, 0.0}, {1.0, 0.0}};
  const CMatrix raise = lower.adjoint();
  const CMatrix h = (0.5 * omega) * pauli('z');
  return OpenSystemModel(
      2, [h](double) { return h; },
      {{lower, [gamma](double) { return gamma; }}, {raise, [](double p) { return p; }}},
      [](double) { return ModelDerivatives{CMatrix(2, 2), {0.0, 1.0}}; }, "pumped-decay");
}

LiouvilleState plus_state() { return make_pure_state(CVector{1.0, 1.0}); }

}  // namespace models

}  // namespace dqfi
