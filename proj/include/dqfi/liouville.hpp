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
#include <string>
#include <vector>

#include "dqfi/linalg.hpp"

namespace dqfi {

/// Parameter derivatives of the Hamiltonian and of each jump rate.
struct ModelDerivatives {
  CMatrix d_hamiltonian;
  std::vector<double> d_rates;
};

struct JumpChannel {
  CMatrix op;
  std::function<double(double)> rate;
};

/// Lindblad model depending on a single real parameter theta.
class OpenSystemModel {
 public:
  using HamiltonianFn = std::function<CMatrix(double)>;
  using DerivativeFn = std::function<ModelDerivatives(double)>;

  OpenSystemModel(std::size_t dim, HamiltonianFn hamiltonian, std::vector<JumpChannel> jumps,
                  DerivativeFn derivatives = {}, std::string name = {});

  std::size_t dim() const { return dim_; }
  const std::string& name() const { return name_; }
  std::size_t jump_count() const { return jumps_.size(); }
  const CMatrix& jump_op(std::size_t k) const { return jumps_.at(k).op; }

  /// Throws DomainError unless the result is M x M and Hermitian within 1e-12.
  CMatrix hamiltonian(double theta) const;
  /// Throws DomainError on a negative or non-finite rate.
  double rate(std::size_t k, double theta) const;

  bool has_analytic_derivatives() const { return static_cast<bool>(derivatives_); }
  /// Throws DomainError when no analytic derivatives were supplied.
  ModelDerivatives derivatives(double theta) const;

 private:
  std::size_t dim_;
  HamiltonianFn hamiltonian_;
  std::vector<JumpChannel> jumps_;
  DerivativeFn derivatives_;
  std::string name_;
};

/// Liouvillian with row-major vectorization: index i*M + j holds rho(i,j).
struct LiouvillianMatrix {
  static constexpr const char* kConvention = "row-major-stacking";
  CMatrix matrix;
  double theta = 0.0;
};

struct LiouvilleState {
  CVector vector;
  bool normalized = false;
  double purity = 1.0;  // Tr[rho^2] of the trace-one state
};

CVector vectorize(const CMatrix& rho);
/// Throws DomainError unless v has M^2 entries.
CMatrix devectorize(const CVector& v, std::size_t M);
/// M such that M*M == n. Throws DomainError otherwise.
std::size_t liouville_dim(std::size_t n);

/// Wraps a density matrix. Throws DomainError unless rho is Hermitian with unit trace.
LiouvilleState make_state(const CMatrix& rho);
/// Pure state |psi><psi| from a (not necessarily normalized) ket.
LiouvilleState make_pure_state(const CVector& psi);

/// -i(H x I - I x H^T) + sum_k g_k (G_k x G_k^* - 1/2 (G_k^dag G_k x I + I x G_k^T G_k^*)).
CMatrix liouvillian_from_parts(const CMatrix& h, const std::vector<CMatrix>& ops,
                               const std::vector<double>& rates);

LiouvillianMatrix build_liouvillian(const OpenSystemModel& model, double theta);

enum class DerivativeMode { Analytic, CentralFd };

/// Default finite-difference step 1e-6 max(1, |theta|).
double default_fd_step(double theta);

/// dL/dtheta. h <= 0 selects the default step. Throws DomainError when
/// analytic mode is requested on a model without derivatives.
CMatrix d_liouvillian(const OpenSystemModel& model, double theta, DerivativeMode mode, double h = 0.0);
/// Analytic when available, central difference otherwise.
CMatrix d_liouvillian(const OpenSystemModel& model, double theta);

/// e^{L t} rho0. Throws NumericError if the result loses Hermiticity or trace.
LiouvilleState propagate(const LiouvillianMatrix& L, const LiouvilleState& rho0, double t);

/// Divides by sqrt(Tr[rho^2]). Throws DomainError on a zero vector.
LiouvilleState purity_normalize(const LiouvilleState& s);

namespace models {

/// H = theta sigma_z / 2 with a sigma_x jump at rate gamma_x (theta = omega).
OpenSystemModel spin_flip(double gamma_x);

/// H = B (cos theta sigma_x + sin theta sigma_z), optional sigma_z dephasing.
OpenSystemModel field_angle(double B, double dephasing = 0.0);

/// H = 0 with a sigma_z jump at rate theta: L(theta) = theta L_base.
OpenSystemModel dephasing_rate();

/// H = omega sigma_z / 2, decay sigma_- at rate gamma, pumping sigma_+ at rate theta.
OpenSystemModel pumped_decay(double omega, double gamma);

/// Initial state (|e> + |g>)/sqrt(2).
LiouvilleState plus_state();

}  // namespace models

}  // namespace dqfi
