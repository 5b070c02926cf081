#include <cmath>
#include <random>

#include "doctest.h"
#include "dqfi/errors.hpp"
#include "dqfi/generator.hpp"
#include "dqfi/twolevel.hpp"
#include "test_util.hpp"

using namespace dqfi;
using dqfi::testing::max_diff;

namespace {

const cplx I(0.0, 1.0);

// i dU U^{-1} from a central difference of matrix exponentials, omega-derivative.
CMatrix fd_generator(double omega, double gamma, double t, double h = 1e-5) {
  const CMatrix up = matexp(testing::spin_flip_matrix(omega + h, gamma), t);
  const CMatrix dn = matexp(testing::spin_flip_matrix(omega - h, gamma), t);
  const CMatrix u = matexp(testing::spin_flip_matrix(omega, gamma), t);
  return I * ((1.0 / (2.0 * h)) * (up - dn)) * inverse(u);
}

// Closed-form spin-flip generator written with plain hyperbolic functions
// (valid away from the exceptional point, z != 0).
CMatrix closed_form(double omega, double gamma, double t) {
  const cplx O = std::sqrt(cplx(gamma * gamma - omega * omega));
  const cplx z = 2.0 * O * t;
  const cplx Q = (std::sinh(z) - z) / (z * z * z);
  const cplx C = (std::cosh(z) - 1.0) / (z * z);
  CMatrix x(4, 4);
  x(1, 1) = t + 4.0 * gamma * gamma * t * t * t * Q;
  x(2, 2) = -x(1, 1);
  x(1, 2) = -2.0 * gamma * t * t * C + 4.0 * I * omega * gamma * t * t * t * Q;
  x(2, 1) = 2.0 * gamma * t * t * C + 4.0 * I * omega * gamma * t * t * t * Q;
  return x;
}

double rel(const CMatrix& a, const CMatrix& b) { return max_diff(a, b) / std::max(1.0, b.max_abs()); }
double rel(const CVector& a, const CVector& b) { return max_diff(a, b) / std::max(1.0, b.max_abs()); }

const CMatrix& spin_dL() {
  static const CMatrix m = CMatrix::diagonal({0.0, -I, I, 0.0});
  return m;
}

}  // namespace

TEST_CASE("phi1 near zero and away from it") {
  CHECK(std::abs(phi1(0.0) - 1.0) < 1e-15);
  CHECK(std::abs(phi1(1e-10) - (1.0 + 5e-11)) < 1e-15);
  const cplx z(0.7, -1.3);
  CHECK(std::abs(phi1(z) - (std::exp(z) - 1.0) / z) < 1e-14);
}

TEST_CASE("route names round-trip") {
  for (Route r : {Route::Spectral, Route::Quadrature, Route::PropagatorFd, Route::EpJordan, Route::Analytic, Route::Frechet})
    CHECK(parse_route(route_name(r)) == r);
  CHECK_THROWS_AS(parse_route("simpson"), DomainError);
}

TEST_CASE("spectral generator matches the spin-flip closed form") {
  for (double gamma : {0.05, 0.5, 2.0}) {
    for (double t : {0.3, 1.0, 3.0}) {
      const CMatrix L = testing::spin_flip_matrix(1.0, gamma);
      const GeneratorPair g = generator_spectral(biorthogonal_spectrum(L), spin_dL(), t);
      CHECK(rel(g.xi, closed_form(1.0, gamma, t)) < 1e-8);
      CHECK(rel(g.xi, analytic_generator(make_params(1.0, gamma), t).xi) < 1e-8);
    }
  }
  const GeneratorPair g0 = generator_spectral(biorthogonal_spectrum(testing::spin_flip_matrix(1.0, 0.5)), spin_dL(), 0.0);
  CHECK(g0.xi.max_abs() < 1e-15);
}

TEST_CASE("generator without dissipation is Hermitian") {
  const CMatrix L = testing::spin_flip_matrix(1.0, 0.0);
  const GeneratorPair g = generator_spectral(biorthogonal_spectrum(L), spin_dL(), 2.0);
  CHECK(max_diff(g.xi, g.xi_dag) < 1e-12);
  CHECK(g.lambda_herm.max_abs() < 1e-12);
  // Unitary case: Xi = t diag(0, 1, -1, 0).
  CHECK(max_diff(g.xi, CMatrix::diagonal({0.0, 2.0, -2.0, 0.0})) < 1e-12);
}

TEST_CASE("quadrature, propagator difference and spectral agree") {
  std::mt19937_64 rng(11);
  for (double gamma : {0.3, 1.7}) {
    const double t = 1.3;
    const CMatrix L = testing::spin_flip_matrix(1.0, gamma);
    const GeneratorPair sp = generator_spectral(biorthogonal_spectrum(L), spin_dL(), t);
    CHECK(rel(generator_quadrature(L, spin_dL(), t).xi, sp.xi) < 1e-7);
    CHECK(rel(generator_propagator_fd(models::spin_flip(gamma), 1.0, t).xi, sp.xi) < 1e-5);
    CHECK(rel(fd_generator(1.0, gamma, t), sp.xi) < 1e-5);
  }
  // Generic three-level Lindbladian with a random derivative direction.
  const CMatrix L = liouvillian_from_parts(testing::random_hermitian(3, rng), {testing::random_matrix(3, 3, rng)}, {0.4});
  const CMatrix dL = liouvillian_from_parts(testing::random_hermitian(3, rng), {}, {});
  const GeneratorPair sp = generator_spectral(biorthogonal_spectrum(L), dL, 0.8);
  CHECK(rel(generator_quadrature(L, dL, 0.8).xi, sp.xi) < 1e-7);
}

TEST_CASE("short-time generator is i t dL") {
  const CMatrix L = testing::spin_flip_matrix(1.0, 0.5);
  const double t = 1e-4;
  const GeneratorPair g = generator_quadrature(L, spin_dL(), t);
  CHECK(max_diff(g.xi, (I * t) * spin_dL()) < 1e-7);
}

TEST_CASE("spectral route refuses the exceptional point") {
  const CMatrix L = testing::spin_flip_matrix(1.0, 1.0);
  CHECK_THROWS_AS(generator_spectral(biorthogonal_spectrum(L), spin_dL(), 1.0), IllConditionedError);
  CHECK(select_route(biorthogonal_spectrum(L)) == Route::Quadrature);
  CHECK(select_route(biorthogonal_spectrum(testing::spin_flip_matrix(1.0, 0.5))) == Route::Spectral);
}

TEST_CASE("generator at the exceptional point") {
  const CMatrix L = testing::spin_flip_matrix(1.0, 1.0);
  const BiorthogonalSpectrum s = biorthogonal_spectrum(L);
  const auto clusters = detect_eps(s);
  REQUIRE(clusters.size() == 1);
  const JordanBasis jb = jordan_basis(s, {jordan_chain(L, clusters[0])});
  for (double t : {0.5, 1.0, 2.0}) {
    // Limit of the closed form: Q -> 1/6, C -> 1/2.
    CMatrix expect(4, 4);
    expect(1, 1) = t + 2.0 * t * t * t / 3.0;
    expect(2, 2) = -expect(1, 1);
    expect(1, 2) = -t * t + 2.0 * I * t * t * t / 3.0;
    expect(2, 1) = t * t + 2.0 * I * t * t * t / 3.0;
    CHECK(rel(generator_quadrature(L, spin_dL(), t).xi, expect) < 1e-8);
    CHECK(rel(generator_ep(jb, spin_dL(), t).xi, expect) < 1e-6);
    CHECK(rel(fd_generator(1.0, 1.0, t), expect) < 1e-5);
    CHECK(rel(analytic_generator(make_params(1.0, 1.0), t).xi, expect) < 1e-12);
  }
  // At t = 1 the diagonal entry is 5/3.
  CHECK(analytic_generator(make_params(1.0, 1.0), 1.0).xi(1, 1).real() == doctest::Approx(5.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("Jordan route reduces to the spectral route without defects") {
  const CMatrix L = testing::spin_flip_matrix(1.0, 0.4);
  const BiorthogonalSpectrum s = biorthogonal_spectrum(L);
  const GeneratorPair ep = generator_ep(jordan_basis(s, {}), spin_dL(), 1.7);
  CHECK(rel(ep.xi, generator_spectral(s, spin_dL(), 1.7).xi) < 1e-10);
}

TEST_CASE("Hermitian split and the variance bound") {
  std::mt19937_64 rng(5);
  const CMatrix L = testing::spin_flip_matrix(1.0, 0.7);
  const GeneratorPair g = generator_spectral(biorthogonal_spectrum(L), spin_dL(), 1.5);
  CHECK(max_diff(g.theta_herm, g.theta_herm.adjoint()) < 1e-14);
  CHECK(max_diff(g.lambda_herm, g.lambda_herm.adjoint()) < 1e-14);
  CHECK(max_diff(g.theta_herm - I * g.lambda_herm, g.xi) < 1e-14);
  CHECK(max_diff(g.xi_dag, g.xi.adjoint()) == 0.0);
  const double bound = dqfi_upper_bound(g);
  for (int k = 0; k < 50; ++k) {
    CVector r = testing::random_vector(4, rng);
    r *= 1.0 / r.norm();
    const CVector w = g.xi * r;
    const double var = 4.0 * (w.norm() * w.norm() - std::norm(inner(r, w)));
    CHECK(var <= bound * (1.0 + 1e-12));
  }
}

TEST_CASE("generator action routes agree") {
  const CVector rho0 = models::plus_state().vector;
  for (double gamma : {0.05, 0.5, 2.0}) {
    const CMatrix L = testing::spin_flip_matrix(1.0, gamma);
    for (double t : {0.5, 4.0}) {
      const CVector ref = generator_action_frechet(L, spin_dL(), rho0, t);
      const CVector via_matrix = generator_spectral(biorthogonal_spectrum(L), spin_dL(), t).xi * (matexp(L, t) * rho0);
      CHECK(rel(generator_action_spectral(biorthogonal_spectrum(L), spin_dL(), rho0, t), ref) < 1e-9);
      CHECK(rel(generator_action_quadrature(L, spin_dL(), rho0, t), ref) < 1e-8);
      CHECK(rel(via_matrix, ref) < 1e-7);
    }
  }
  // Large t: the action stays bounded although Xi itself grows.
  const CMatrix L = testing::spin_flip_matrix(1.0, 2.0);
  const CVector w = generator_action_spectral(biorthogonal_spectrum(L), spin_dL(), rho0, 40.0);
  CHECK(w.all_finite());
  CHECK(w.max_abs() < 1.0);
}

TEST_CASE("quadrature overflow guard and input checks") {
  const CMatrix L = testing::spin_flip_matrix(1.0, 2.0);
  CHECK_THROWS_AS(generator_quadrature(L, spin_dL(), 200.0), OverflowError);
  CHECK_THROWS_AS(generator_quadrature(L, spin_dL(), -1.0), DomainError);
}

TEST_CASE("split of the spin-flip generator") {
  const GeneratorPair g = generator_spectral(biorthogonal_spectrum(testing::spin_flip_matrix(1.0, 0.5)), spin_dL(), 1.0);
  const cplx x22 = g.xi(1, 1);
  CHECK(max_diff(g.theta_herm, CMatrix::diagonal({0.0, x22.real(), -x22.real(), 0.0})) < 1e-12);
  CHECK(std::abs(x22.imag()) < 1e-14);

  GeneratorPair herm;
  herm.xi = CMatrix{{1.0, cplx(0.0, 2.0)}, {cplx(0.0, -2.0), 3.0}};
  CHECK(hermitian_split(herm).lambda_herm.max_abs() == 0.0);
  GeneratorPair anti;
  anti.xi = CMatrix{{cplx(0.0, 1.0), 2.0}, {-2.0, 0.0}};
  CHECK(hermitian_split(anti).theta_herm.max_abs() == 0.0);
  GeneratorPair zero;
  zero.xi = CMatrix(3, 3);
  CHECK(dqfi_upper_bound(hermitian_split(zero)) == 0.0);
  // Hermitian generator: the bound is the squared spread of Theta.
  CHECK(dqfi_upper_bound(hermitian_split(herm)) == doctest::Approx(std::pow(2.0 * std::sqrt(5.0), 2)));
}

TEST_CASE("diagonal part grows linearly in time") {
  std::mt19937_64 rng(23);
  const CMatrix L = liouvillian_from_parts(testing::random_hermitian(2, rng), {testing::random_matrix(2, 2, rng)}, {0.5});
  const CMatrix dL = liouvillian_from_parts(testing::random_hermitian(2, rng), {}, {});
  const BiorthogonalSpectrum s = biorthogonal_spectrum(L);
  const GeneratorPair a = generator_spectral(s, dL, 0.8);
  const GeneratorPair b = generator_spectral(s, dL, 1.6);
  for (std::size_t n = 0; n < s.size(); ++n) {
    const cplx pa = inner(s.left[n], a.xi * s.right[n]);
    const cplx pb = inner(s.left[n], b.xi * s.right[n]);
    CHECK(std::abs(pb - 2.0 * pa) < 1e-10);
    CHECK(std::abs(pa - I * 0.8 * inner(s.left[n], dL * s.right[n])) < 1e-10);
  }
}

TEST_CASE("off-diagonal time profiles follow the eigenvalue gaps") {
  // Closed system: pure-imaginary gaps give bounded, periodic coefficients.
  const BiorthogonalSpectrum c = biorthogonal_spectrum(testing::spin_flip_matrix(1.0, 0.0));
  const double period = 2.0 * M_PI / std::abs((c.values[2] - c.values[3]).imag());
  auto coeff = [](const BiorthogonalSpectrum& s, std::size_t n, std::size_t m, double t) {
    return std::abs(std::exp((s.values[n] - s.values[m]) * t) - 1.0);
  };
  for (double t : {0.3, 1.1, 2.9}) {
    CHECK(coeff(c, 2, 3, t) <= 2.0 + 1e-12);
    CHECK(coeff(c, 2, 3, t + period) == doctest::Approx(coeff(c, 2, 3, t)).epsilon(1e-9));
  }
  // Overdamped: negative real gap, monotone approach to 1.
  const BiorthogonalSpectrum o = biorthogonal_spectrum(testing::spin_flip_matrix(1.0, 2.0));
  REQUIRE(std::abs(o.values[1].imag()) < 1e-12);
  double prev = 0.0;
  for (double t = 0.1; t < 20.0; t += 0.1) {
    const double v = coeff(o, 1, 0, t);
    CHECK(v > prev);
    CHECK(v < 1.0);
    prev = v;
  }
}
