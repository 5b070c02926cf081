#include <cmath>
#include <random>

#include "doctest.h"
#include "dqfi/errors.hpp"
#include "dqfi/spectral.hpp"
#include "test_util.hpp"

using namespace dqfi;
using dqfi::testing::max_diff;

namespace {

CMatrix completeness(const BiorthogonalSpectrum& s) {
  CMatrix sum(s.right[0].dim(), s.right[0].dim());
  for (std::size_t n = 0; n < s.size(); ++n) sum += outer(s.right[n], s.left[n]);
  return sum;
}

CMatrix random_liouvillian(std::size_t M, std::mt19937_64& rng) {
  return liouvillian_from_parts(testing::random_hermitian(M, rng),
                                {testing::random_matrix(M, M, rng), testing::random_matrix(M, M, rng)}, {0.3, 0.8});
}

}  // namespace

TEST_CASE("spin-flip spectrum below and above the exceptional point") {
  const BiorthogonalSpectrum s = biorthogonal_spectrum(build_liouvillian(models::spin_flip(0.5), 1.0));
  const double w = std::sqrt(0.75);
  REQUIRE(s.size() == 4);
  CHECK(std::abs(s.values[0]) < 1e-12);
  CHECK(std::abs(s.values[1] - cplx(-0.5, -w)) < 1e-12);
  CHECK(std::abs(s.values[2] - cplx(-0.5, w)) < 1e-12);
  CHECK(std::abs(s.values[3] + 1.0) < 1e-12);
  const double r2 = 1.0 / std::sqrt(2.0);
  CHECK(max_diff(s.right[0], CVector{r2, 0.0, 0.0, r2}) < 1e-12);
  CHECK_FALSE(s.ill_conditioned);
  CHECK(s.x(1) == doctest::Approx(-0.5));
  CHECK(s.beta(2, 1) == doctest::Approx(2 * w));
  CHECK(s.upsilon(3, 0) == doctest::Approx(-1.0));

  const BiorthogonalSpectrum a = biorthogonal_spectrum(build_liouvillian(models::spin_flip(2.0), 1.0));
  const double r3 = std::sqrt(3.0);
  CHECK(std::abs(a.values[1] - (-2.0 + r3)) < 1e-12);
  CHECK(std::abs(a.values[2] - (-2.0 - r3)) < 1e-12);
  CHECK(std::abs(a.values[3] + 4.0) < 1e-12);
  for (cplx z : a.values) CHECK(std::abs(z.imag()) < 1e-12);
}

TEST_CASE("closed system: left and right vectors coincide") {
  const BiorthogonalSpectrum s = biorthogonal_spectrum(build_liouvillian(models::spin_flip(0.0), 1.0));
  for (std::size_t n = 0; n < s.size(); ++n) {
    CHECK(max_diff(s.left[n], s.right[n]) < 1e-12);
    for (std::size_t m = 0; m < s.size(); ++m)
      CHECK(std::abs(inner(s.right[n], s.right[m]) - (n == m ? 1.0 : 0.0)) < 1e-12);
  }
}

TEST_CASE("biorthonormality, completeness, reconstruction on random models") {
  std::mt19937_64 rng(12);
  for (std::size_t M : {2u, 3u}) {
    for (int k = 0; k < 10; ++k) {
      const CMatrix L = random_liouvillian(M, rng);
      const BiorthogonalSpectrum s = biorthogonal_spectrum(LiouvillianMatrix{L, 0.0});
      const std::size_t n = s.size();
      for (std::size_t a = 0; a < n; ++a) {
        CHECK(std::abs(s.right[a].norm() - 1.0) < 1e-12);
        for (std::size_t b = 0; b < n; ++b)
          CHECK(std::abs(inner(s.left[a], s.right[b]) - (a == b ? 1.0 : 0.0)) < 1e-9);
      }
      CHECK(max_diff(completeness(s), CMatrix::identity(n)) < 1e-8);
      CMatrix rec(n, n);
      for (std::size_t a = 0; a < n; ++a) rec += s.values[a] * outer(s.right[a], s.left[a]);
      CHECK(max_diff(rec, L) < 1e-7);

      // <phi_m|phi_n> (L_n + L_m^*) = 2 <phi_m|K|phi_n>, K = (L + L^dag)/2.
      const CMatrix K = 0.5 * (L + L.adjoint());
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
          if (a == b) continue;
          const cplx lhs = inner(s.right[b], s.right[a]) * (s.values[a] + std::conj(s.values[b]));
          CHECK(std::abs(lhs - 2.0 * inner(s.right[b], K * s.right[a])) < 1e-8);
        }
      for (std::size_t a = 1; a < n; ++a) {
        CHECK(s.x(a) <= s.x(a - 1) + 1e-9);
      }
    }
  }
}

TEST_CASE("detect_eps") {
  const BiorthogonalSpectrum ep = biorthogonal_spectrum(build_liouvillian(models::spin_flip(1.0), 1.0));
  CHECK(ep.ill_conditioned);
  const auto clusters = detect_eps(ep);
  REQUIRE(clusters.size() == 1);
  CHECK(clusters[0].order == 2);
  CHECK(std::abs(clusters[0].eigenvalue + 1.0) < 1e-9);
  CHECK(clusters[0].coalescence > 0.99);

  CHECK(detect_eps(biorthogonal_spectrum(build_liouvillian(models::spin_flip(0.5), 1.0))).empty());
  CHECK(detect_eps(biorthogonal_spectrum(CMatrix::diagonal({0.0, 0.0, -1.0, -2.0}))).empty());
}

TEST_CASE("jordan_chain") {
  const CMatrix L = testing::spin_flip_matrix(1.0, 1.0);
  const auto clusters = detect_eps(biorthogonal_spectrum(L));
  REQUIRE(clusters.size() == 1);
  const EpCluster c = jordan_chain(L, clusters[0]);
  REQUIRE(c.jordan_chain.size() == 2);
  CMatrix A = L;
  for (std::size_t i = 0; i < 4; ++i) A(i, i) += 1.0;
  CHECK((A * c.jordan_chain[0]).norm() < 1e-7);
  CHECK((A * c.jordan_chain[1] - c.jordan_chain[0]).norm() < 1e-7);
  // (L + I)^2 annihilates the chain; (L + I) has rank 3 on the 4x4 matrix.
  CHECK((A * A * c.jordan_chain[1]).norm() < 1e-7);
  CHECK(angle_sine(c.jordan_chain[0], c.jordan_chain[1]) > 0.5);

  const JordanBasis jb = jordan_basis(biorthogonal_spectrum(L), {c});
  CHECK(max_diff(jb.right * jb.left.adjoint(), CMatrix::identity(4)) < 1e-7);
  CHECK(jb.block_sizes.size() == 3);

  const CMatrix J{{0.0, 1.0}, {0.0, 0.0}};
  EpCluster jc;
  jc.members = {0, 1};
  jc.order = 2;
  jc.eigenvalue = 0.0;
  const EpCluster cj = jordan_chain(J, jc);
  CHECK(max_diff(cj.jordan_chain[0], CVector{1.0, 0.0}) < 1e-12);
  CHECK(max_diff(cj.jordan_chain[1], CVector{0.0, 1.0}) < 1e-12);

  CHECK_THROWS_AS(jordan_chain(CMatrix::diagonal({0.0, 0.0, 1.0}), jc), DomainError);
  EpCluster big = jc;
  big.order = 3;
  CHECK_THROWS_AS(jordan_chain(J, big), UnsupportedError);
}

TEST_CASE("splitting_susceptibility") {
  CHECK(splitting_susceptibility(1.0, std::sqrt(2.0)).chi == doctest::Approx(2.0));
  CHECK(std::isinf(splitting_susceptibility(1.0, 1.0).chi));
  const Splitting z = splitting_susceptibility(1.0, 0.0);
  CHECK(std::abs(z.splitting - cplx(0.0, 2.0)) < 1e-15);
  CHECK(z.chi == doctest::Approx(2.0));
}

TEST_CASE("pi_eigenmatrix") {
  const CMatrix L = testing::spin_flip_matrix(1.0, 0.5);
  const BiorthogonalSpectrum s = biorthogonal_spectrum(L);
  const PiEigenmatrix p11 = pi_eigenmatrix(s, 0, 0);
  CHECK(std::abs(p11.eigenvalue) < 1e-12);
  CHECK(max_diff(p11.matrix * p11.matrix, p11.matrix) < 1e-12);
  // L_3 - L_4 in the paper's labelling is -2 Omega with Omega = i sqrt(3)/2.
  const PiEigenmatrix p = pi_eigenmatrix(s, 1, 2);
  CHECK(std::abs(p.eigenvalue - cplx(0.0, -std::sqrt(3.0))) < 1e-12);

  std::mt19937_64 rng(31);
  for (int k = 0; k < 5; ++k) {
    const CMatrix Lr = random_liouvillian(2, rng);
    const BiorthogonalSpectrum sr = biorthogonal_spectrum(Lr);
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t m = 0; m < 4; ++m) {
        const PiEigenmatrix e = pi_eigenmatrix(sr, n, m);
        CHECK(max_diff(Lr * e.matrix - e.matrix * Lr, e.eigenvalue * e.matrix) < 1e-8);
      }
  }
  CHECK_THROWS_AS(pi_eigenmatrix(s, 4, 0), DomainError);
}

TEST_CASE("eigenvalue curves: conjugate pair, coalescence, real pair") {
  for (double g : {0.2, 0.9}) {
    const BiorthogonalSpectrum s = biorthogonal_spectrum(testing::spin_flip_matrix(1.0, g));
    CHECK(std::abs(s.values[1] - std::conj(s.values[2])) < 1e-12);
    CHECK(std::abs(s.values[1].imag()) > 1e-3);
  }
  const BiorthogonalSpectrum s = biorthogonal_spectrum(testing::spin_flip_matrix(1.0, 1.5));
  for (cplx z : s.values) CHECK(std::abs(z.imag()) < 1e-12);
}
