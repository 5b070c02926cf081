#include <cmath>

#include "doctest.h"
#include "dqfi/errors.hpp"
#include "dqfi/twolevel.hpp"
#include "test_util.hpp"

using namespace dqfi;
using dqfi::testing::max_diff;

namespace {

const cplx I(0.0, 1.0);

// Propagated (unnormalized) spin-flip state from the plus state.
CVector evolve(double omega, double gamma, double t) {
  return matexp(testing::spin_flip_matrix(omega, gamma), t) * models::plus_state().vector;
}

// 4 [ ||w||^2 - |<r|w>|^2 ] with r the purity-normalized state and w = i dr
// built from the unnormalized derivative, by central differences.
double fd_dqfi(double gamma, double t, double h = 1e-5) {
  const CVector v = evolve(1.0, gamma, t);
  const double n = v.norm();
  CVector w = evolve(1.0 + h, gamma, t);
  w -= evolve(1.0 - h, gamma, t);
  w *= I / (2.0 * h * n);
  CVector r = v;
  r *= 1.0 / n;
  return 4.0 * (w.norm() * w.norm() - std::norm(inner(r, w)));
}

// Conventional QFI from the spectral decomposition of rho and a central difference.
double fd_cqfi(double gamma, double t, double h = 1e-5) {
  const CMatrix rho = devectorize(evolve(1.0, gamma, t), 2);
  const CMatrix d = (1.0 / (2.0 * h)) * (devectorize(evolve(1.0 + h, gamma, t), 2) - devectorize(evolve(1.0 - h, gamma, t), 2));
  const EigResult e = eig_hermitian(rho);
  double f = 0.0;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      const double p = e.values[i].real() + e.values[j].real();
      if (p <= 1e-12) continue;
      const cplx m = inner(e.right_vectors.column(i), d * e.right_vectors.column(j));
      f += 2.0 * std::norm(m) / p;
    }
  return f;
}

}  // namespace

TEST_CASE("parameters") {
  CHECK(make_params(1.0, 1.0).is_lep);
  CHECK(std::abs(make_params(1.0, 0.6).Omega - cplx(0.0, 0.8)) < 1e-15);
  CHECK(std::abs(make_params(1.0, 1.25).Omega - 0.75) < 1e-15);
  CHECK_THROWS_AS(make_params(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(make_params(1.0, -0.1), DomainError);
}

TEST_CASE("closed-form spectrum matches the numerical pipeline") {
  for (double gamma : {0.0, 0.3, 0.9, 1.4, 3.0}) {
    const BiorthogonalSpectrum a = analytic_spectrum(make_params(1.0, gamma));
    const CMatrix L = testing::spin_flip_matrix(1.0, gamma);
    const BiorthogonalSpectrum n = biorthogonal_spectrum(L);
    REQUIRE(a.size() == 4);
    for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(a.values[k] - n.values[k]) < 1e-12);
    CMatrix recon(4, 4), ident(4, 4);
    for (std::size_t k = 0; k < 4; ++k) {
      recon += a.values[k] * outer(a.right[k], a.left[k]);
      ident += outer(a.right[k], a.left[k]);
      CHECK(std::abs(a.right[k].norm() - 1.0) < 1e-12);
    }
    CHECK(max_diff(recon, L) < 1e-12);
    CHECK(max_diff(ident, CMatrix::identity(4)) < 1e-12);
    CHECK_FALSE(a.ill_conditioned);
  }
  const BiorthogonalSpectrum ep = analytic_spectrum(make_params(1.0, 1.0));
  CHECK(ep.ill_conditioned);
  CHECK(std::isinf(ep.condition));
}

TEST_CASE("closed-form dual vectors") {
  for (double gamma : {0.4, 2.5}) {
    const TwoLevelParams p = make_params(1.0, gamma);
    const BiorthogonalSpectrum s = analytic_spectrum(p);
    const cplx O = p.Omega;
    const cplx Oc = std::conj(O);
    const double a1 = 1.0 / std::sqrt(std::norm(O + I) + gamma * gamma);
    const double a2 = 1.0 / std::sqrt(std::norm(O - I) + gamma * gamma);
    const cplx b1 = 1.0 / (a1 * ((Oc - I) * (Oc - I) + gamma * gamma));
    const cplx b2 = 1.0 / (a2 * ((Oc + I) * (Oc + I) + gamma * gamma));
    const CVector chi3{0.0, b1 * (I - Oc), b1 * gamma, 0.0};
    const CVector chi4{0.0, b2 * (I + Oc), b2 * gamma, 0.0};
    const CVector phi3{0.0, a1 * (-I - O), a1 * gamma, 0.0};
    for (std::size_t k = 0; k < 4; ++k) {
      if (std::abs(s.values[k] - (-gamma - O)) < 1e-12) {
        CHECK(max_diff(s.left[k], chi3) < 1e-12);
        CHECK(max_diff(s.right[k], phi3) < 1e-12);
      }
      if (std::abs(s.values[k] - (-gamma + O)) < 1e-12) CHECK(max_diff(s.left[k], chi4) < 1e-12);
    }
  }
}

TEST_CASE("coherence and its derivative") {
  for (double gamma : {0.0, 0.05, 0.5, 1.0, 2.0}) {
    for (double t : {0.0, 0.2, 1.0, 5.0}) {
      const TwoLevelParams p = make_params(1.0, gamma);
      const AnalyticState a = analytic_state(p, t);
      const CVector v = evolve(1.0, gamma, t);
      CHECK(std::abs(a.wp - v[1]) < 1e-12);
      CHECK(max_diff(a.state.vector, (1.0 / v.norm()) * v) < 1e-12);
      CHECK(a.state.purity == doctest::Approx(v.norm() * v.norm()).epsilon(1e-12));

      if (p.is_lep) continue;
      const double h = 1e-6;
      const cplx fd = (analytic_state(make_params(1.0 + h, gamma), t).wp - analytic_state(make_params(1.0 - h, gamma), t).wp) / (2.0 * h);
      CHECK(std::abs(analytic_wp_derivative(p, t) - fd) < 1e-8);
    }
  }
  // The derivative stays continuous through the exceptional point.
  const cplx at = analytic_wp_derivative(make_params(1.0, 1.0), 1.5);
  CHECK(std::abs(analytic_wp_derivative(make_params(1.0, 1.0 + 1e-7), 1.5) - at) < 1e-6);
  CHECK(std::abs(analytic_wp_derivative(make_params(1.0, 1.0 - 1e-7), 1.5) - at) < 1e-6);
}

TEST_CASE("closed-form DQFI against finite differences") {
  for (double gamma : {0.05, 0.5, 2.0}) {
    for (double t : {0.5, 1.0, 2.0, 6.0}) {
      const double f = analytic_dqfi(make_params(1.0, gamma), t);
      CHECK(f == doctest::Approx(fd_dqfi(gamma, t)).epsilon(1e-6));
      CHECK(f >= 0.0);
    }
  }
  CHECK(analytic_dqfi(make_params(1.0, 0.5), 0.5) == doctest::Approx(0.328709426).epsilon(1e-8));
  CHECK(analytic_dqfi(make_params(1.0, 0.5), 1.0) == doctest::Approx(1.12255365).epsilon(1e-8));
  CHECK(analytic_dqfi(make_params(1.0, 0.5), 2.0) == doctest::Approx(4.81692700).epsilon(1e-8));
  CHECK(analytic_dqfi(make_params(1.0, 0.05), 5.0) == doctest::Approx(39.9056584).epsilon(1e-8));
  CHECK(analytic_dqfi(make_params(1.0, 2.0), 1.0) == doctest::Approx(0.23547266).epsilon(1e-8));
  CHECK(analytic_dqfi(make_params(1.0, 0.0), 0.0) == 0.0);
}

TEST_CASE("DQFI at the exceptional point") {
  const TwoLevelParams lep = make_params(1.0, 1.0);
  for (double t : {0.3, 1.0, 3.0}) {
    const double f = analytic_dqfi(lep, t);
    CHECK(f == doctest::Approx(fd_dqfi(1.0, t)).epsilon(1e-6));
    CHECK(f == doctest::Approx(analytic_dqfi(make_params(1.0, 1.0 + 1e-6), t)).epsilon(1e-5));
  }
  CHECK(analytic_dqfi(lep, 1.0) == doctest::Approx(0.6132369).epsilon(1e-6));
}

TEST_CASE("closed-form CQFI against the SLD sum") {
  for (double gamma : {0.05, 0.5, 1.0, 2.0}) {
    for (double t : {0.5, 1.0, 3.0}) {
      CHECK(analytic_cqfi(make_params(1.0, gamma), t) == doctest::Approx(fd_cqfi(gamma, t)).epsilon(1e-6));
    }
  }
  // Pure initial state: F = 4 |dwp|^2, and t^2 for unitary evolution.
  CHECK(analytic_cqfi(make_params(1.0, 0.0), 2.0) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(analytic_cqfi(make_params(1.0, 0.5), 0.0) == 0.0);
}

TEST_CASE("figure grids") {
  CHECK(default_grid(Figure::Fig1).points == 251);
  CHECK(default_grid(Figure::Fig2).values().back() == 200.0);
  CHECK(default_grid(Figure::Fig3).values().size() == 4001);
  CHECK_THROWS_AS((FigureGrid{1.0, 0.0, 10}.values()), DomainError);
  CHECK(figure_rates().size() == 5);
}

TEST_CASE("figure 1 eigenvalue curves") {
  const auto curves = figure_data(Figure::Fig1, default_grid(Figure::Fig1));
  REQUIRE(curves.size() == 8);
  // Index 100 is gamma_x = 1: L3 and L4 coalesce at -1.
  for (const auto& c : curves) {
    if (c.eigen_index < 3) continue;
    CHECK(c.grid[100] == doctest::Approx(1.0));
    CHECK(c.values[100] == doctest::Approx(c.label == CurveLabel::EigReal ? -1.0 : 0.0));
  }
  for (const auto& c : curves) {
    if (c.eigen_index == 2 && c.label == CurveLabel::EigReal) CHECK(c.values[250] == doctest::Approx(-5.0));
    if (c.eigen_index == 1) CHECK(c.values[42] == 0.0);
  }
}

TEST_CASE("figure 2 and 3 curve shapes") {
  const FigureGrid grid = default_grid(Figure::Fig2);
  const auto fig2 = figure_data(Figure::Fig2, grid);
  REQUIRE(fig2.size() == 5);
  for (const auto& c : fig2) {
    double peak = 0.0;
    for (double v : c.values) peak = std::max(peak, v);
    const std::size_t maxima = count_local_maxima(c.values, 1e-3 * peak);
    if (c.gamma_x < 1.0) CHECK(maxima >= 2);
    if (c.gamma_x > 1.0) CHECK(maxima == 1);
    CHECK(c.values.back() < 0.01 * peak);
  }
  const auto fig3 = figure_data(Figure::Fig3, default_grid(Figure::Fig3));
  REQUIRE(fig3.size() == 10);
  for (std::size_t k = 0; k < fig3.size(); k += 2) {
    const auto& d = fig3[k];
    const auto& c = fig3[k + 1];
    CHECK(d.label == CurveLabel::Dqfi);
    CHECK(c.label == CurveLabel::Cqfi);
    double pd = 0.0, pc = 0.0;
    for (std::size_t i = 0; i < d.values.size(); ++i) {
      pd = std::max(pd, d.values[i]);
      pc = std::max(pc, c.values[i]);
    }
    CHECK(count_local_extrema(d.values, 1e-3 * pd) % 2 == count_local_extrema(c.values, 1e-3 * pc) % 2);
  }
}

TEST_CASE("extremum counting") {
  CHECK(count_local_maxima({0.0, 1.0, 0.0, 2.0, 0.0}, 0.5) == 2);
  CHECK(count_local_maxima({0.0, 1.0, 0.0, 2.0, 0.0}, 1.5) == 1);
  CHECK(count_local_extrema({0.0, 1.0, 0.0, 2.0, 0.0}, 0.5) == 3);
  CHECK(count_local_maxima({}, 0.0) == 0);
}
