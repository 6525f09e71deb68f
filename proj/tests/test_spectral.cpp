#include "doctest.h"

#include <cmath>

#include "indexlab/spectral.hpp"

using namespace indexlab;

namespace {
const double pi = std::acos(-1.0);
}

TEST_CASE("circle spectrum: symmetry, smallest eigenvalue, theta oracle") {
  auto half = circle_dirac(0.5).levels(10);
  for (std::size_t i = 0; i + 1 < half.size(); i += 2) CHECK(half[i].lambda == -half[i + 1].lambda);
  double lmin = circle_dirac(0.25).smallest_nonzero();
  CHECK(lmin == 0.25);
  for (double a : {0.25, 0.1, 0.5}) {
    auto h = heat_trace(circle_dirac(a), 1.0);
    CHECK(std::abs(h.value.real() - circle_theta_oracle(a, 1.0)) < 1e-12);
    CHECK(h.truncation_bound < 1e-12);
  }
  auto h = heat_trace(circle_dirac(0.3), 0.01);
  CHECK(std::abs(h.value.real() - circle_theta_oracle(0.3, 0.01)) < 1e-12 * h.value.real());
  CHECK_THROWS_AS(heat_trace(circle_dirac(0.3), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(heat_trace(circle_dirac(0.3), 1.0, 0, true), std::invalid_argument);
}

TEST_CASE("truncation: doubling the cutoff changes sums by < 1e-12") {
  auto m = circle_dirac(0.25);
  for (double t : {0.01, 0.3, 2.0}) {
    double c = m.cutoff_for(t, 1);
    CDouble a = 0, b = 0;
    for (const auto& l : m.levels(c)) a += l.character(pi / 3) * (l.lambda * std::exp(-t * l.lambda * l.lambda));
    for (const auto& l : m.levels(2 * c)) b += l.character(pi / 3) * (l.lambda * std::exp(-t * l.lambda * l.lambda));
    CHECK(std::abs(a - b) < 1e-12);
  }
  auto s = sphere_dirac(1);
  double c = s.cutoff_for(0.05, 0);
  CHECK(s.tail_bound(0.05, c, 0) <= 1e-14);
}

TEST_CASE("equivariant circle trace decays at small t, limit at large t") {
  auto m = circle_dirac(0.25);
  double prev = 1e300;
  for (double t : {0.2, 0.05, 0.01, 0.003}) {
    double v = std::abs(heat_trace(m, t, pi / 3).value);
    CHECK(v < prev);
    prev = v;
  }
  CHECK(prev < 1e-12);
  // zero-mode count at large t
  CHECK(std::abs(heat_trace(circle_dirac(0.0), 200.0).value - 1.0) < 1e-12);
  CHECK(circle_dirac(0.0).kernel_dimension() == 1);
  CHECK(std::abs(heat_trace(sphere_dirac(3), 100.0, 0, true).value - 3.0) < 1e-12);
}

TEST_CASE("flat torus: signed trace vanishes for all t") {
  for (auto [a1, a2] : {std::pair{0.0, 0.0}, std::pair{0.3, 0.1}})
    for (double t : {0.01, 0.1, 1.0, 10.0}) {
      auto h = heat_trace(flat_torus(a1, a2), t, 0, true);
      CHECK(std::abs(h.value) <= h.roundoff() + 1e-300);
      auto u = heat_trace(flat_torus(a1, a2), t);
      CHECK(u.value.real() > 0);
    }
  // Weyl law: unsigned trace ~ 2 * area/(4 pi t), area = 4 pi^2
  auto u = heat_trace(flat_torus(0.3, 0.1), 0.01);
  CHECK(u.value.real() == doctest::Approx(2 * 4 * pi * pi / (4 * pi * 0.01)).epsilon(1e-10));
  CHECK_THROWS_AS(heat_trace(flat_torus(0, 0), 1.0, 0.5), std::invalid_argument);
}

TEST_CASE("eta invariant of the circle") {
  auto e = eta_invariant(circle_dirac(0.25));
  CHECK(std::abs(e.value - CDouble(0.5)) < 1e-6);
  CHECK(std::abs(circle_eta_hurwitz(0.25) - 0.5) < 1e-12);
  CHECK(std::abs(hurwitz_zeta(2, 1) - pi * pi / 6) < 1e-12);
  CHECK(std::abs(hurwitz_zeta(-1, 0.25) - (-(0.25 * 0.25 - 0.25 + 1.0 / 6) / 2)) < 1e-12);
  auto h = eta_invariant(circle_dirac(0.5));
  CHECK(h.value == CDouble(0));
  for (double a : {0.1, 0.25, 0.4}) {
    auto x = eta_invariant(circle_dirac(a)), y = eta_invariant(circle_dirac(1 - a));
    CHECK(std::abs(x.value + y.value) < 1e-8);
    CHECK(std::abs(x.value.real() - circle_eta_hurwitz(a)) < 1e-6);
  }
  CHECK(eta_invariant(circle_dirac(0.0)).kernel_dimension == 1);
}

TEST_CASE("equivariant eta of the circle against the 50-digit series") {
  double alpha = 2 * pi / 5;
  auto e = eta_invariant(circle_dirac(0.25), alpha);
  CDouble oracle = circle_eta_series_oracle(0.25, alpha);
  CHECK(std::abs(e.value - oracle) < 1e-8);
  CDouble closed(1.0, 1.0 / std::tan(alpha / 2));
  CHECK(std::abs(oracle - closed) < 1e-12);
}

TEST_CASE("regularity exponents of the circle integrands") {
  auto ts = log_grid(1e-3, 1e-1, 9);
  for (double a : {0.1, 0.25, 0.5})
    for (double alpha : {0.0, pi / 3, pi / 2}) {
      auto m = circle_dirac(a);
      // large t in units of the spectral gap
      double gap = m.smallest_nonzero();
      auto tl = log_grid(1 / (gap * gap), 100 / (gap * gap), 9);
      std::vector<double> vs, fs, vl, fl;
      for (double t : ts) {
        auto s = eta_integrand(m, t, alpha);
        vs.push_back(std::abs(s.value));
        fs.push_back(s.roundoff() + s.truncation_bound);
      }
      for (double t : tl) {
        auto s = eta_integrand(m, t, alpha);
        vl.push_back(std::abs(s.value));
        fl.push_back(s.roundoff() + s.truncation_bound);
      }
      CHECK(small_t_exponent(ts, vs, fs).pass);
      auto large = large_t_exponent(tl, vl, fl, m.kernel_dimension() > 0);
      CHECK(large.pass);
    }
  auto tl = log_grid(1.0, 100.0, 9);
  std::vector<double> dummy(tl.size(), 1.0);
  auto skipped = large_t_exponent(tl, dummy, {}, true);
  CHECK(skipped.skipped);
  CHECK_THROWS_AS(fit_log_slope(log_grid(1, 10, 9), dummy), std::invalid_argument);
  // t^{1/2} and t^{-3/2} are recovered exactly
  std::vector<double> up, down;
  for (double t : tl) up.push_back(std::sqrt(t)), down.push_back(std::pow(t, -1.5));
  CHECK(fit_log_slope(tl, up).slope == doctest::Approx(0.5));
  CHECK(fit_log_slope(tl, down).slope == doctest::Approx(-1.5));
}

TEST_CASE("sphere table against the collocated Dirac operator") {
  for (int k : {0, 1, 2, -1, 3})
    for (double mu : {-1.5, -0.5, 0.5, 1.5, 2.5})
      for (int s : {1, -1}) {
        auto num = sphere_mode_eigenvalues(k, mu, s, 5, 40);
        auto tab = sphere_table_eigenvalues(k, mu, s, 5);
        REQUIRE(num.size() == tab.size());
        for (std::size_t i = 0; i < tab.size(); ++i) CHECK(num[i] == doctest::Approx(tab[i]).epsilon(1e-8).scale(1));
      }
  // table levels carry the weights of the collocated modes
  for (const auto& l : sphere_dirac(1).levels(4))
    CHECK(l.multiplicity() == static_cast<int>(std::lround(-2 * l.w0 + 1)));
}

TEST_CASE("sphere Lefschetz number: t-independence and the fixed-point sum") {
  for (int k : {0, 1, 2, 3, -2})
    for (double alpha : {pi, pi / 2, 2 * pi / 3}) {
      CDouble ref = sphere_fixed_point_sum(k, alpha);
      for (double t : {0.3, 1.0, 3.0}) {
        auto r = sphere_lefschetz(k, alpha, t);
        CHECK(std::abs(r.spectral - sphere_lefschetz(k, alpha, 1.0).spectral) < 1e-10);
        CHECK(std::abs(r.spectral - ref) < 1e-8);
      }
    }
  // k = 2, alpha = pi/2: character of spin 1/2 is 2 cos(alpha/2)
  CHECK(std::abs(sphere_fixed_point_sum(2, pi / 2) - CDouble(std::sqrt(2.0))) < 1e-12);
  CHECK_THROWS_AS(sphere_lefschetz(1, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(sphere_fixed_point_sum(1, 2 * pi), std::invalid_argument);
}
