#include "doctest.h"

#include <random>

#include "indexlab/char_forms.hpp"

using namespace indexlab;
using GE = GradedElement<QComplex>;
using GF = GradedElement<CDouble>;
using RM = RingMatrix<QComplex>;

namespace {

ContextPtr forms(int q, int n = 1) { return make_context(n, q, {}, FiberMode::exterior); }

template <class S>
GradedElement<S> random_two_form(const ContextPtr& ctx, std::mt19937& rng) {
  std::uniform_int_distribution<int> coef(-2, 2);
  GradedElement<S> r(ctx);
  int g = ctx->generator_count();
  for (int i = 0; i < g; ++i)
    for (int j = i + 1; j < g; ++j)
      if (rng() % 3 == 0) r.add_term((1ULL << i) | (1ULL << j), ScalarTraits<S>::from_int(coef(rng)));
  return r;
}

template <class S>
RingMatrix<S> random_curvature(const ContextPtr& ctx, int k, std::mt19937& rng) {
  RingMatrix<S> R(ctx, k, k);
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      R(i, j) = random_two_form<S>(ctx, rng);
      R(j, i) = -R(i, j);
    }
  return R;
}

template <class S>
RingMatrix<S> block(const GradedElement<S>& u) {
  RingMatrix<S> R(u.context(), 2, 2);
  R(0, 1) = u;
  R(1, 0) = -u;
  return R;
}

// coefficients of (x/2)/sin(x/2) by direct reciprocal of its Taylor series
std::vector<Rational> x_over_sin_half(int order) {
  std::vector<Rational> s(order + 1, Rational(0)), r(order + 1, Rational(0));
  Rational f = 1;
  for (int k = 0; 2 * k <= order; ++k) {
    if (k > 0) f *= Rational(-1, 4 * (2 * k) * (2 * k + 1));
    s[2 * k] = f;
  }
  r[0] = 1;
  for (int k = 1; k <= order; ++k) {
    Rational acc = 0;
    for (int j = 1; j <= k; ++j) acc += s[j] * r[k - j];
    r[k] = -acc;
  }
  return r;
}

}  // namespace

TEST_CASE("power series utilities") {
  auto e = series::exp(10);
  auto l = series::log1p(10);
  auto g = e;
  g.c[0] = 0;
  auto id = series::compose(l, g, 10);  // log(1 + (e^x - 1)) = x
  for (int k = 0; k <= 10; ++k) CHECK(id.at(k) == Rational(k == 1 ? 1 : 0));
  auto xs = series::x_over_sinh(8);
  auto prod = series::mul(xs, series::sinh_over_x(8), 8);
  for (int k = 0; k <= 8; ++k) CHECK(prod.at(k) == Rational(k == 0 ? 1 : 0));
  CHECK(series::x_coth(4).at(2) == Rational(1, 3));
}

TEST_CASE("matrix_function on nilpotent matrices") {
  std::mt19937 rng(5);
  auto ctx = forms(6);
  RM zero(ctx, 3, 3);
  CHECK(matrix_exp(zero) == RM::identity(ctx, 3));
  RM M = random_curvature<QComplex>(ctx, 3, rng);
  CHECK(matrix_exp(M) * matrix_exp(M * QComplex(-1)) == RM::identity(ctx, 3));
  RM L = matrix_function(series::log1p(4), M);
  CHECK(matrix_exp(L) == RM::identity(ctx, 3) + M);
}

TEST_CASE("matrix_function numeric part") {
  auto ctx = forms(2);
  RingMatrix<CDouble> M = RingMatrix<CDouble>::numeric(ctx, 1, 1, {0.5});
  M(0, 0).add_term(ctx->base_bit(1) | ctx->base_bit(2), 1.0);
  auto L = matrix_function(series::log1p(200), M);
  CHECK(std::abs(L(0, 0).constant_term() - std::log(1.5)) < 1e-14);
  CHECK(std::abs(L(0, 0).coeff(ctx->base_bit(1) | ctx->base_bit(2)) - 1.0 / 1.5) < 1e-14);
  RingMatrix<CDouble> big = RingMatrix<CDouble>::numeric(ctx, 1, 1, {2.0});
  CHECK_THROWS_AS(matrix_function(series::log1p(50), big), std::domain_error);
  CHECK_THROWS_AS(matrix_function(series::log1p(10), RM::identity(ctx, 2)), std::domain_error);
}

TEST_CASE("a_hat single block against the one-variable series") {
  auto ctx = forms(8);
  GE u(ctx);
  for (int j = 0; j < 4; ++j) u.add_term(ctx->base_bit(2 * j + 1) | ctx->base_bit(2 * j + 2), 1);
  GE ah = a_hat(block(u));
  auto coeffs = x_over_sin_half(8);
  GE expect(ctx), power = GE::scalar(ctx, 1);
  for (int k = 0; k <= 8; ++k) {
    expect += power * QComplex(coeffs[k]);
    power = power * u;
  }
  CHECK(ah == expect);
  CHECK(coeffs[2] == Rational(1, 24));
  CHECK(coeffs[4] == Rational(7, 5760));
  CHECK(a_hat(RM(ctx, 2, 2)) == GE::scalar(ctx, 1));
}

TEST_CASE("a_hat block multiplicativity and degree pattern") {
  std::mt19937 rng(17);
  auto ctx = forms(8);
  for (int trial = 0; trial < 5; ++trial) {
    RM R1 = random_curvature<QComplex>(ctx, 2, rng), R2 = random_curvature<QComplex>(ctx, 2, rng);
    RM R(ctx, 4, 4);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        R(i, j) = R1(i, j);
        R(i + 2, j + 2) = R2(i, j);
      }
    GE ah = a_hat(R);
    CHECK(ah == a_hat(R1) * a_hat(R2));
    CHECK(ah.constant_term() == QComplex(1));
    for (const auto& [m, c] : ah.terms()) CHECK(std::popcount(m) % 4 == 0);
  }
  RM asym(ctx, 2, 2);
  asym(0, 1) = GE::scalar(ctx, 1);
  CHECK_THROWS(a_hat(asym));
}

TEST_CASE("det_sqrt squares to det") {
  std::mt19937 rng(23);
  auto ctx = forms(6);
  std::uniform_int_distribution<int> off(-3, 3);
  for (int trial = 0; trial < 20; ++trial) {
    int k = 2 + trial % 3;
    RM M(ctx, k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        QComplex c = i == j ? QComplex((i + 1 + trial % 2) * (i + 1 + trial % 2)) : (j > i ? QComplex(off(rng)) : QComplex(0));
        M(i, j) = GE::scalar(ctx, c) + random_two_form<QComplex>(ctx, rng);
      }
    GE d = ring_det(M);
    GE s = det_sqrt(M);
    CHECK(s * s == d);
    CHECK(sgn(s.constant_term().re) > 0);
  }
}

TEST_CASE("nu_phi") {
  auto ctx = forms(4);
  IsometryNormalAction pi{{Angle::pi_fraction(1, 1)}};
  CHECK(nu_phi(pi, RM(ctx, 2, 2)) == GE::scalar(ctx, QComplex(Rational(1, 2))));
  IsometryNormalAction quarter{{Angle::pi_fraction(1, 2)}};
  GF v = nu_phi(quarter, RingMatrix<CDouble>(ctx, 2, 2));
  CHECK(std::abs(v.constant_term() - 1 / std::sqrt(2.0)) < 1e-14);

  // theta = pi, single block: brute-force 2x2 determinant of 1 - phi e^{-R}
  GE u = GE::monomial(ctx, ctx->base_bit(1) | ctx->base_bit(2), 1) + GE::monomial(ctx, ctx->base_bit(3) | ctx->base_bit(4), 1);
  RM R = block(u);
  RM E = matrix_exp(R * QComplex(-1));
  RM Y = RM::identity(ctx, 2) + E;  // phi = -I
  GE det = Y(0, 0) * Y(1, 1) - Y(0, 1) * Y(1, 0);
  GE brute = elem_pow(det, Rational(-1, 2));
  GE nu = nu_phi(pi, R);
  CHECK(nu == brute);
  CHECK(nu == GE::scalar(ctx, QComplex(Rational(1, 2))) + u * u * QComplex(Rational(1, 16)));

  // generic angle: 1/(2 sin((theta + u)/2)), second-order coefficient
  double th = 2 * M_PI / 3;
  GF uf = to_float(u);
  GF nf = nu_phi(IsometryNormalAction{{Angle::pi_fraction(2, 3)}}, block(uf));
  double s = std::sin(th / 2), c = std::cos(th / 2);
  double f0 = 1 / (2 * s);
  double f2 = (1 / (2 * s)) * (c * c / (s * s) * 2 + 1) / 8;  // second Taylor coefficient in u
  GF expect = GF::scalar(ctx, f0) + uf * CDouble(-c / (4 * s * s)) + uf * uf * CDouble(f2);
  CHECK((nf - expect).chopped(1e-13).is_zero());

  for (int blocks = 1; blocks <= 3; ++blocks) {
    std::vector<Angle> ang;
    double prod = 1;
    for (int j = 0; j < blocks; ++j) {
      double t = 0.4 + 1.1 * j;
      ang.push_back(Angle::from_radians(t));
      prod *= 2 * std::sin(t / 2);
    }
    GF z = nu_phi(IsometryNormalAction{ang}, RingMatrix<CDouble>(ctx, 2 * blocks, 2 * blocks));
    CHECK(std::abs(z.constant_term() - 1 / prod) < 1e-12);
  }
  CHECK_THROWS_AS(nu_phi(IsometryNormalAction{{Angle::pi_fraction(0, 1)}}, RM(ctx, 2, 2)), std::domain_error);
}

TEST_CASE("chern character") {
  auto ctx = forms(4);
  CHECK(chern_character(RM(ctx, 3, 3)) == GE::scalar(ctx, 3));
  GE c = GE::monomial(ctx, ctx->base_bit(1) | ctx->base_bit(2), 2) + GE::monomial(ctx, ctx->base_bit(3) | ctx->base_bit(4), 1);
  RM C(ctx, 1, 1);
  C(0, 0) = c;
  CHECK(chern_character(C) == GE::scalar(ctx, 1) - c + c * c * QComplex(Rational(1, 2)));
  RM C2(ctx, 2, 2);
  C2(0, 0) = c;
  C2(1, 1) = c * QComplex(3);
  RM C3(ctx, 1, 1);
  C3(0, 0) = c * QComplex(3);
  CHECK(chern_character(C2) == chern_character(C) + chern_character(C3));
}

TEST_CASE("equivariant index density") {
  SUBCASE("isolated fixed point, theta = pi") {
    auto ctx = forms(0, 2);
    auto d = equivariant_index_density(RM(ctx, 0, 0), IsometryNormalAction{{Angle::pi_fraction(1, 1)}}, RM(ctx, 2, 2), 0, 2);
    CHECK(d.pi_power == 0);
    CHECK(d.coeff == GE::scalar(ctx, QComplex(Rational(0), Rational(-1, 2))));
  }
  SUBCASE("phi = id reduces to the A-hat density") {
    std::mt19937 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
      int n = trial % 2 ? 4 : 2;
      auto ctx = forms(4, n);
      RM R = random_curvature<QComplex>(ctx, n, rng);
      auto d1 = equivariant_index_density(R, IsometryNormalAction{}, RM(ctx, 0, 0), n, n);
      auto d2 = ahat_index_density(R, n);
      CHECK(d1.pi_power == d2.pi_power);
      CHECK(d1.coeff == d2.coeff);
    }
    for (int n : {2, 4, 6, 8}) CHECK(prefactor_ratio(n) == QComplex(1));
  }
  SUBCASE("single block with base forms, n = 2") {
    auto ctx = forms(2, 2);
    GE u = GE::monomial(ctx, ctx->fiber_bit(1) | ctx->fiber_bit(2), 1) + GE::monomial(ctx, ctx->base_bit(1) | ctx->base_bit(2), 1);
    auto d = ahat_index_density(block(u), 2);
    // (2 i)^{-1} * (2/24) dy1 dy2
    CHECK(d.coeff == GE::monomial(ctx, ctx->base_bit(1) | ctx->base_bit(2), QComplex(Rational(0), Rational(-1, 24))));
    CHECK(d.pi_power == -1);
  }
  SUBCASE("dimension mismatch") {
    auto ctx = forms(0, 4);
    CHECK_THROWS(equivariant_index_density(RM(ctx, 0, 0), IsometryNormalAction{{Angle::pi_fraction(1, 1)}}, RM(ctx, 2, 2), 0, 4));
  }
}
