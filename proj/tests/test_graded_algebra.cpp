#include "doctest.h"

#include <random>

#include "indexlab/graded_algebra.hpp"

using namespace indexlab;
using GE = GradedElement<QComplex>;

namespace {

GE random_element(const ContextPtr& ctx, std::mt19937& rng, int terms = 4) {
  std::uniform_int_distribution<std::uint64_t> mask(0, (1ULL << ctx->generator_count()) - 1);
  std::uniform_int_distribution<int> coef(-3, 3);
  GE r(ctx);
  for (int k = 0; k < terms; ++k) r.add_term(mask(rng), QComplex(Rational(coef(rng)), Rational(coef(rng))));
  return r;
}

QComplex exact(const std::complex<double>& z) {
  REQUIRE(z.real() == std::round(z.real()));
  REQUIRE(z.imag() == std::round(z.imag()));
  return QComplex(Rational(static_cast<long>(z.real())), Rational(static_cast<long>(z.imag())));
}

}  // namespace

TEST_CASE("clifford relations") {
  for (int n = 1; n <= 6; ++n) {
    auto ctx = make_context(n, 0);
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j) {
        GE ei = GE::fiber_gen(ctx, i), ej = GE::fiber_gen(ctx, j);
        GE anti = ei * ej + ej * ei;
        GE expect = GE::scalar(ctx, i == j ? QComplex(-2) : QComplex(0));
        CHECK(anti == expect);
      }
  }
  auto ctx = make_context(2, 0);
  CHECK(GE::fiber_gen(ctx, 1) * GE::fiber_gen(ctx, 1) == GE::scalar(ctx, QComplex(-1)));
}

TEST_CASE("forms anticommute and square to zero") {
  auto ctx = make_context(2, 2, {"z"});
  GE dy1 = GE::base_gen(ctx, 1), dy2 = GE::base_gen(ctx, 2), z = GE::aux_gen(ctx, "z"), c1 = GE::fiber_gen(ctx, 1);
  CHECK((dy1 * dy1).is_zero());
  CHECK((z * z).is_zero());
  CHECK(dy1 * dy2 == -(dy2 * dy1));
  CHECK(c1 * dy1 == -(dy1 * c1));
  CHECK(dy1 * dy2 * c1 == c1 * dy1 * dy2);
}

TEST_CASE("Koszul sign against the tensor matrix representation") {
  auto ctx = make_context(2, 2);
  GradedMatrixRep rep(*ctx);
  GE a = GE::base_gen(ctx, 1) * GE::fiber_gen(ctx, 1);
  GE b = GE::base_gen(ctx, 2) * GE::fiber_gen(ctx, 2);
  GE ab = a * b;
  // dy1 c1 dy2 c2 = - dy1 dy2 c1 c2
  CHECK(ab == GE::monomial(ctx, ctx->base_bit(1) | ctx->base_bit(2) | ctx->fiber_bit(1) | ctx->fiber_bit(2), -1));
  CHECK((rep.apply(ab) - rep.apply(a) * rep.apply(b)).norm() == 0.0);
}

TEST_CASE("random products match the matrix representation") {
  std::mt19937 rng(7);
  for (int n : {2, 4}) {
    auto ctx = make_context(n, 2, {"z"});
    GradedMatrixRep rep(*ctx);
    for (int trial = 0; trial < 30; ++trial) {
      GE a = random_element(ctx, rng), b = random_element(ctx, rng);
      CHECK((rep.apply(a * b) - rep.apply(a) * rep.apply(b)).norm() == 0.0);
    }
  }
  auto ext = make_context(3, 1, {}, FiberMode::exterior);
  GradedMatrixRep rep(*ext);
  for (int trial = 0; trial < 30; ++trial) {
    GE a = random_element(ext, rng), b = random_element(ext, rng);
    CHECK((rep.apply(a * b) - rep.apply(a) * rep.apply(b)).norm() == 0.0);
  }
}

TEST_CASE("associativity and distributivity on 200 random triples") {
  std::mt19937 rng(11);
  auto ctx = make_context(4, 2, {"z"});
  for (int trial = 0; trial < 200; ++trial) {
    GE a = random_element(ctx, rng), b = random_element(ctx, rng), c = random_element(ctx, rng);
    CHECK((a * b) * c == a * (b * c));
    CHECK(a * (b + c) == a * b + a * c);
  }
}

TEST_CASE("context mismatch is rejected") {
  auto c1 = make_context(2, 0), c2 = make_context(3, 0);
  CHECK_THROWS_AS(GE::fiber_gen(c1, 1) * GE::fiber_gen(c2, 1), std::invalid_argument);
}

TEST_CASE("symbol map and quantization") {
  auto ctx = make_context(2, 0);
  GE c12 = GE::fiber_gen(ctx, 1) * GE::fiber_gen(ctx, 2);
  GE s = symbol_map(c12);
  CHECK(s.ctx().fiber() == FiberMode::exterior);
  CHECK(s.coeff(ctx->fiber_bit(1) | ctx->fiber_bit(2)) == QComplex(1));
  CHECK(symbol_map(GE::fiber_gen(ctx, 1) * GE::fiber_gen(ctx, 1)) == GE::scalar(s.context(), -1));
  for (int n = 1; n <= 6; ++n) {
    auto cn = make_context(n, 1);
    for (std::uint64_t m = 0; m < (1ULL << cn->generator_count()); ++m) {
      GE x = GE::monomial(cn, m, QComplex(Rational(3), Rational(-1)));
      CHECK(quantize(symbol_map(x)) == x);
      GE y = symbol_map(x);
      CHECK(symbol_map(quantize(y)) == y);
    }
  }
}

TEST_CASE("supertrace matches spinor matrices for every basis monomial") {
  for (int n : {2, 4, 6}) {
    auto ctx = make_context(n, 0);
    SpinorRep rep(n);
    CHECK((rep.chirality() * rep.chirality() - Eigen::MatrixXcd::Identity(rep.dim(), rep.dim())).norm() == 0.0);
    for (int i = 1; i <= n; ++i) CHECK((rep.chirality() * rep.gamma(i) + rep.gamma(i) * rep.chirality()).norm() == 0.0);
    for (std::uint64_t f = 0; f < (1ULL << n); ++f) {
      GE x = GE::monomial(ctx, f << ctx->form_count(), 1);
      QComplex formula = supertrace(x).constant_term();
      QComplex matrix = exact((rep.chirality() * rep.clifford_monomial(f)).trace());
      CHECK(formula == matrix);
    }
  }
  auto c2 = make_context(2, 0);
  CHECK(supertrace(GE::scalar(c2, 1)).is_zero());
  CHECK(supertrace(GE::fiber_gen(c2, 1) * GE::fiber_gen(c2, 2)).constant_term() == QComplex(0, -2));
  CHECK_THROWS(supertrace(GE::scalar(make_context(3, 0), 1)));
}

TEST_CASE("odd trace matches spinor matrices") {
  for (int n : {1, 3, 5}) {
    auto ctx = make_context(n, 0);
    SpinorRep rep(n);
    for (std::uint64_t f = 0; f < (1ULL << n); ++f) {
      GE x = GE::monomial(ctx, f, 1);
      CHECK(trace_odd(x).constant_term() == exact(rep.clifford_monomial(f).trace()));
    }
  }
  auto c3 = make_context(3, 0);
  CHECK(trace_odd(GE::scalar(c3, 1)).constant_term() == QComplex(2));
  CHECK(trace_odd(GE::fiber_gen(c3, 1)).is_zero());
  CHECK(trace_odd(GE::fiber_gen(c3, 1) * GE::fiber_gen(c3, 2) * GE::fiber_gen(c3, 3)).constant_term() == QComplex(-2));
  CHECK_THROWS(trace_odd(GE::scalar(make_context(2, 0), 1)));
}

TEST_CASE("supertrace keeps form factors and kills supercommutators") {
  std::mt19937 rng(3);
  auto ctx = make_context(4, 2);
  GE dy1 = GE::base_gen(ctx, 1);
  GE top = GE::fiber_gen(ctx, 1) * GE::fiber_gen(ctx, 2) * GE::fiber_gen(ctx, 3) * GE::fiber_gen(ctx, 4);
  CHECK(supertrace(dy1 * top) == dy1 * QComplex(-4));
  std::uniform_int_distribution<std::uint64_t> mask(0, (1ULL << ctx->generator_count()) - 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::uint64_t ma = mask(rng), mb = mask(rng);
    GE a = GE::monomial(ctx, ma, QComplex(Rational(trial % 5 + 1)));
    GE b = GE::monomial(ctx, mb, QComplex(Rational(2), Rational(1)));
    int sign = (std::popcount(ma) * std::popcount(mb)) % 2 ? -1 : 1;
    CHECK(supertrace(a * b) == supertrace(b * a) * QComplex(sign));
  }
}

TEST_CASE("berezin integral") {
  auto ctx = make_context(3, 1, {}, FiberMode::exterior);
  GE e1 = GE::fiber_gen(ctx, 1), e2 = GE::fiber_gen(ctx, 2), e3 = GE::fiber_gen(ctx, 3);
  auto c2 = make_context(2, 0, {}, FiberMode::exterior);
  CHECK(berezin(GE::fiber_gen(c2, 1) * GE::fiber_gen(c2, 2), 2, BerezinMode::full).constant_term() == QComplex(1));
  CHECK(berezin(GE::fiber_gen(c2, 1), 2, BerezinMode::full).is_zero());
  CHECK(berezin(e1 * e3, 1, BerezinMode::star_zero).is_zero());
  CHECK(berezin(e1 * GE::base_gen(ctx, 1), 1, BerezinMode::star_zero) == -GE::base_gen(ctx, 1));  // e1 dy1 = -dy1 e1
  CHECK_THROWS(berezin(e1 * e3, 1, BerezinMode::full));
  CHECK_THROWS(berezin(e1, 4, BerezinMode::full));
  (void)e2;
}

TEST_CASE("spinor lift conjugates to the rotation") {
  using GF = GradedElement<CDouble>;
  auto ctx = make_context(2, 0);
  Angle th = Angle::from_radians(0.7);
  GF g = spinor_lift<CDouble>(ctx, 0, {th});
  GF ginv = spinor_lift<CDouble>(ctx, 0, {Angle::from_radians(-0.7)});
  GF rot = g * GF::fiber_gen(ctx, 1) * ginv;
  GF expect = GF::fiber_gen(ctx, 1) * CDouble(std::cos(0.7)) + GF::fiber_gen(ctx, 2) * CDouble(std::sin(0.7));
  CHECK((rot - expect).chopped(1e-14).is_zero());
}

TEST_CASE("equivariant supertrace against matrices") {
  SUBCASE("phi = -I on R^2") {
    auto ctx = make_context(2, 0);
    std::vector<Angle> ang{Angle::pi_fraction(1, 1)};
    GE g = spinor_lift<QComplex>(ctx, 0, ang);
    auto r = equivariant_supertrace(g, GE::scalar(ctx, 1), 0, ang);
    SpinorRep rep(2);
    GradedMatrixRep mrep(*ctx);
    QComplex matrix = exact((rep.chirality() * mrep.apply(g)).trace());
    CHECK(r.total.constant_term() == matrix);
    CHECK(r.leading.constant_term() == matrix);
    CHECK(r.correction.is_zero());
  }
  SUBCASE("phi = id reduces to supertrace") {
    auto ctx = make_context(2, 1);
    GE A = GE::base_gen(ctx, 1) * GE::fiber_gen(ctx, 1) * GE::fiber_gen(ctx, 2);
    auto r = equivariant_supertrace(GE::scalar(ctx, 1), A, 2, {});
    CHECK(r.total == supertrace(A));
    CHECK(r.leading == supertrace(A));
  }
  SUBCASE("n=4, a=2, theta=pi/2, A=c1 c2") {
    using GF = GradedElement<CDouble>;
    auto ctx = make_context(4, 0);
    std::vector<Angle> ang{Angle::pi_fraction(1, 2)};
    GF g = spinor_lift<CDouble>(ctx, 2, ang);
    GF A = GF::fiber_gen(ctx, 1) * GF::fiber_gen(ctx, 2);
    auto r = equivariant_supertrace(g, A, 2, ang);
    SpinorRep rep(4);
    GradedMatrixRep mrep(*ctx);
    CDouble matrix = (rep.chirality() * mrep.apply(g) * mrep.apply(A)).trace();
    CHECK(std::abs(r.total.constant_term() - matrix) < 1e-12);
    CHECK(std::abs(r.leading.constant_term() - matrix) < 1e-12);
  }
  SUBCASE("degenerate action rejected") {
    auto ctx = make_context(2, 0);
    std::vector<Angle> ang{Angle::pi_fraction(0, 1)};
    CHECK_THROWS_AS(equivariant_supertrace(GE::scalar(ctx, 1), GE::scalar(ctx, 1), 0, ang), std::domain_error);
  }
}
