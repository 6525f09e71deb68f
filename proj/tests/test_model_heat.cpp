#include "doctest.h"

#include <chrono>
#include <cmath>
#include <random>

#include "indexlab/model_heat.hpp"
#include "indexlab/volterra.hpp"

using namespace indexlab;
using GE = GradedElement<QComplex>;
using GF = GradedElement<CDouble>;
using RM = RingMatrix<QComplex>;

namespace {

QComplex q(long p, long d = 1) { return QComplex(Rational(p, d)); }

GE random_two_form(const ContextPtr& ctx, std::mt19937& rng) {
  std::uniform_int_distribution<int> coef(-3, 3);
  GE r(ctx);
  int g = ctx->generator_count();
  for (int i = 0; i < g; ++i)
    for (int j = i + 1; j < g; ++j)
      if (rng() % 2) r.add_term((1ULL << i) | (1ULL << j), q(coef(rng), 2));
  return r;
}

RM random_antisymmetric(const ContextPtr& ctx, int k, std::mt19937& rng) {
  RM A(ctx, k, k);
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) {
      A(i, j) = random_two_form(ctx, rng);
      A(j, i) = -A(i, j);
    }
  return A;
}

double max_diff(const GF& a, const GF& b) {
  double m = 0;
  GF d = a - b;
  for (const auto& [k, v] : d.terms()) m = std::max(m, std::abs(v));
  return m;
}

CDouble value(double b, double t, std::vector<double> x = {0, 0}, std::vector<double> y = {0, 0}) {
  auto d = MehlerData<CDouble>::numeric(2, {0, b, -b, 0});
  std::vector<CDouble> xs{x[0], x[1]}, ys{y[0], y[1]};
  return mehler_kernel(d, xs, ys, CDouble(t)).evaluate().constant_term();
}

}  // namespace

TEST_CASE("free kernel when A = 0") {
  auto d = MehlerData<CDouble>::numeric(2, {0, 0, 0, 0});
  for (double t : {0.1, 1.0, 3.0}) {
    std::vector<CDouble> x{0.3, -0.2}, y{-0.1, 0.5};
    CDouble k = mehler_kernel(d, x, y, CDouble(t)).evaluate().constant_term();
    double r2 = 0.16 + 0.49;
    CHECK(std::abs(k - std::exp(-r2 / (4 * t)) / (4 * M_PI * t)) < 1e-14);
  }
  CHECK_THROWS_AS(mehler_kernel(d, {}, {}, CDouble(0)), std::invalid_argument);
  CHECK_THROWS_AS(mehler_kernel(d, {}, {}, CDouble(-1)), std::invalid_argument);
}

TEST_CASE("diagonal at t = 1 is the A-hat form") {
  std::mt19937 rng(3);
  for (int n : {2, 4}) {
    auto ctx = make_context(n, 6 - n, {}, FiberMode::exterior);
    for (int trial = 0; trial < 5; ++trial) {
      MehlerData<QComplex> d{n, random_antisymmetric(ctx, n, rng)};
      auto k = mehler_kernel(d, {}, {}, q(1));
      CHECK(k.reduced == a_hat(d.A));
      CHECK(k.reduced == a_hat(d.A.transpose()));
      CHECK(k.reduced.max_degree() <= 6);
    }
  }
}

TEST_CASE("kernel symmetry") {
  auto d = MehlerData<CDouble>::numeric(2, {0, 0.7, -0.7, 0});
  auto dt = MehlerData<CDouble>::numeric(2, {0, -0.7, 0.7, 0});
  std::vector<CDouble> x{0.3, -0.2}, y{-0.1, 0.5};
  CDouble k1 = mehler_kernel(d, y, x, CDouble(0.4)).evaluate().constant_term();
  CDouble k2 = mehler_kernel(dt, x, y, CDouble(0.4)).evaluate().constant_term();
  CHECK(std::abs(k1 - k2) < 1e-14);
}

TEST_CASE("semigroup property by quadrature") {
  const double b = 1.0, s = 0.2, t = 0.3;
  const double h = 0.02, L = 4;
  const std::vector<double> A{0, b, -b, 0};
  NumericMehler Ks(A, 2, s), Kt(A, 2, t), Kst(A, 2, s + t);
  CHECK(std::abs(Kst.diagonal() - value(b, s + t).real()) < 1e-14);
  CHECK(std::abs(Kst({0.2, 0.1}, {-0.3, 0.2}) - value(b, s + t, {0.2, 0.1}, {-0.3, 0.2}).real()) < 1e-14);
  for (auto [x, y] : {std::pair{std::vector<double>{0, 0}, std::vector<double>{0, 0}},
                      std::pair{std::vector<double>{0.2, 0.1}, std::vector<double>{-0.3, 0.2}}}) {
    double sum = 0;
    for (double z1 = -L; z1 <= L; z1 += h)
      for (double z2 = -L; z2 <= L; z2 += h) sum += Ks(x, {z1, z2}) * Kt({z1, z2}, y) * h * h;
    double direct = Kst(x, y);
    CHECK(std::abs(sum - direct) / std::abs(direct) < 1e-3);
  }
}

TEST_CASE("Mehler diagonal against the grid semigroup") {
  GridSemigroupOracle oracle;
  auto start = std::chrono::steady_clock::now();
  for (double b : {0.5, 1.0})
    for (double t : {0.05, 0.1}) {
      double grid = oracle.diagonal({0, b, -b, 0}, t);
      double closed = value(b, t).real();
      CAPTURE(b);
      CAPTURE(t);
      CHECK(std::abs(grid - closed) / closed <= 1e-3);
    }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(secs < 120);
  // off-diagonal column against the closed form
  auto col = oracle.column({0, 1.0, -1.0, 0}, 0.1);
  const int N = oracle.config().grid;
  double h = oracle.spacing();
  for (auto [i, j] : {std::pair{N / 2 + 5, N / 2 - 3}, std::pair{N / 2 - 8, N / 2 + 2}}) {
    double x1 = (i - N / 2) * h, x2 = (j - N / 2) * h;
    double closed = value(1.0, 0.1, {x1, x2}, {0, 0}).real();
    CHECK(std::abs(col[static_cast<std::size_t>(i) * N + j] - closed) / closed <= 1e-3);
  }
}

TEST_CASE("heat coefficients of the harmonic model match the Mehler expansion") {
  std::mt19937 rng(9);
  for (int n : {2, 4}) {
    auto ctx = make_context(n, 6 - n, {}, FiberMode::exterior);
    for (int trial = 0; trial < 2; ++trial) {
      MehlerData<QComplex> d{n, random_antisymmetric(ctx, n, rng)};
      auto c = mehler_t_expansion(d, 2);
      DiffOp<QComplex> F(ctx, n);
      for (int i = 0; i < n; ++i) {
        DiffOp<QComplex> D = DiffOp<QComplex>::d(ctx, n, i);
        for (int j = 0; j < n; ++j)
          D -= DiffOp<QComplex>::coefficient(ctx, n, d.A(i, j) * q(1, 4)).then(DiffOp<QComplex>::x(ctx, n, j));
        F -= D.then(D);
      }
      auto a = heat_coefficients(F, 2);
      for (int l = 0; l <= 2; ++l) CHECK(a[l].reduced == c[l]);
      CHECK(c[0] == GE::scalar(ctx, q(1)));
    }
  }
}

TEST_CASE("fixed point integral") {
  auto ctx = make_context(2, 0, {}, FiberMode::exterior);
  MehlerData<QComplex> d{2, RM(ctx, 2, 2)};
  FixedPointGeometry g{0, {{Angle::pi_fraction(1, 1)}}};
  auto I = fixed_point_integral(g, d, q(1));
  CHECK(I.coeff == GE::scalar(ctx, q(1, 4)));
  CHECK(I.pi_power == 0);
  FixedPointGeometry degenerate{0, {{Angle::pi_fraction(0, 1)}}};
  CHECK_THROWS(fixed_point_integral(degenerate, d, q(1)));

  // 2-D quadrature oracle for the numeric Gaussian at theta = 2pi/3 with a real normal block
  double b = 0.6, th = 2 * M_PI / 3;
  auto dn = MehlerData<CDouble>::numeric(2, {0, b, -b, 0});
  FixedPointGeometry gn{0, {{Angle::from_radians(th)}}};
  CDouble v = fixed_point_integral(gn, dn, CDouble(0.5)).evaluate().constant_term();
  NumericMehler K({0, b, -b, 0}, 2, 0.5);
  double h = 0.01;
  CDouble sum = 0;
  for (double v1 = -5; v1 <= 5; v1 += h)
    for (double v2 = -5; v2 <= 5; v2 += h) {
      double w1 = std::cos(th) * v1 - std::sin(th) * v2, w2 = std::sin(th) * v1 + std::cos(th) * v2;
      sum += K({v1, v2}, {w1, w2}) * h * h;
    }
  CHECK(std::abs(sum - v) < 1e-8);
}

TEST_CASE("two-path equivariant density") {
  for (double th : {M_PI / 2, 2 * M_PI / 3, M_PI}) {
    auto ctx = make_context(2, 0, {}, FiberMode::exterior);
    MehlerData<CDouble> d{2, RingMatrix<CDouble>(ctx, 2, 2)};
    FixedPointGeometry g{0, {{Angle::from_radians(th)}}};
    auto model = equivariant_model_density(g, d, CDouble(1));
    auto chars = equivariant_index_density(RingMatrix<CDouble>(ctx, 0, 0), g.phi, d.A.transpose(), 0, 2);
    CHECK(max_diff(model.density.evaluate(), chars.evaluate()) < 1e-6);
    CHECK(max_diff(model.total_supertrace, model.density.coeff) < 1e-12);
  }
  {
    auto ctx = make_context(2, 0, {}, FiberMode::exterior);
    MehlerData<QComplex> d{2, RM(ctx, 2, 2)};
    FixedPointGeometry g{0, {{Angle::pi_fraction(1, 1)}}};
    auto model = equivariant_model_density(g, d, q(1));
    CHECK(model.density.coeff == GE::scalar(ctx, QComplex(0, Rational(-1, 2))));
  }
  std::mt19937 rng(21);
  int nonzero = 0;
  for (int trial = 0; trial < 5; ++trial) {
    // n = 4, a = 2, theta = pi/2 with nilpotent tangential and normal blocks, two base forms
    auto ctx = make_context(4, 2, {}, FiberMode::exterior);
    RM A(ctx, 4, 4);
    GE u = random_two_form(ctx, rng), w = random_two_form(ctx, rng);
    A(0, 1) = u;
    A(1, 0) = -u;
    A(2, 3) = w;
    A(3, 2) = -w;
    RM At = A.transpose();
    {
      // exact at theta = pi
      MehlerData<QComplex> d{4, A};
      FixedPointGeometry g{2, {{Angle::pi_fraction(1, 1)}}};
      auto model = equivariant_model_density(g, d, q(1));
      auto chars = equivariant_index_density(At.block(0, 0, 2, 2), g.phi, At.block(2, 2, 2, 2), 2, 4);
      CHECK(model.density.coeff.truncated(2) == chars.coeff.truncated(2));
      CHECK(model.density.pi_power == chars.pi_power);
    }
    {
      // theta = pi/2 carries sqrt(2); form coefficients compared in float mode
      RingMatrix<CDouble> Af(ctx, 4, 4);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) Af(i, j) = to_float(A(i, j));
      RingMatrix<CDouble> Aft = Af.transpose();
      MehlerData<CDouble> d{4, Af};
      FixedPointGeometry g{2, {{Angle::pi_fraction(1, 2)}}};
      auto model = equivariant_model_density(g, d, CDouble(1));
      auto chars = equivariant_index_density(Aft.block(0, 0, 2, 2), g.phi, Aft.block(2, 2, 2, 2), 2, 4);
      CHECK(max_diff(model.density.coeff.truncated(2), chars.coeff.truncated(2)) < 1e-12);
      CHECK(model.density.pi_power == chars.pi_power);
      nonzero += !chars.coeff.truncated(2).is_zero();
    }
  }
  CHECK(nonzero >= 3);
  for (int n : {2, 4}) {
    // phi = id reproduces the (2 i pi)^{-n/2} A-hat density
    auto ctx = make_context(n, 0, {}, FiberMode::exterior);
    MehlerData<QComplex> d{n, random_antisymmetric(ctx, n, rng)};
    FixedPointGeometry g{n, {}};
    auto model = equivariant_model_density(g, d, q(1));
    auto ref = ahat_index_density(d.A.transpose(), n);
    CHECK(model.density.coeff == ref.coeff);
    CHECK(model.density.pi_power == ref.pi_power);
  }
}
