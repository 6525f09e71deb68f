#include "doctest.h"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>

#include "indexlab/superconnection.hpp"

using namespace indexlab;
using FS = FormScalar<CDouble>;
using FM = FormMatrix<CDouble>;
using QS = FormScalar<QComplex>;
using QM = FormMatrix<QComplex>;

namespace {

QComplex q(long p, long d = 1) { return QComplex(Rational(p, d)); }

Eigen::MatrixXcd random_block(std::mt19937& rng, int r, int c) {
  std::normal_distribution<double> g(0, 0.6);
  Eigen::MatrixXcd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = CDouble(g(rng), g(rng));
  return m;
}

// odd Hermitian D and a total-odd A_plus on (+,+,-,-) over a 3-dimensional base
Superconnection<CDouble> random_model(std::mt19937& rng, BaseSpec base) {
  std::vector<int> gr{1, 1, -1, -1};
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(4, 4);
  Eigen::MatrixXcd c = random_block(rng, 2, 2);
  d.block(2, 0, 2, 2) = c;
  d.block(0, 2, 2, 2) = c.adjoint();
  Superconnection<CDouble> B{FM::numeric(base, gr, d), FM(base, gr)};
  for (int i = 1; i <= base.q; ++i) {
    Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(4, 4);
    e.block(0, 0, 2, 2) = random_block(rng, 2, 2);
    e.block(2, 2, 2, 2) = random_block(rng, 2, 2);
    B.A_plus += FM::times_form(FS::dy(base, i), base, gr, e);
  }
  for (int i = 1; i <= base.q; ++i)
    for (int j = i + 1; j <= base.q; ++j) {
      Eigen::MatrixXcd o = Eigen::MatrixXcd::Zero(4, 4);
      o.block(2, 0, 2, 2) = random_block(rng, 2, 2);
      o.block(0, 2, 2, 2) = random_block(rng, 2, 2);
      B.A_plus += FM::times_form(FS::dy(base, i) * FS::dy(base, j), base, gr, o);
    }
  return B;
}

double diff(const FS& a, const FS& b) { return (a - b).max_abs(); }
double diff(const FM& a, const FM& b) { return (a - b).max_abs(); }

FM eigen_exp(BaseSpec base, const std::vector<int>& gr, const Eigen::MatrixXcd& m) {
  return FM::numeric(base, gr, m.exp());
}

}  // namespace

TEST_CASE("form scalars: wedge signs, d^2 = 0, rescaling") {
  BaseSpec b{3, 4};
  QS dy1 = QS::dy(b, 1), dy2 = QS::dy(b, 2), dy3 = QS::dy(b, 3);
  CHECK(dy1 * dy2 == -(dy2 * dy1));
  CHECK((dy1 * dy1).is_zero());
  CHECK((dy2 * dy3 * dy1).coeff(0b111) == q(1));
  QS y1 = QS::y(b, 1), y2 = QS::y(b, 2);
  QS f = y1 * y1 * y2 + y2 * dy3 * q(3) + y1 * y2 * dy1 * dy2;
  CHECK(f.d().d().is_zero());
  CHECK(y1.d() == dy1);
  CHECK((y1 * y2).d() == y2 * dy1 + y1 * dy2);
  // psi_s psi_t = psi_st
  QS g = QS::constant(b, q(2)) + dy1 * y2 + dy1 * dy2 * q(5) + dy1 * dy2 * dy3;
  CHECK(g.rescaled(q(4)).rescaled(q(9)) == g.rescaled(q(36)));
  CHECK(g.rescaled(q(4)).coeff(0b1, MultiIndex::unit(1)) == q(1, 2));
  CHECK_THROWS_AS((void)g.rescaled(q(2)), std::domain_error);
  CHECK(QS::y(BaseSpec{1, 0}, 1).is_zero());  // truncated jet
}

TEST_CASE("form matrices: graded product, supertrace of supercommutators vanishes") {
  std::mt19937 rng(7);
  BaseSpec base{3, 0};
  for (int trial = 0; trial < 5; ++trial) {
    auto B1 = random_model(rng, base), B2 = random_model(rng, base);
    FM b1 = B1.D + B1.A_plus, b2 = B2.D + B2.A_plus;
    CHECK(b1.parity() == 1);
    FM F = b1 * b2;
    CHECK(F.parity() == 0);
    CHECK(b1.supercommutator(b2).supertrace().max_abs() < 1e-12);
    CHECK(F.supercommutator(b1).supertrace().max_abs() < 1e-12);
    // associativity
    FM c = b1 * F;
    CHECK(diff((b1 * b2) * c, b1 * (b2 * c)) < 1e-12);
  }
  // mixed parity is reported
  std::vector<int> gr{1, -1};
  Eigen::MatrixXcd m(2, 2);
  m << 1, 1, 0, 0;
  CHECK(FM::numeric(base, gr, m).parity() == -1);
}

TEST_CASE("curvature splits into D^2 and a positive-degree part") {
  std::mt19937 rng(11);
  BaseSpec base{3, 0};
  auto B = random_model(rng, base);
  auto c = curvature(B);
  CHECK(diff(c.F0, B.D * B.D) < 1e-14);
  CHECK(c.F_plus.min_degree() >= 1);
  CHECK(diff(c.F, c.F0 + c.F_plus) == 0);
  Superconnection<CDouble> flat{B.D, FM(base, B.D.grading())};
  CHECK(curvature(flat).F_plus.is_zero());
  Superconnection<CDouble> pure{FM(base, B.D.grading()), B.A_plus.degree_part(1)};
  auto cp = curvature(pure);
  CHECK(cp.F.min_degree() == 2);
  CHECK(cp.F.max_degree() == 2);
}

TEST_CASE("divided differences of the exponential") {
  double t = 0.7;
  CHECK(std::abs(divided_difference_exp({2.0}, t) - std::exp(-1.4)) < 1e-15);
  CDouble dd = (std::exp(-t * 1.0) - std::exp(-t * 3.0)) / (1.0 - 3.0);
  CHECK(std::abs(divided_difference_exp({1.0, 3.0}, t) - dd) < 1e-14);
  // confluent: (-t)^2/2 e^{-tx}
  CHECK(std::abs(divided_difference_exp({1.5, 1.5, 1.5}, t) - 0.5 * t * t * std::exp(-t * 1.5)) < 1e-14);
}

TEST_CASE("duhamel: trivial and commuting cases against matrix exponentials") {
  std::mt19937 rng(3);
  BaseSpec base{3, 0};
  auto B = random_model(rng, base);
  std::vector<int> gr = B.D.grading();
  double t = 0.8;
  Eigen::MatrixXcd d = B.D.constant_numeric();
  FM e0 = duhamel_exp(B.D * B.D, CDouble(t));
  CHECK(diff(e0, eigen_exp(base, gr, -t * d * d)) < 1e-12);
  for (auto mode : {DuhamelMode::exact, DuhamelMode::simplex})
    CHECK(diff(duhamel_exp(B.D * B.D, CDouble(t), {mode, 8}), e0) < 1e-12);

  // D^2 = I: F_plus commutes with D^2 and exp(-tF) = e^{-t} exp(-t F_plus)
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(4, 4);
  Eigen::MatrixXcd c = random_block(rng, 2, 2);
  Eigen::MatrixXcd unitary = Eigen::HouseholderQR<Eigen::MatrixXcd>(c).householderQ();
  u.block(2, 0, 2, 2) = unitary;
  u.block(0, 2, 2, 2) = unitary.adjoint();
  Superconnection<CDouble> U{FM::numeric(base, gr, u), B.A_plus};
  auto cu = curvature(U);
  CHECK(diff(cu.F0, FM::identity(base, gr)) < 1e-14);
  FM nil = duhamel_exp(cu.F_plus, CDouble(t));  // terminating series
  for (auto mode : {DuhamelMode::exact, DuhamelMode::simplex})
    CHECK(diff(duhamel_exp(cu.F, CDouble(t), {mode, 12}), nil * CDouble(std::exp(-t))) < 1e-10);
}

TEST_CASE("duhamel: finiteness, simplex agreement and heat residual on random 4x4 models") {
  std::mt19937 rng(2024);
  BaseSpec base{3, 0};
  double worst_sim = 0, worst_res = 0, worst_res_sim = 0;
  for (int trial = 0; trial < 10; ++trial) {
    auto B = random_model(rng, base);
    auto F = curvature(B).F;
    double t = 0.5 + 0.25 * trial;
    CHECK(duhamel_term(F, CDouble(t), base.q + 1).is_zero());
    CHECK_FALSE(duhamel_term(F, CDouble(t), 1).is_zero());
    FM exact = duhamel_exp(F, CDouble(t));
    FM sum = FM(base, F.grading());
    for (int k = 0; k <= base.q; ++k) sum += duhamel_term(F, CDouble(t), k);
    CHECK(diff(sum, exact) < 1e-13);
    FM sim = duhamel_exp(F, CDouble(t), {DuhamelMode::simplex, 16});
    worst_sim = std::max(worst_sim, diff(sim, exact));
    worst_res = std::max(worst_res, heat_residual(F, t));
    if (trial < 2) worst_res_sim = std::max(worst_res_sim, heat_residual(F, t, {DuhamelMode::simplex, 16}));
  }
  CHECK(worst_sim <= 1e-8);
  CHECK(worst_res <= 1e-8);
  CHECK(worst_res_sim <= 1e-6);
}

TEST_CASE("duhamel: simplex mode converges to exact mode") {
  std::mt19937 rng(99);
  BaseSpec base{3, 0};
  auto B = random_model(rng, base);
  B.D *= CDouble(2.5);  // stiffer degree-0 part
  auto F = curvature(B).F;
  FM exact = duhamel_exp(F, CDouble(1.0));
  double e2 = diff(duhamel_exp(F, CDouble(1.0), {DuhamelMode::simplex, 2}), exact);
  double e4 = diff(duhamel_exp(F, CDouble(1.0), {DuhamelMode::simplex, 4}), exact);
  CHECK(e4 < e2);
  CHECK(std::log2(e2 / e4) >= 2.0);
}

TEST_CASE("duhamel: exact scalars require a nilpotent curvature") {
  BaseSpec base{1, 0};
  std::vector<int> gr{1, -1};
  QM d(base, gr);
  d(0, 1) = QS::constant(base, q(1));
  d(1, 0) = QS::constant(base, q(1));
  CHECK_THROWS_AS((void)duhamel_exp(d * d, q(1)), std::domain_error);
}

namespace {

// D(y) = [[0, y1 - i y2], [y1 + i y2, 0]], A = dy1 diag(1,2) + dy2 diag(-1,3) + y1 dy2 diag(1,0)
Superconnection<QComplex> toy_family(int jet) {
  BaseSpec b{2, jet};
  std::vector<int> gr{1, -1};
  QS y1 = QS::y(b, 1), y2 = QS::y(b, 2), dy1 = QS::dy(b, 1), dy2 = QS::dy(b, 2);
  QComplex i = ScalarTraits<QComplex>::i();
  QM D(b, gr), A(b, gr);
  D(0, 1) = y1 - y2 * i;
  D(1, 0) = y1 + y2 * i;
  A(0, 0) = dy1 - dy2 + y1 * dy2;
  A(1, 1) = dy1 * q(2) + dy2 * q(3);
  return {D, A};
}

}  // namespace

TEST_CASE("chern form: symbolic closedness and transgression on the toy family") {
  const int K = 6;
  auto B = toy_family(K);
  Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(2, 2);
  std::vector<QS> forms;
  for (QComplex t : {q(1, 2), q(1), q(2)}) {
    ChernResult info;
    QS c = chern_form(B, t, id, &info);
    CHECK(info.phi_commutes);
    CHECK_FALSE(c.degree_part(2).is_zero());
    CHECK(c.degree_part(1).is_zero());
    CHECK(c.d().is_zero());
    forms.push_back(c);
  }
  CHECK_FALSE(forms[0] == forms[2]);
  for (auto [a, b] : {std::pair{0, 1}, std::pair{1, 2}, std::pair{0, 2}}) {
    auto ex = solve_exact(forms[b] - forms[a]);
    CHECK(ex.solvable);
    CHECK(ex.checked_jet == K - 1);
    CHECK((ex.alpha.d() - (forms[b] - forms[a])).jet_at_most(K - 1).is_zero());
  }
  BaseSpec b{2, 3};
  CHECK(solve_exact(QS::dy(b, 1) * QS::dy(b, 2) * QS::y(b, 1)).solvable);
  CHECK_FALSE(solve_exact(QS::constant(b, q(1))).solvable);
  CHECK(solve_exact(QS::dy(b, 1) * QS::y(b, 1)).solvable);
  QS not_closed = QS::dy(b, 1) * QS::y(b, 2);
  CHECK_FALSE(solve_exact(not_closed).solvable);
}

TEST_CASE("chern form: A_plus = 0 reduces to Str[phi exp(-tD^2)], non-commuting phi warns") {
  std::mt19937 rng(5);
  BaseSpec base{2, 0};
  std::vector<int> gr{1, 1, -1, -1};
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(4, 4);
  Eigen::MatrixXcd c = random_block(rng, 2, 2);
  d.block(2, 0, 2, 2) = c;
  d.block(0, 2, 2, 2) = c.adjoint();
  Superconnection<CDouble> B{FM::numeric(base, gr, d), FM(base, gr)};
  Eigen::MatrixXcd phi = Eigen::MatrixXcd::Identity(4, 4);
  FS ch = chern_form(B, CDouble(0.6), phi);
  Eigen::MatrixXcd e = (-0.6 * d * d).exp();
  CDouble str = e(0, 0) + e(1, 1) - e(2, 2) - e(3, 3);
  CHECK(std::abs(ch.constant_term() - str) < 1e-12);
  CHECK(std::abs(str) < 1e-12);  // McKean-Singer for an invertible square block
  CHECK(ch.d().is_zero());
  Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(4, 4);
  p(0, 0) = 1;
  ChernResult info;
  (void)chern_form(B, CDouble(0.6), p, &info);
  CHECK_FALSE(info.phi_commutes);
  CHECK_FALSE(info.warning.empty());
  Eigen::MatrixXcd odd = Eigen::MatrixXcd::Zero(4, 4);
  odd(0, 2) = 1;
  CHECK_THROWS_AS((void)chern_form(B, CDouble(0.6), odd), std::invalid_argument);
}

TEST_CASE("jlo: k = 0 reduction, commuting closed form, degree saturation") {
  std::mt19937 rng(17);
  BaseSpec base{3, 0};
  auto B = random_model(rng, base);
  auto F = curvature(B).F;
  std::vector<int> gr = F.grading();
  Eigen::MatrixXcd phi = Eigen::MatrixXcd::Identity(4, 4);
  double t = 0.9;
  FM P = FM::numeric(base, gr, phi);
  FM E = duhamel_exp(F, CDouble(t));

  FM T0 = FM::numeric(base, gr, random_block(rng, 4, 4)) + B.A_plus.degree_part(1);
  auto r0 = jlo_cochain(B, t, phi, {T0}, 0);
  CHECK(diff(r0.value, (P * T0 * E).supertrace().rescaled(CDouble(t))) < 1e-13);
  auto ones = jlo_cochain(B, t, phi, {FM::identity(base, gr)}, 0);
  CHECK(diff(ones.value, chern_form(B, CDouble(t), phi)) < 1e-13);

  // T_j polynomials in F commute with exp(-sF)
  for (int k : {1, 2}) {
    std::vector<FM> T;
    FM prod = P;
    for (int j = 0; j <= 2 * k; ++j) {
      FM tj = FM::identity(base, gr) * CDouble(1.0 + 0.3 * j) + F * CDouble(0.5 - 0.2 * j);
      T.push_back(tj);
      prod = prod * tj;
    }
    double fact = 1;
    for (int j = 2; j <= 2 * k; ++j) fact *= j;
    FS expect = (prod * E).supertrace().rescaled(CDouble(t)) * CDouble(std::pow(t, k) / fact);
    auto r = jlo_cochain(B, t, phi, T, k, {4, true});
    CHECK(diff(r.value, expect) < 1e-8);
    CHECK(r.error_estimate < 1e-8);
  }

  // 2k+1 inputs of form degree >= 1 exceed the base dimension 3 when k = 2
  std::vector<FM> T;
  for (int j = 0; j < 5; ++j) T.push_back(FM::times_form(FS::dy(base, 1 + j % 3), base, gr, random_block(rng, 4, 4)));
  CHECK(jlo_cochain(B, t, phi, T, 2, {3, false}).value.is_zero());
  CHECK_THROWS_AS((void)jlo_cochain(B, t, phi, {T0}, 1), std::invalid_argument);
}

TEST_CASE("jlo: non-commuting inputs converge with the node count") {
  std::mt19937 rng(23);
  BaseSpec base{2, 0};
  auto full = random_model(rng, BaseSpec{3, 0});
  std::vector<int> gr = full.D.grading();
  Superconnection<CDouble> B{FM::numeric(base, gr, full.D.constant_numeric()), FM(base, gr)};
  Eigen::MatrixXcd phi = Eigen::MatrixXcd::Identity(4, 4);
  std::vector<FM> T;
  for (int j = 0; j < 3; ++j) T.push_back(FM::numeric(base, gr, random_block(rng, 4, 4)));
  auto coarse = jlo_cochain(B, 1.0, phi, T, 1, {4, true});
  auto fine = jlo_cochain(B, 1.0, phi, T, 1, {12, true});
  CHECK(diff(coarse.value, fine.value) < 1e-4);
  CHECK(fine.error_estimate < coarse.error_estimate + 1e-15);
  CHECK(fine.error_estimate < 1e-8);
}

TEST_CASE("grassmann identity for exp(-t(D^2 - zD))") {
  std::mt19937 rng(31);
  std::normal_distribution<double> g(0, 1);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd s(6, 6);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j <= i; ++j) s(i, j) = s(j, i) = g(rng);
    for (double t : {0.1, 1.0, 2.5}) CHECK(grassmann_exp_identity(s.cast<CDouble>(), t).deviation <= 1e-10);
  }
  Eigen::MatrixXcd diag = Eigen::MatrixXcd::Zero(3, 3);
  diag.diagonal() << 0.5, -1.0, 2.0;
  CHECK(grassmann_exp_identity(diag, 0.7).deviation < 1e-14);
  auto zero = grassmann_exp_identity(Eigen::MatrixXcd::Zero(4, 4), 1.0);
  CHECK(zero.deviation == 0);
  CHECK(zero.lhs.P.isIdentity(0));
}

namespace {

// D traceless with vanishing odd moments; Tr(D[M1,M2]) = 0 removes the t^{-1/2} term of the degree-2 part
Superconnection<CDouble> eta_model(BaseSpec base) {
  std::vector<int> gr(4, 1);
  std::mt19937 rng(41);
  auto herm = [&] {
    Eigen::MatrixXcd m = random_block(rng, 4, 4);
    return Eigen::MatrixXcd((m + m.adjoint()) / 2.0);
  };
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(4, 4);
  d.diagonal() << 1, -1, 2, -2;
  Eigen::MatrixXcd m1 = herm(), m2 = herm();
  Eigen::MatrixXcd g = CDouble(0, 1) * (d * m1 - m1 * d);
  m2 -= ((m2 * g).trace() / (g * g).trace()) * g;
  FM A = FM::times_form(FS::dy(base, 1), base, gr, m1) + FM::times_form(FS::dy(base, 2), base, gr, m2);
  return {FM::numeric(base, gr, d), A};
}

}  // namespace

TEST_CASE("eta-form integrand: A_plus = 0 reduction and the two expressions") {
  BaseSpec base{2, 0};
  Eigen::MatrixXcd phi2 = Eigen::MatrixXcd::Identity(2, 2);
  std::vector<int> gr2{1, 1};
  Eigen::MatrixXcd d(2, 2);
  d << 2, 0, 0, -0.5;
  Superconnection<CDouble> B0{FM::numeric(base, gr2, d), FM(base, gr2)};
  for (double t : {0.1, 1.0, 3.0}) {
    auto r = eta_form_integrand(B0, t, phi2);
    Eigen::MatrixXcd m = d * (-t * d * d).exp();
    CHECK(std::abs(r.value.constant_term() - m.trace() / (2 * std::sqrt(t))) < 1e-13);
    CHECK(r.value.max_degree() <= 0);
  }

  auto B = eta_model(base);
  std::vector<int> gr(4, 1);
  Eigen::MatrixXcd phi = Eigen::MatrixXcd::Identity(4, 4);
  for (double t : {0.05, 0.5, 2.0}) {
    auto r = eta_form_integrand(B, t, phi);
    CHECK(r.value.degree_part(2).max_abs() > 0);
    CHECK(r.value.degree_part(1).is_zero());
    CHECK(diff(r.value, r.alternative) < 1e-12);
    CHECK(r.ratio == doctest::Approx(1.0).epsilon(1e-12));
  }

  // with a degree-2 part the two expressions agree once cT4 = -A_2
  auto B2 = B;
  Eigen::MatrixXcd o = Eigen::MatrixXcd::Zero(4, 4);
  o(0, 0) = 0.4;
  o(1, 2) = o(2, 1) = 0.3;
  FM A2 = FM::times_form(FS::dy(base, 1) * FS::dy(base, 2), base, gr, o);
  B2.A_plus += A2;
  auto r2 = eta_form_integrand(B2, 0.7, phi);
  FM cT4 = A2 * CDouble(-1);
  auto r3 = eta_form_integrand(B2, 0.7, phi, &cT4);
  CHECK(diff(r3.value, r3.alternative) < 1e-12);
  CHECK(diff(r2.value, r2.alternative) > 1e-6);
}

TEST_CASE("eta-form integrand: regularity exponents on the rank-2 model") {
  BaseSpec base{2, 0};
  auto B = eta_model(base);
  Eigen::MatrixXcd phi = Eigen::MatrixXcd::Identity(4, 4);
  auto slope = [&](double t0, double t1) {
    // least squares over 9 log-spaced points across two decades
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int m = 9;
    for (int i = 0; i < m; ++i) {
      double t = t0 * std::pow(t1 / t0, double(i) / (m - 1));
      double v = eta_form_integrand(B, t, phi).value.max_abs();
      double x = std::log(t), y = std::log(v);
      sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
  };
  double small = slope(1e-4, 1e-2), large = slope(1.0, 1e2);
  CHECK(small >= 0.45);
  CHECK(large <= -1.45);
}
