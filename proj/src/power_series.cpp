#include "indexlab/power_series.hpp"

#include <cmath>
#include <stdexcept>

namespace indexlab::series {

Rational factorial(int k) {
  mpz_class f;
  mpz_fac_ui(f.get_mpz_t(), static_cast<unsigned long>(k));
  return Rational(f);
}

std::vector<Rational> bernoulli(int count) {
  // B_0..B_{count-1}, B_1 = -1/2
  std::vector<Rational> b(count);
  for (int m = 0; m < count; ++m) {
    Rational s = 0;
    for (int k = 0; k < m; ++k) {
      mpz_class binom;
      mpz_bin_uiui(binom.get_mpz_t(), m + 1, k);
      s += Rational(binom) * b[k];
    }
    b[m] = m == 0 ? Rational(1) : Rational(-s / (m + 1));
  }
  return b;
}

PowerSeries exp(int order) {
  PowerSeries p{{}, std::numeric_limits<double>::infinity(), "exp"};
  for (int k = 0; k <= order; ++k) p.c.push_back(1 / factorial(k));
  return p;
}

PowerSeries log1p(int order) {
  PowerSeries p{{Rational(0)}, 1.0, "log1p"};
  for (int k = 1; k <= order; ++k) p.c.push_back(Rational(k % 2 ? 1 : -1, k));
  return p;
}

PowerSeries sinh_over_x(int order) {
  PowerSeries p{{}, std::numeric_limits<double>::infinity(), "sinh(x)/x"};
  for (int k = 0; k <= order; ++k) p.c.push_back(k % 2 ? Rational(0) : 1 / factorial(k + 1));
  return p;
}

PowerSeries x_over_sinh(int order) {
  PowerSeries p = reciprocal(sinh_over_x(order), order);
  p.radius = M_PI;
  p.name = "x/sinh(x)";
  return p;
}

PowerSeries x_coth(int order) {
  // x coth x = sum B_{2k} (2x)^{2k} / (2k)!
  auto b = bernoulli(order + 1);
  PowerSeries p{{}, M_PI, "x coth(x)"};
  for (int k = 0; k <= order; ++k) {
    if (k % 2) {
      p.c.push_back(0);
      continue;
    }
    mpz_class two;
    mpz_ui_pow_ui(two.get_mpz_t(), 2, static_cast<unsigned long>(k));
    p.c.push_back(b[k] * Rational(two) / factorial(k));
  }
  return p;
}

PowerSeries binomial(const Rational& r, int order) {
  PowerSeries p{{Rational(1)}, 1.0, "binomial"};
  Rational c = 1;
  for (int k = 1; k <= order; ++k) {
    c = c * (r - (k - 1)) / k;
    p.c.push_back(c);
  }
  return p;
}

PowerSeries mul(const PowerSeries& a, const PowerSeries& b, int order) {
  PowerSeries p{std::vector<Rational>(order + 1, Rational(0)), std::min(a.radius, b.radius), a.name + "*" + b.name};
  for (int i = 0; i <= order && i < static_cast<int>(a.c.size()); ++i)
    for (int j = 0; i + j <= order && j < static_cast<int>(b.c.size()); ++j) p.c[i + j] += a.c[i] * b.c[j];
  return p;
}

PowerSeries reciprocal(const PowerSeries& a, int order) {
  if (a.c.empty() || sgn(a.c[0]) == 0) throw std::domain_error("reciprocal: zero constant term");
  PowerSeries p{std::vector<Rational>(order + 1, Rational(0)), a.radius, "1/(" + a.name + ")"};
  p.c[0] = 1 / a.c[0];
  for (int k = 1; k <= order; ++k) {
    Rational s = 0;
    for (int j = 1; j <= k; ++j) s += a.at(j) * p.c[k - j];
    p.c[k] = -s / a.c[0];
  }
  return p;
}

PowerSeries compose(const PowerSeries& f, const PowerSeries& g, int order) {
  if (!g.c.empty() && sgn(g.c[0]) != 0) throw std::domain_error("compose: inner series must vanish at 0");
  PowerSeries result{std::vector<Rational>(order + 1, Rational(0)), g.radius, f.name + "(" + g.name + ")"};
  PowerSeries power{{Rational(1)}, g.radius, ""};
  for (int k = 0; k <= order; ++k) {
    Rational fk = f.at(k);
    if (sgn(fk) != 0)
      for (int j = 0; j <= order && j < static_cast<int>(power.c.size()); ++j) result.c[j] += fk * power.c[j];
    power = mul(power, g, order);
  }
  return result;
}

PowerSeries scale(const PowerSeries& f, const Rational& s) {
  PowerSeries p = f;
  if (sgn(s) != 0) p.radius = f.radius / std::abs(s.get_d());
  Rational sk = 1;
  for (auto& c : p.c) {
    c *= sk;
    sk *= s;
  }
  return p;
}

}  // namespace indexlab::series
