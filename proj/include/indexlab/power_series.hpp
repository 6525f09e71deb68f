#pragma once

#include <limits>
#include <string>
#include <vector>

#include "indexlab/scalar.hpp"

namespace indexlab {

// Truncated power series sum_k c[k] x^k with rational coefficients.
struct PowerSeries {
  std::vector<Rational> c;
  double radius = std::numeric_limits<double>::infinity();
  std::string name;

  int order() const { return static_cast<int>(c.size()) - 1; }
  Rational at(int k) const { return k < static_cast<int>(c.size()) ? c[k] : Rational(0); }
};

namespace series {

PowerSeries exp(int order);
PowerSeries log1p(int order);            // log(1 + x)
PowerSeries sinh_over_x(int order);      // sinh(x)/x
PowerSeries x_over_sinh(int order);      // x/sinh(x)
PowerSeries x_coth(int order);           // x coth(x)
PowerSeries binomial(const Rational& r, int order);  // (1 + x)^r

PowerSeries mul(const PowerSeries& a, const PowerSeries& b, int order);
PowerSeries reciprocal(const PowerSeries& a, int order);
// f(g(x)), requires g(0) = 0.
PowerSeries compose(const PowerSeries& f, const PowerSeries& g, int order);
// f(s x).
PowerSeries scale(const PowerSeries& f, const Rational& s);

Rational factorial(int k);
std::vector<Rational> bernoulli(int count);

}  // namespace series
}  // namespace indexlab
