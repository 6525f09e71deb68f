#pragma once

#include <gmpxx.h>

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>

namespace indexlab {

using Rational = mpq_class;
using CDouble = std::complex<double>;

// Exact complex rational re + i*im.
class QComplex {
 public:
  Rational re, im;

  QComplex() : re(0), im(0) {}
  QComplex(long v) : re(v), im(0) {}  // NOLINT
  QComplex(Rational r) : re(std::move(r)), im(0) {}  // NOLINT
  QComplex(Rational r, Rational i) : re(std::move(r)), im(std::move(i)) {}

  bool is_zero() const { return sgn(re) == 0 && sgn(im) == 0; }
  QComplex conj() const { return {re, -im}; }

  QComplex& operator+=(const QComplex& o) { re += o.re; im += o.im; return *this; }
  QComplex& operator-=(const QComplex& o) { re -= o.re; im -= o.im; return *this; }
  QComplex& operator*=(const QComplex& o) {
    Rational r = re * o.re - im * o.im;
    Rational i = re * o.im + im * o.re;
    re = std::move(r);
    im = std::move(i);
    return *this;
  }
  QComplex& operator/=(const QComplex& o) {
    Rational d = o.re * o.re + o.im * o.im;
    if (sgn(d) == 0) throw std::domain_error("QComplex: division by zero");
    Rational r = (re * o.re + im * o.im) / d;
    Rational i = (im * o.re - re * o.im) / d;
    re = std::move(r);
    im = std::move(i);
    return *this;
  }
  QComplex operator-() const { return {-re, -im}; }

  friend QComplex operator+(QComplex a, const QComplex& b) { return a += b; }
  friend QComplex operator-(QComplex a, const QComplex& b) { return a -= b; }
  friend QComplex operator*(QComplex a, const QComplex& b) { return a *= b; }
  friend QComplex operator/(QComplex a, const QComplex& b) { return a /= b; }
  friend bool operator==(const QComplex& a, const QComplex& b) { return a.re == b.re && a.im == b.im; }
  friend bool operator!=(const QComplex& a, const QComplex& b) { return !(a == b); }
};

std::string to_string(const Rational& q);
std::string to_string(const QComplex& z);
std::string to_string(const CDouble& z);
Rational parse_rational(const std::string& s);

// Exact square root of a non-negative rational, if it is a perfect square.
std::optional<Rational> exact_sqrt(const Rational& q);

template <class S>
struct ScalarTraits;

template <>
struct ScalarTraits<QComplex> {
  static constexpr bool exact = true;
  static constexpr const char* name = "exact";
  static QComplex zero() { return QComplex(); }
  static QComplex one() { return QComplex(1); }
  static QComplex i() { return QComplex(Rational(0), Rational(1)); }
  static QComplex from_rational(const Rational& q) { return QComplex(q); }
  static QComplex from_int(long v) { return QComplex(v); }
  static QComplex from_real(double) {
    throw std::domain_error("transcendental value requested in exact mode; use float mode");
  }
  static bool is_zero(const QComplex& z) { return z.is_zero(); }
  static CDouble to_complex(const QComplex& z) { return {z.re.get_d(), z.im.get_d()}; }
  static double abs(const QComplex& z) { return std::abs(to_complex(z)); }
  static QComplex conj(const QComplex& z) { return z.conj(); }
};

template <>
struct ScalarTraits<CDouble> {
  static constexpr bool exact = false;
  static constexpr const char* name = "float";
  static CDouble zero() { return 0.0; }
  static CDouble one() { return 1.0; }
  static CDouble i() { return {0.0, 1.0}; }
  static CDouble from_rational(const Rational& q) { return q.get_d(); }
  static CDouble from_int(long v) { return static_cast<double>(v); }
  static CDouble from_real(double v) { return v; }
  static bool is_zero(const CDouble& z) { return z == 0.0; }
  static CDouble to_complex(const CDouble& z) { return z; }
  static double abs(const CDouble& z) { return std::abs(z); }
  static CDouble conj(const CDouble& z) { return std::conj(z); }
};

template <class S>
S ipow(S base, int e) {
  S r = ScalarTraits<S>::one();
  if (e < 0) {
    base = ScalarTraits<S>::one() / base;
    e = -e;
  }
  while (e > 0) {
    if (e & 1) r *= base;
    base *= base;
    e >>= 1;
  }
  return r;
}

// Rotation angle carried as radians plus, when known, the exact multiple of pi.
struct Angle {
  double radians = 0.0;
  std::optional<Rational> over_pi;

  static Angle pi_fraction(long p, long q);
  static Angle from_radians(double r) { return {r, std::nullopt}; }
};

// cos/sin as a scalar: exact when the value is rational, float otherwise.
template <class S>
S cos_of(const Angle& a);
template <class S>
S sin_of(const Angle& a);

std::optional<Rational> exact_cos(const Angle& a);
std::optional<Rational> exact_sin(const Angle& a);
Angle half(const Angle& a);

}  // namespace indexlab
