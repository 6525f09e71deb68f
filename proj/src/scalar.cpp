#include "indexlab/scalar.hpp"

#include <cmath>
#include <sstream>

namespace indexlab {

std::string to_string(const Rational& q) { return q.get_str(); }

std::string to_string(const QComplex& z) {
  if (sgn(z.im) == 0) return z.re.get_str();
  if (sgn(z.re) == 0) return z.im.get_str() + "i";
  std::string im = z.im.get_str();
  if (im[0] != '-') im = "+" + im;
  return z.re.get_str() + im + "i";
}

std::string to_string(const CDouble& z) {
  std::ostringstream os;
  os.precision(17);
  if (z.imag() == 0.0) {
    os << z.real();
  } else {
    os << z.real() << (z.imag() < 0 ? "" : "+") << z.imag() << "i";
  }
  return os.str();
}

Rational parse_rational(const std::string& s) {
  if (s.find_first_of(".eE") != std::string::npos) {
    // decimal literal: exact binary value is not intended, read as decimal fraction
    std::size_t epos = s.find_first_of("eE");
    std::string mant = s.substr(0, epos);
    long ex = epos == std::string::npos ? 0 : std::stol(s.substr(epos + 1));
    std::size_t dot = mant.find('.');
    std::string digits = mant;
    if (dot != std::string::npos) {
      ex -= static_cast<long>(mant.size() - dot - 1);
      digits = mant.substr(0, dot) + mant.substr(dot + 1);
    }
    mpz_class num(digits.empty() || digits == "-" || digits == "+" ? "0" : digits, 10);
    mpz_class p10;
    mpz_ui_pow_ui(p10.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(ex)));
    Rational r = ex >= 0 ? Rational(num * p10) : Rational(num, p10);
    r.canonicalize();
    return r;
  }
  Rational r;
  if (r.set_str(s, 10) != 0) throw std::invalid_argument("malformed rational: " + s);
  r.canonicalize();
  return r;
}

std::optional<Rational> exact_sqrt(const Rational& q) {
  if (sgn(q) < 0) return std::nullopt;
  const mpz_class& n = q.get_num();
  const mpz_class& d = q.get_den();
  if (!mpz_perfect_square_p(n.get_mpz_t()) || !mpz_perfect_square_p(d.get_mpz_t())) return std::nullopt;
  mpz_class rn, rd;
  mpz_sqrt(rn.get_mpz_t(), n.get_mpz_t());
  mpz_sqrt(rd.get_mpz_t(), d.get_mpz_t());
  return Rational(rn, rd);
}

Angle Angle::pi_fraction(long p, long q) {
  Rational r(p, q);
  r.canonicalize();
  return {M_PI * r.get_d(), r};
}

Angle half(const Angle& a) {
  Angle h{a.radians / 2, std::nullopt};
  if (a.over_pi) h.over_pi = *a.over_pi / 2;
  return h;
}

namespace {

// Reduce r (multiple of pi) into [0, 2) and return it when its sine and cosine are rational.
std::optional<Rational> reduced(const Angle& a) {
  if (!a.over_pi) return std::nullopt;
  Rational r = *a.over_pi;
  mpz_class fl;
  Rational half_r = r / 2;
  mpz_fdiv_q(fl.get_mpz_t(), half_r.get_num_mpz_t(), half_r.get_den_mpz_t());
  r -= Rational(2 * fl);
  return r;
}

}  // namespace

std::optional<Rational> exact_cos(const Angle& a) {
  auto r = reduced(a);
  if (!r) return std::nullopt;
  const Rational& x = *r;
  if (x == 0) return Rational(1);
  if (x == Rational(1, 2) || x == Rational(3, 2)) return Rational(0);
  if (x == 1) return Rational(-1);
  if (x == Rational(1, 3) || x == Rational(5, 3)) return Rational(1, 2);
  if (x == Rational(2, 3) || x == Rational(4, 3)) return Rational(-1, 2);
  return std::nullopt;
}

std::optional<Rational> exact_sin(const Angle& a) {
  auto r = reduced(a);
  if (!r) return std::nullopt;
  const Rational& x = *r;
  if (x == 0 || x == 1) return Rational(0);
  if (x == Rational(1, 2)) return Rational(1);
  if (x == Rational(3, 2)) return Rational(-1);
  if (x == Rational(1, 6) || x == Rational(5, 6)) return Rational(1, 2);
  if (x == Rational(7, 6) || x == Rational(11, 6)) return Rational(-1, 2);
  return std::nullopt;
}

template <>
QComplex cos_of<QComplex>(const Angle& a) {
  auto c = exact_cos(a);
  if (!c) throw std::domain_error("cosine not rational for this angle; use float mode");
  return QComplex(*c);
}
template <>
QComplex sin_of<QComplex>(const Angle& a) {
  auto s = exact_sin(a);
  if (!s) throw std::domain_error("sine not rational for this angle; use float mode");
  return QComplex(*s);
}
template <>
CDouble cos_of<CDouble>(const Angle& a) {
  if (auto c = exact_cos(a)) return c->get_d();
  return std::cos(a.radians);
}
template <>
CDouble sin_of<CDouble>(const Angle& a) {
  if (auto s = exact_sin(a)) return s->get_d();
  return std::sin(a.radians);
}

}  // namespace indexlab
