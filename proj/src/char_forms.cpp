#include "indexlab/char_forms.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace indexlab {

// ---------------------------------------------------------------------------
// RingMatrix

template <class S>
RingMatrix<S>::RingMatrix(ContextPtr ctx, int rows, int cols)
    : ctx_(std::move(ctx)), rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols), GradedElement<S>(ctx_)) {}

template <class S>
RingMatrix<S> RingMatrix<S>::identity(ContextPtr ctx, int k) {
  RingMatrix m(ctx, k, k);
  for (int i = 0; i < k; ++i) m(i, i) = GradedElement<S>::scalar(ctx, ScalarTraits<S>::one());
  return m;
}

template <class S>
RingMatrix<S> RingMatrix<S>::numeric(ContextPtr ctx, int rows, int cols, const std::vector<S>& row_major) {
  if (static_cast<int>(row_major.size()) != rows * cols) throw std::invalid_argument("RingMatrix::numeric: size");
  RingMatrix m(ctx, rows, cols);
  for (int i = 0; i < rows * cols; ++i) m.data_[i] = GradedElement<S>::scalar(ctx, row_major[i]);
  return m;
}

template <class S>
RingMatrix<S>& RingMatrix<S>::operator+=(const RingMatrix& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw std::invalid_argument("RingMatrix: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

template <class S>
RingMatrix<S>& RingMatrix<S>::operator-=(const RingMatrix& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw std::invalid_argument("RingMatrix: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

template <class S>
RingMatrix<S>& RingMatrix<S>::operator*=(const S& c) {
  for (auto& e : data_) e *= c;
  return *this;
}

template <class S>
RingMatrix<S> RingMatrix<S>::times(const RingMatrix& o) const {
  if (cols_ != o.rows_) throw std::invalid_argument("RingMatrix: product shape mismatch");
  RingMatrix r(ctx_, rows_, o.cols_);
  for (int i = 0; i < rows_; ++i)
    for (int k = 0; k < cols_; ++k) {
      const auto& a = (*this)(i, k);
      if (a.is_zero()) continue;
      for (int j = 0; j < o.cols_; ++j) {
        const auto& b = o(k, j);
        if (!b.is_zero()) r(i, j) += mul(a, b);
      }
    }
  return r;
}

template <class S>
RingMatrix<S> RingMatrix<S>::scaled(const GradedElement<S>& u) const {
  RingMatrix r(*this);
  for (auto& e : r.data_) e = mul(u, e);
  return r;
}

template <class S>
GradedElement<S> RingMatrix<S>::trace() const {
  GradedElement<S> t(ctx_);
  for (int i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
  return t;
}

template <class S>
RingMatrix<S> RingMatrix<S>::transpose() const {
  RingMatrix r(ctx_, cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
  return r;
}

template <class S>
std::vector<S> RingMatrix<S>::constant_part() const {
  std::vector<S> r;
  r.reserve(data_.size());
  for (const auto& e : data_) r.push_back(e.constant_term());
  return r;
}

template <class S>
RingMatrix<S> RingMatrix<S>::nilpotent_part() const {
  RingMatrix r(*this);
  for (auto& e : r.data_) e -= GradedElement<S>::scalar(ctx_, e.constant_term());
  return r;
}

template <class S>
bool RingMatrix<S>::is_nilpotent() const {
  for (const auto& e : data_)
    if (!ScalarTraits<S>::is_zero(e.constant_term())) return false;
  return true;
}

template <class S>
bool RingMatrix<S>::is_zero() const {
  for (const auto& e : data_)
    if (!e.is_zero()) return false;
  return true;
}

template <class S>
bool RingMatrix<S>::is_antisymmetric() const {
  if (rows_ != cols_) return false;
  for (int i = 0; i < rows_; ++i)
    for (int j = i; j < cols_; ++j)
      if (!((*this)(i, j) + (*this)(j, i)).is_zero()) return false;
  return true;
}

template <class S>
bool RingMatrix<S>::is_even() const {
  for (const auto& e : data_)
    if (!e.is_even()) return false;
  return true;
}

template <class S>
RingMatrix<S> RingMatrix<S>::truncated(int cap) const {
  if (cap < 0) return *this;
  RingMatrix r(*this);
  for (auto& e : r.data_) e = e.truncated(cap);
  return r;
}

template <class S>
RingMatrix<S> RingMatrix<S>::block(int r0, int c0, int nr, int nc) const {
  RingMatrix r(ctx_, nr, nc);
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < nc; ++j) r(i, j) = (*this)(r0 + i, c0 + j);
  return r;
}

template <class S>
double RingMatrix<S>::max_abs() const {
  double m = 0;
  for (const auto& e : data_)
    for (const auto& [mask, c] : e.terms()) m = std::max(m, ScalarTraits<S>::abs(c));
  return m;
}

template class RingMatrix<QComplex>;
template class RingMatrix<CDouble>;

// ---------------------------------------------------------------------------
// Scalar functions

int nilpotency_order(const AlgebraContext& ctx) { return ctx.generator_count() / 2 + 1; }

namespace {

template <class S>
GradedElement<S> cap_to(const GradedElement<S>& u, int cap) {
  return cap < 0 ? u : u.truncated(cap);
}

template <class S>
void split(const GradedElement<S>& u, S& c, GradedElement<S>& n) {
  c = u.constant_term();
  n = u - GradedElement<S>::scalar(u.context(), c);
}

}  // namespace

template <class S>
GradedElement<S> apply_series(const PowerSeries& f, const GradedElement<S>& nilpotent, int cap) {
  if (!ScalarTraits<S>::is_zero(nilpotent.constant_term()))
    throw std::invalid_argument("apply_series: argument must be nilpotent");
  GradedElement<S> result = GradedElement<S>::scalar(nilpotent.context(), ScalarTraits<S>::from_rational(f.at(0)));
  GradedElement<S> power = GradedElement<S>::scalar(nilpotent.context(), ScalarTraits<S>::one());
  for (int k = 1;; ++k) {
    power = cap_to(mul(power, nilpotent), cap);
    if (power.is_zero()) break;
    if (k > f.order()) throw std::domain_error("apply_series: series order too small for nilpotency index");
    result += power * ScalarTraits<S>::from_rational(f.at(k));
  }
  return result;
}

template <class S>
GradedElement<S> elem_exp(const GradedElement<S>& u, int cap) {
  S c;
  GradedElement<S> n;
  split(u, c, n);
  S ec = ScalarTraits<S>::one();
  if (!ScalarTraits<S>::is_zero(c)) {
    if constexpr (ScalarTraits<S>::exact) {
      throw std::domain_error("exp of a nonzero constant is not exact; use float mode");
    } else {
      ec = std::exp(c);
    }
  }
  return apply_series(series::exp(nilpotency_order(u.ctx())), n, cap) * ec;
}

template <class S>
GradedElement<S> elem_log(const GradedElement<S>& u, int cap) {
  S c;
  GradedElement<S> n;
  split(u, c, n);
  if (ScalarTraits<S>::is_zero(c)) throw std::domain_error("log of a nilpotent element");
  S lc = ScalarTraits<S>::zero();
  if (c != ScalarTraits<S>::one()) {
    if constexpr (ScalarTraits<S>::exact) {
      throw std::domain_error("log of a constant other than 1 is not exact; use float mode");
    } else {
      lc = std::log(c);
    }
  }
  n *= ScalarTraits<S>::one() / c;
  return apply_series(series::log1p(nilpotency_order(u.ctx())), n, cap) +
         GradedElement<S>::scalar(u.context(), lc);
}

namespace {

template <class S>
S constant_power(const S& c, const Rational& r) {
  if constexpr (ScalarTraits<S>::exact) {
    if (r.get_den() == 1) return ipow(c, static_cast<int>(r.get_num().get_si()));
    if (r.get_den() == 2 && sgn(c.im) == 0 && sgn(c.re) > 0) {
      auto root = exact_sqrt(c.re);
      if (!root) throw std::domain_error("square root of " + c.re.get_str() + " is irrational; use float mode");
      return ipow(QComplex(*root), static_cast<int>(r.get_num().get_si()));
    }
    throw std::domain_error("fractional power not exact; use float mode");
  } else {
    double e = r.get_d();
    if (c.imag() == 0.0 && c.real() > 0) return std::pow(c.real(), e);
    return std::pow(c, e);
  }
}

}  // namespace

template <class S>
GradedElement<S> elem_pow(const GradedElement<S>& u, const Rational& r, int cap) {
  S c;
  GradedElement<S> n;
  split(u, c, n);
  if (ScalarTraits<S>::is_zero(c)) throw std::domain_error("power of a nilpotent element");
  S cr = constant_power(c, r);
  n *= ScalarTraits<S>::one() / c;
  return apply_series(series::binomial(r, nilpotency_order(u.ctx())), n, cap) * cr;
}

template <class S>
GradedElement<S> elem_inverse(const GradedElement<S>& u, int cap) {
  return elem_pow(u, Rational(-1), cap);
}

// ---------------------------------------------------------------------------
// Matrix functions

namespace {

template <class S>
Eigen::MatrixXcd numeric_matrix(const RingMatrix<S>& M) {
  Eigen::MatrixXcd m(M.rows(), M.cols());
  auto c = M.constant_part();
  for (int i = 0; i < M.rows(); ++i)
    for (int j = 0; j < M.cols(); ++j) m(i, j) = ScalarTraits<S>::to_complex(c[i * M.cols() + j]);
  return m;
}

}  // namespace

template <class S>
RingMatrix<S> matrix_function(const PowerSeries& f, const RingMatrix<S>& M, int cap) {
  if (M.rows() != M.cols()) throw std::invalid_argument("matrix_function: square matrix required");
  const int k = M.rows();
  RingMatrix<S> result = RingMatrix<S>::identity(M.context(), k) * ScalarTraits<S>::from_rational(f.at(0));
  RingMatrix<S> power = RingMatrix<S>::identity(M.context(), k);
  if (M.is_nilpotent()) {
    for (int j = 1;; ++j) {
      power = (power * M).truncated(cap);
      if (power.is_zero()) break;
      if (j > f.order()) throw std::domain_error("matrix_function: series order too small for nilpotency index");
      result += power * ScalarTraits<S>::from_rational(f.at(j));
    }
    return result;
  }
  if constexpr (ScalarTraits<S>::exact) {
    throw std::domain_error("matrix_function: numeric part requires float mode");
  } else {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(numeric_matrix(M), false);
    double rho = es.eigenvalues().cwiseAbs().maxCoeff();
    if (!(rho < f.radius)) throw std::domain_error("matrix_function: numeric part outside convergence domain");
    double last = 0;
    for (int j = 1; j <= f.order(); ++j) {
      power = (power * M).truncated(cap);
      RingMatrix<S> term = power * ScalarTraits<S>::from_rational(f.at(j));
      last = term.max_abs();
      result += term;
    }
    if (last > 1e-15 * std::max(1.0, result.max_abs()))
      throw std::domain_error("matrix_function: series not converged at the requested order");
    return result;
  }
}

template <class S>
RingMatrix<S> matrix_exp(const RingMatrix<S>& M, int cap) {
  if (M.is_nilpotent()) return matrix_function(series::exp(nilpotency_order(*M.context()) + 1), M, cap);
  if constexpr (ScalarTraits<S>::exact) {
    throw std::domain_error("matrix_exp: numeric part requires float mode");
  } else {
    double norm = numeric_matrix(M).cwiseAbs().rowwise().sum().maxCoeff();
    int s = norm > 0.5 ? static_cast<int>(std::ceil(std::log2(norm / 0.5))) : 0;
    RingMatrix<S> scaled = M * CDouble(std::ldexp(1.0, -s));
    RingMatrix<S> e = matrix_function(series::exp(40), scaled, cap);
    for (int i = 0; i < s; ++i) e = (e * e).truncated(cap);
    return e;
  }
}

template <class S>
GradedElement<S> ring_det(const RingMatrix<S>& M, int cap) {
  if (M.rows() != M.cols()) throw std::invalid_argument("ring_det: square matrix required");
  const int k = M.rows();
  if (k == 0) return GradedElement<S>::scalar(M.context(), ScalarTraits<S>::one());
  RingMatrix<S> a = M;
  GradedElement<S> det = GradedElement<S>::scalar(M.context(), ScalarTraits<S>::one());
  for (int col = 0; col < k; ++col) {
    int piv = -1;
    double best = 0;
    for (int r = col; r < k; ++r) {
      double v = ScalarTraits<S>::abs(a(r, col).constant_term());
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (piv < 0) {
      // no unit pivot: cofactor expansion of the remaining block along this column
      GradedElement<S> rest(M.context());
      int m = k - col;
      RingMatrix<S> sub = a.block(col, col, m, m);
      for (int r = 0; r < m; ++r) {
        if (sub(r, 0).is_zero()) continue;
        RingMatrix<S> minor(M.context(), m - 1, m - 1);
        for (int i = 0, ii = 0; i < m; ++i) {
          if (i == r) continue;
          for (int j = 1; j < m; ++j) minor(ii, j - 1) = sub(i, j);
          ++ii;
        }
        GradedElement<S> term = mul(sub(r, 0), ring_det(minor, cap));
        if (r % 2) rest -= term;
        else rest += term;
      }
      return cap_to(mul(det, rest), cap);
    }
    if (piv != col) {
      for (int j = 0; j < k; ++j) std::swap(a(piv, j), a(col, j));
      det = -det;
    }
    GradedElement<S> p = a(col, col);
    GradedElement<S> pinv = elem_inverse(p, cap);
    det = cap_to(mul(det, p), cap);
    for (int r = col + 1; r < k; ++r) {
      if (a(r, col).is_zero()) continue;
      GradedElement<S> f = cap_to(mul(a(r, col), pinv), cap);
      for (int j = col; j < k; ++j) a(r, j) = cap_to(a(r, j) - mul(f, a(col, j)), cap);
    }
  }
  return det;
}

template <class S>
GradedElement<S> det_sqrt(const RingMatrix<S>& M, int cap) {
  return elem_pow(ring_det(M, cap), Rational(1, 2), cap);
}

// ---------------------------------------------------------------------------
// Characteristic forms

template <class S>
RingMatrix<S> IsometryNormalAction::matrix(ContextPtr ctx) const {
  int b = this->b();
  RingMatrix<S> m(ctx, b, b);
  for (std::size_t j = 0; j < angles.size(); ++j) {
    int p = 2 * static_cast<int>(j);
    S c = cos_of<S>(angles[j]), s = sin_of<S>(angles[j]);
    m(p, p) = GradedElement<S>::scalar(ctx, c);
    m(p + 1, p) = GradedElement<S>::scalar(ctx, s);
    m(p, p + 1) = GradedElement<S>::scalar(ctx, -s);
    m(p + 1, p + 1) = GradedElement<S>::scalar(ctx, c);
  }
  return m;
}

std::string IsometryNormalAction::branch() const {
  bool positive = true;
  for (const auto& th : angles) positive = positive && std::sin(th.radians / 2) > 0;
  return positive ? "positive branch: det^{-1/2}(1-phi^N) = prod (2 sin(theta_j/2))^{-1} > 0"
                  : "lift branch: det^{-1/2}(1-phi^N) = prod (2 sin(theta_j/2))^{-1} (negative factors kept)";
}

namespace {

PowerSeries log_sinh_ratio(int order) {
  // log(sinh(x/2)/(x/2))
  PowerSeries g = series::scale(series::sinh_over_x(order), Rational(1, 2));
  g.c[0] = 0;
  PowerSeries l = series::compose(series::log1p(order), g, order);
  l.radius = 2 * M_PI;
  return l;
}

}  // namespace

template <class S>
GradedElement<S> a_hat(const CurvatureMatrix<S>& R, int cap) {
  if (!R.is_antisymmetric()) throw std::invalid_argument("a_hat: curvature must be antisymmetric");
  if (!R.is_even()) throw std::invalid_argument("a_hat: entries must be even forms");
  int order = R.is_nilpotent() ? nilpotency_order(*R.context()) : 60;
  GradedElement<S> T = matrix_function(log_sinh_ratio(order), R, cap).trace();
  return elem_exp(T * ScalarTraits<S>::from_rational(Rational(-1, 2)), cap);
}

template <class S>
GradedElement<S> nu_phi(const IsometryNormalAction& phi, const CurvatureMatrix<S>& R_N, int cap) {
  const int b = phi.b();
  if (R_N.rows() != b || R_N.cols() != b) throw std::invalid_argument("nu_phi: R_N size must equal b");
  if (!R_N.is_antisymmetric()) throw std::invalid_argument("nu_phi: R_N must be antisymmetric");
  auto ctx = R_N.context();
  S det_half = det_half_one_minus<S>(phi.angles);  // throws on degenerate action
  RingMatrix<S> P = phi.matrix<S>(ctx);
  // X0^{-1} for X0 = 1 - phi, block-wise
  RingMatrix<S> X0inv(ctx, b, b);
  for (std::size_t j = 0; j < phi.angles.size(); ++j) {
    int p = 2 * static_cast<int>(j);
    S c = cos_of<S>(phi.angles[j]), s = sin_of<S>(phi.angles[j]);
    S d = ScalarTraits<S>::from_int(2) - ScalarTraits<S>::from_int(2) * c;
    S one_c = (ScalarTraits<S>::one() - c) / d;
    S sd = s / d;
    X0inv(p, p) = GradedElement<S>::scalar(ctx, one_c);
    X0inv(p, p + 1) = GradedElement<S>::scalar(ctx, -sd);
    X0inv(p + 1, p) = GradedElement<S>::scalar(ctx, sd);
    X0inv(p + 1, p + 1) = GradedElement<S>::scalar(ctx, one_c);
  }
  RingMatrix<S> E = matrix_exp(R_N * ScalarTraits<S>::from_int(-1), cap);
  RingMatrix<S> N = P * (RingMatrix<S>::identity(ctx, b) - E);
  RingMatrix<S> Y = (X0inv * N).truncated(cap);
  int order = Y.is_nilpotent() ? nilpotency_order(*ctx) : 200;
  GradedElement<S> T = matrix_function(series::log1p(order), Y, cap).trace();
  return elem_exp(T * ScalarTraits<S>::from_rational(Rational(-1, 2)), cap) * (ScalarTraits<S>::one() / det_half);
}

template <class S>
GradedElement<S> chern_character(const RingMatrix<S>& C, const RingMatrix<S>* action, int cap) {
  RingMatrix<S> E = matrix_exp(C * ScalarTraits<S>::from_int(-1), cap);
  if (action) E = *action * E;
  return E.trace();
}

template <class S>
GradedElement<CDouble> to_float(const GradedElement<S>& a) {
  GradedElement<CDouble> r(a.context());
  for (const auto& [m, c] : a.terms()) r.add_term(m, ScalarTraits<S>::to_complex(c));
  return r;
}

template <class S>
GradedElement<CDouble> ScaledForm<S>::evaluate() const {
  return to_float(coeff) * CDouble(std::pow(M_PI, pi_power));
}

template <class S>
ScaledForm<S> equivariant_index_density(const CurvatureMatrix<S>& R_fix, const IsometryNormalAction& phi,
                                        const CurvatureMatrix<S>& R_N, int a, int n, const Twist<S>* twist) {
  if (a + phi.b() != n) throw std::invalid_argument("equivariant_index_density: a + b != n");
  if (R_fix.rows() != a) throw std::invalid_argument("equivariant_index_density: R_fix must be a x a");
  if (a % 2 || n % 2) throw std::invalid_argument("equivariant_index_density: a and n must be even");
  auto ctx = R_fix.context();
  if (ctx->fiber() != FiberMode::exterior || ctx->n() != n)
    throw std::invalid_argument("equivariant_index_density: context must be exterior with fiber dimension n");
  GradedElement<S> P = a_hat(R_fix);
  if (phi.b() > 0) P = mul(P, nu_phi(phi, R_N));
  if (twist) P = mul(P, chern_character(twist->curvature, twist->action ? &*twist->action : nullptr));
  S pre = ipow(S(-ScalarTraits<S>::i()), n / 2) * ipow(ScalarTraits<S>::from_int(2), -(a / 2));
  return {berezin(P, a, BerezinMode::star_zero) * pre, -(a / 2)};
}

template <class S>
ScaledForm<S> ahat_index_density(const CurvatureMatrix<S>& R, int n) {
  if (n % 2) throw std::invalid_argument("ahat_index_density: n must be even");
  S pre = ipow(S(ScalarTraits<S>::from_int(2) * ScalarTraits<S>::i()), -(n / 2));
  return {berezin(a_hat(R), n, BerezinMode::full) * pre, -(n / 2)};
}

QComplex prefactor_ratio(int n) {
  QComplex mi(Rational(0), Rational(-1)), two_i(Rational(0), Rational(2));
  return ipow(mi, n / 2) * ipow(QComplex(2), -(n / 2)) / ipow(two_i, -(n / 2));
}

#define INDEXLAB_CHAR_FORMS(S)                                                                                    \
  template GradedElement<S> apply_series(const PowerSeries&, const GradedElement<S>&, int);                      \
  template GradedElement<S> elem_exp(const GradedElement<S>&, int);                                              \
  template GradedElement<S> elem_log(const GradedElement<S>&, int);                                              \
  template GradedElement<S> elem_pow(const GradedElement<S>&, const Rational&, int);                             \
  template GradedElement<S> elem_inverse(const GradedElement<S>&, int);                                          \
  template RingMatrix<S> matrix_function(const PowerSeries&, const RingMatrix<S>&, int);                         \
  template RingMatrix<S> matrix_exp(const RingMatrix<S>&, int);                                                  \
  template GradedElement<S> ring_det(const RingMatrix<S>&, int);                                                 \
  template GradedElement<S> det_sqrt(const RingMatrix<S>&, int);                                                 \
  template RingMatrix<S> IsometryNormalAction::matrix<S>(ContextPtr) const;                                      \
  template GradedElement<S> a_hat(const CurvatureMatrix<S>&, int);                                               \
  template GradedElement<S> nu_phi(const IsometryNormalAction&, const CurvatureMatrix<S>&, int);                 \
  template GradedElement<S> chern_character(const RingMatrix<S>&, const RingMatrix<S>*, int);                    \
  template GradedElement<CDouble> to_float(const GradedElement<S>&);                                             \
  template struct ScaledForm<S>;                                                                                 \
  template ScaledForm<S> equivariant_index_density(const CurvatureMatrix<S>&, const IsometryNormalAction&,       \
                                                   const CurvatureMatrix<S>&, int, int, const Twist<S>*);        \
  template ScaledForm<S> ahat_index_density(const CurvatureMatrix<S>&, int);

INDEXLAB_CHAR_FORMS(QComplex)
INDEXLAB_CHAR_FORMS(CDouble)

}  // namespace indexlab
