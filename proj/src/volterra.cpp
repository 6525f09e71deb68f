#include "indexlab/volterra.hpp"

#include <algorithm>
#include <bit>
#include <climits>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace indexlab {

int MultiIndex::total() const {
  int s = 0;
  for (auto e : v) s += e;
  return s;
}

MultiIndex MultiIndex::unit(int i) {
  MultiIndex m;
  m.v[i] = 1;
  return m;
}

MultiIndex operator+(MultiIndex a, const MultiIndex& b) {
  for (int i = 0; i < kMaxDim; ++i) a.v[i] += b.v[i];
  return a;
}

namespace {

std::string multi_string(const MultiIndex& m, int n) {
  std::string s = "(";
  for (int i = 0; i < n; ++i) s += (i ? "," : "") + std::to_string(m[i]);
  return s + ")";
}

void check_dim(int n) {
  if (n < 1 || n > kMaxDim) throw std::invalid_argument("symbol dimension must be in [1, 8]");
}

// All multi-indices of total degree a in n variables.
std::vector<MultiIndex> multi_indices(int n, int a) {
  std::vector<MultiIndex> out;
  MultiIndex cur;
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == n - 1) {
      cur[i] = static_cast<std::int8_t>(left);
      out.push_back(cur);
      return;
    }
    for (int k = left; k >= 0; --k) {
      cur[i] = static_cast<std::int8_t>(k);
      rec(i + 1, left - k);
    }
  };
  rec(0, a);
  return out;
}

Rational multi_factorial(const MultiIndex& a, int n) {
  Rational f = 1;
  for (int i = 0; i < n; ++i) f *= series::factorial(a[i]);
  return f;
}

template <class S>
S minus_i_pow(int k) {
  return ipow(S(-ScalarTraits<S>::i()), k);
}

}  // namespace

// ---------------------------------------------------------------------------
// GradedSymbol

template <class S>
GradedSymbol<S> GradedSymbol<S>::constant(ContextPtr ctx, int n, const GradedElement<S>& c) {
  GradedSymbol q(ctx, n);
  q.add_term(SymbolKey{}, c);
  return q;
}

template <class S>
GradedSymbol<S> GradedSymbol<S>::resolvent(ContextPtr ctx, int n, int m) {
  check_dim(n);
  GradedSymbol q(ctx, n);
  SymbolKey k;
  k.res = m;
  q.add_term(k, GradedElement<S>::scalar(ctx, ScalarTraits<S>::one()));
  q.declared_order_ = -2 * m;
  return q;
}

template <class S>
void GradedSymbol<S>::add_term(const SymbolKey& key, const GradedElement<S>& c) {
  if (c.is_zero()) return;
  if (key.res >= 1 && key.tau >= 1) {
    // tau res^{-m} = -i res^{-(m-1)} + i |xi|^2 res^{-m}
    SymbolKey a = key;
    a.tau -= 1;
    a.res -= 1;
    add_term(a, c * S(-ScalarTraits<S>::i()));
    for (int j = 0; j < n_; ++j) {
      SymbolKey b = key;
      b.tau -= 1;
      b.xi[j] += 2;
      add_term(b, c * ScalarTraits<S>::i());
    }
    return;
  }
  auto [it, inserted] = terms_.try_emplace(key, c);
  if (!inserted) {
    it->second += c;
    if (it->second.is_zero()) terms_.erase(it);
  }
}

template <class S>
GradedSymbol<S>& GradedSymbol<S>::operator+=(const GradedSymbol& o) {
  if (!ctx_) {
    ctx_ = o.ctx_;
    n_ = o.n_;
  }
  for (const auto& [k, c] : o.terms_) add_term(k, c);
  declared_order_ = std::max(declared_order_, o.declared_order_);
  return *this;
}

template <class S>
GradedSymbol<S>& GradedSymbol<S>::operator-=(const GradedSymbol& o) {
  if (!ctx_) {
    ctx_ = o.ctx_;
    n_ = o.n_;
  }
  for (const auto& [k, c] : o.terms_) add_term(k, -c);
  declared_order_ = std::max(declared_order_, o.declared_order_);
  return *this;
}

template <class S>
GradedSymbol<S>& GradedSymbol<S>::operator*=(const S& c) {
  std::map<SymbolKey, GradedElement<S>> out;
  for (auto& [k, e] : terms_) {
    GradedElement<S> v = e * c;
    if (!v.is_zero()) out.emplace(k, std::move(v));
  }
  terms_ = std::move(out);
  return *this;
}

template <class S>
GradedSymbol<S> GradedSymbol<S>::times(const GradedSymbol& o) const {
  GradedSymbol r(ctx_ ? ctx_ : o.ctx_, n_ ? n_ : o.n_);
  for (const auto& [k1, c1] : terms_)
    for (const auto& [k2, c2] : o.terms_) {
      SymbolKey k{k1.x + k2.x, k1.xi + k2.xi, k1.tau + k2.tau, k1.res + k2.res};
      r.add_term(k, mul(c1, c2));
    }
  r.declared_order_ = declared_order_ + o.declared_order_;
  return r;
}

template <class S>
GradedSymbol<S> GradedSymbol<S>::left_multiply(const GradedElement<S>& c) const {
  GradedSymbol r(ctx_, n_);
  for (const auto& [k, e] : terms_) r.add_term(k, mul(c, e));
  r.declared_order_ = declared_order_;
  return r;
}

template <class S>
GradedSymbol<S> GradedSymbol<S>::d_xi(int i) const {
  GradedSymbol r(ctx_, n_);
  for (const auto& [k, c] : terms_) {
    if (k.xi[i] > 0) {
      SymbolKey a = k;
      a.xi[i] -= 1;
      r.add_term(a, c * ScalarTraits<S>::from_int(k.xi[i]));
    }
    if (k.res > 0) {
      SymbolKey b = k;
      b.xi[i] += 1;
      b.res += 1;
      r.add_term(b, c * ScalarTraits<S>::from_int(-2 * k.res));
    }
  }
  r.declared_order_ = declared_order_ - 1;
  return r;
}

template <class S>
GradedSymbol<S> GradedSymbol<S>::d_x(int i) const {
  GradedSymbol r(ctx_, n_);
  for (const auto& [k, c] : terms_) {
    if (k.x[i] == 0) continue;
    SymbolKey a = k;
    a.x[i] -= 1;
    r.add_term(a, c * ScalarTraits<S>::from_int(k.x[i]));
  }
  r.declared_order_ = declared_order_;
  return r;
}

template <class S>
GradedSymbol<S> GradedSymbol<S>::homogeneous_part(int d) const {
  GradedSymbol r(ctx_, n_);
  for (const auto& [k, c] : terms_)
    if (k.homogeneity() == d) r.terms_.emplace(k, c);
  r.declared_order_ = d;
  return r;
}

template <class S>
GradedSymbol<S> GradedSymbol<S>::homogeneity_at_least(int d) const {
  GradedSymbol r(ctx_, n_);
  for (const auto& [k, c] : terms_)
    if (k.homogeneity() >= d) r.terms_.emplace(k, c);
  r.declared_order_ = declared_order_;
  return r;
}

template <class S>
GradedSymbol<S> GradedSymbol<S>::x_degree_at_most(int d) const {
  GradedSymbol r(ctx_, n_);
  for (const auto& [k, c] : terms_)
    if (k.x.total() <= d) r.terms_.emplace(k, c);
  r.declared_order_ = declared_order_;
  return r;
}

template <class S>
int GradedSymbol<S>::max_homogeneity() const {
  int h = INT_MIN;
  for (const auto& [k, c] : terms_) h = std::max(h, k.homogeneity());
  return h;
}

template <class S>
int GradedSymbol<S>::min_homogeneity() const {
  int h = INT_MAX;
  for (const auto& [k, c] : terms_) h = std::min(h, k.homogeneity());
  return h;
}

template <class S>
int GradedSymbol<S>::max_x_degree() const {
  int h = 0;
  for (const auto& [k, c] : terms_) h = std::max(h, k.x.total());
  return h;
}

template <class S>
std::string format_element(const GradedElement<S>& e) {
  if (e.is_zero()) return "0";
  std::string s;
  for (const auto& [m, c] : e.terms()) {
    if (!s.empty()) s += " + ";
    s += "(" + to_string(c) + ")";
    if (m) s += "*" + e.ctx().mask_string(m);
  }
  return s;
}

template <class S>
std::string GradedSymbol<S>::dump() const {
  std::ostringstream os;
  for (const auto& [k, c] : terms_)
    os << format_element(c) << " | x^" << multi_string(k.x, n_) << " | xi^" << multi_string(k.xi, n_) << " | tau^" << k.tau
       << " | res^" << k.res << "\n";
  return os.str();
}

template class GradedSymbol<QComplex>;
template class GradedSymbol<CDouble>;

template <class S>
GradedSymbol<S> compose(const GradedSymbol<S>& q1, const GradedSymbol<S>& q2, std::optional<int> min_homogeneity) {
  if (q1.n() != q2.n() && !q1.is_zero() && !q2.is_zero()) throw std::invalid_argument("compose: dimension mismatch");
  const int n = std::max(q1.n(), q2.n());
  GradedSymbol<S> result(q1.context() ? q1.context() : q2.context(), n);
  result.set_declared_order(q1.declared_order() + q2.declared_order());
  if (q1.is_zero() || q2.is_zero()) return result;
  const int floor = min_homogeneity.value_or(INT_MIN);
  std::function<void(int, const GradedSymbol<S>&, const GradedSymbol<S>&, MultiIndex)> rec =
      [&](int j, const GradedSymbol<S>& A, const GradedSymbol<S>& B, MultiIndex alpha) {
        if (A.is_zero() || B.is_zero()) return;
        if (min_homogeneity && A.max_homogeneity() + B.max_homogeneity() < floor) return;
        if (j == n) {
          S f = minus_i_pow<S>(alpha.total()) / ScalarTraits<S>::from_rational(multi_factorial(alpha, n));
          GradedSymbol<S> prod = A.times(B);
          if (min_homogeneity) prod = prod.homogeneity_at_least(floor);
          result += prod * f;
          return;
        }
        GradedSymbol<S> a = A, b = B;
        for (int k = 0; !b.is_zero(); ++k) {
          alpha[j] = static_cast<std::int8_t>(k);
          rec(j + 1, a, b, alpha);
          a = a.d_xi(j);
          b = b.d_x(j);
        }
      };
  rec(0, q1, q2, MultiIndex{});
  result.set_declared_order(q1.declared_order() + q2.declared_order());
  return result;
}

// ---------------------------------------------------------------------------
// DiffOp

template <class S>
void DiffOp<S>::add_term(const OpKey& key, const GradedElement<S>& c) {
  if (c.is_zero()) return;
  auto [it, inserted] = terms_.try_emplace(key, c);
  if (!inserted) {
    it->second += c;
    if (it->second.is_zero()) terms_.erase(it);
  }
}

template <class S>
DiffOp<S> DiffOp<S>::identity(ContextPtr ctx, int n) {
  return coefficient(ctx, n, GradedElement<S>::scalar(ctx, ScalarTraits<S>::one()));
}

template <class S>
DiffOp<S> DiffOp<S>::coefficient(ContextPtr ctx, int n, const GradedElement<S>& c) {
  check_dim(n);
  DiffOp P(ctx, n);
  P.add_term(OpKey{}, c);
  return P;
}

template <class S>
DiffOp<S> DiffOp<S>::laplacian(ContextPtr ctx, int n) {
  check_dim(n);
  DiffOp P(ctx, n);
  for (int i = 0; i < n; ++i) {
    OpKey k;
    k.dx[i] = 2;
    P.add_term(k, GradedElement<S>::scalar(ctx, ScalarTraits<S>::from_int(-1)));
  }
  return P;
}

template <class S>
DiffOp<S> DiffOp<S>::d_t(ContextPtr ctx, int n) {
  DiffOp P(ctx, n);
  OpKey k;
  k.dt = 1;
  P.add_term(k, GradedElement<S>::scalar(ctx, ScalarTraits<S>::one()));
  return P;
}

template <class S>
DiffOp<S> DiffOp<S>::d(ContextPtr ctx, int n, int i) {
  DiffOp P(ctx, n);
  OpKey k;
  k.dx[i] = 1;
  P.add_term(k, GradedElement<S>::scalar(ctx, ScalarTraits<S>::one()));
  return P;
}

template <class S>
DiffOp<S> DiffOp<S>::x(ContextPtr ctx, int n, int i) {
  DiffOp P(ctx, n);
  OpKey k;
  k.x[i] = 1;
  P.add_term(k, GradedElement<S>::scalar(ctx, ScalarTraits<S>::one()));
  return P;
}

template <class S>
DiffOp<S>& DiffOp<S>::operator+=(const DiffOp& o) {
  if (!ctx_) {
    ctx_ = o.ctx_;
    n_ = o.n_;
  }
  for (const auto& [k, c] : o.terms_) add_term(k, c);
  return *this;
}

template <class S>
DiffOp<S>& DiffOp<S>::operator-=(const DiffOp& o) {
  if (!ctx_) {
    ctx_ = o.ctx_;
    n_ = o.n_;
  }
  for (const auto& [k, c] : o.terms_) add_term(k, -c);
  return *this;
}

template <class S>
DiffOp<S>& DiffOp<S>::operator*=(const S& c) {
  std::map<OpKey, GradedElement<S>> out;
  for (auto& [k, e] : terms_) {
    GradedElement<S> v = e * c;
    if (!v.is_zero()) out.emplace(k, std::move(v));
  }
  terms_ = std::move(out);
  return *this;
}

template <class S>
DiffOp<S> DiffOp<S>::then(const DiffOp& o) const {
  DiffOp r(ctx_ ? ctx_ : o.ctx_, n_ ? n_ : o.n_);
  const int n = r.n_;
  for (const auto& [k1, c1] : terms_)
    for (const auto& [k2, c2] : o.terms_) {
      GradedElement<S> c = mul(c1, c2);
      if (c.is_zero()) continue;
      // Leibniz: d^b1 (x^a2 f) = sum_gamma C(b1, gamma) d^gamma(x^a2) d^{b1-gamma} f
      std::function<void(int, OpKey, S)> rec = [&](int j, OpKey key, S f) {
        if (j == n) {
          r.add_term(key, c * f);
          return;
        }
        for (int g = 0; g <= k1.dx[j] && g <= k2.x[j]; ++g) {
          mpz_class binom, fall = 1;
          mpz_bin_uiui(binom.get_mpz_t(), k1.dx[j], g);
          for (int t = 0; t < g; ++t) fall *= (k2.x[j] - t);
          OpKey nk = key;
          nk.x[j] = static_cast<std::int8_t>(k1.x[j] + k2.x[j] - g);
          nk.dx[j] = static_cast<std::int8_t>(k1.dx[j] - g + k2.dx[j]);
          rec(j + 1, nk, f * ScalarTraits<S>::from_rational(Rational(binom * fall)));
        }
      };
      OpKey base;
      base.dt = k1.dt + k2.dt;
      rec(0, base, ScalarTraits<S>::one());
    }
  return r;
}

template <class S>
GradedSymbol<S> DiffOp<S>::symbol() const {
  GradedSymbol<S> q(ctx_, n_);
  int order = 0;
  for (const auto& [k, c] : terms_) {
    SymbolKey sk;
    sk.x = k.x;
    sk.xi = k.dx;
    sk.tau = k.dt;
    q.add_term(sk, c * ipow(ScalarTraits<S>::i(), k.dx.total() + k.dt));
    order = std::max(order, k.dx.total() + 2 * k.dt);
  }
  q.set_declared_order(order);
  return q;
}

template <class S>
DiffOp<S> DiffOp<S>::form_free_part() const {
  DiffOp r(ctx_, n_);
  for (const auto& [k, c] : terms_) {
    GradedElement<S> e(ctx_);
    for (const auto& [m, v] : c.terms())
      if ((m & ctx_->form_mask()) == 0) e.add_term(m, v);
    r.add_term(k, e);
  }
  return r;
}

template <class S>
DiffOp<S> DiffOp<S>::form_positive_part() const {
  return *this - form_free_part();
}

template <class S>
DiffOp<S> DiffOp<S>::with_context(ContextPtr ctx) const {
  DiffOp r(ctx, n_);
  for (const auto& [k, c] : terms_) r.add_term(k, c.with_context(ctx));
  return r;
}

template <class S>
std::string DiffOp<S>::dump() const {
  std::ostringstream os;
  for (const auto& [k, c] : terms_)
    os << format_element(c) << " | x^" << multi_string(k.x, n_) << " | d^" << multi_string(k.dx, n_) << " | dt^" << k.dt
       << "\n";
  return os.str();
}

template class DiffOp<QComplex>;
template class DiffOp<CDouble>;

// ---------------------------------------------------------------------------
// Getzler calculus

template <class S>
int getzler_order(const DiffOp<S>& P) {
  int best = INT_MIN;
  for (const auto& [k, c] : P.terms())
    for (const auto& [m, v] : c.terms())
      best = std::max(best, k.dx.total() + 2 * k.dt + std::popcount(m) - k.x.total());
  return best;
}

template <class S>
int getzler_order(const GradedSymbol<S>& q) {
  int best = INT_MIN;
  for (const auto& [k, c] : q.terms())
    for (const auto& [m, v] : c.terms()) best = std::max(best, k.homogeneity() + std::popcount(m) - k.x.total());
  return best;
}

template <class S>
DiffOp<S> getzler_part(const DiffOp<S>& P, int degree) {
  DiffOp<S> r(P.context(), P.n());
  for (const auto& [k, c] : P.terms()) {
    GradedElement<S> e(P.context());
    for (const auto& [m, v] : c.terms())
      if (k.dx.total() + 2 * k.dt + std::popcount(m) - k.x.total() == degree) e.add_term(m, v);
    r.add_term(k, e);
  }
  return r;
}

template <class S>
DiffOp<S> model_operator(const DiffOp<S>& P) {
  DiffOp<S> top = getzler_part(P, getzler_order(P));
  if (P.context()->fiber() == FiberMode::clifford) return top.with_context(P.context()->with_fiber(FiberMode::exterior));
  return top;
}

template <class S>
ModelComposeReport<S> model_compose_check(const DiffOp<S>& Q1, const DiffOp<S>& Q2) {
  ModelComposeReport<S> r{};
  r.order1 = getzler_order(Q1);
  r.order2 = getzler_order(Q2);
  DiffOp<S> Q = Q1.then(Q2);
  r.order_product = getzler_order(Q);
  DiffOp<S> top = getzler_part(Q, r.order1 + r.order2);
  DiffOp<S> rhs = model_operator(Q1).then(model_operator(Q2));
  if (Q.context()->fiber() == FiberMode::clifford) top = top.with_context(Q.context()->with_fiber(FiberMode::exterior));
  r.top_part_matches = top == rhs;
  r.orders_add = rhs.is_zero() ? r.order_product < r.order1 + r.order2 : r.order_product == r.order1 + r.order2;
  return r;
}

// ---------------------------------------------------------------------------
// Parametrix

template <class S>
GradedSymbol<S> parametrix_recursive(const DiffOp<S>& P, int depth, int x_order) {
  const int n = P.n();
  check_dim(n);
  ContextPtr ctx = P.context();
  GradedSymbol<S> H = (DiffOp<S>::d_t(ctx, n) + P).symbol();
  GradedSymbol<S> principal(ctx, n);
  {
    SymbolKey k;
    k.tau = 1;
    principal.add_term(k, GradedElement<S>::scalar(ctx, ScalarTraits<S>::i()));
    for (int i = 0; i < n; ++i) {
      SymbolKey s;
      s.xi[i] = 2;
      principal.add_term(s, GradedElement<S>::scalar(ctx, ScalarTraits<S>::one()));
    }
  }
  if (H.max_homogeneity() > 2 || !(H.homogeneous_part(2) == principal))
    throw std::invalid_argument("parametrix: principal symbol is not i tau + |xi|^2 (non-parabolic principal part)");
  std::vector<GradedSymbol<S>> h;
  for (int k = 0; k <= depth; ++k) h.push_back(H.homogeneous_part(2 - k));
  GradedSymbol<S> res1 = GradedSymbol<S>::resolvent(ctx, n, 1);
  std::vector<GradedSymbol<S>> q{res1};
  for (int j = 1; j <= depth; ++j) {
    GradedSymbol<S> acc(ctx, n);
    for (int l = 0; l < j; ++l)
      for (int k = 0; k <= j - l; ++k) {
        int a = j - k - l;
        if (h[k].is_zero()) continue;
        for (const MultiIndex& alpha : multi_indices(n, a)) {
          GradedSymbol<S> A = h[k], B = q[l];
          for (int i = 0; i < n; ++i)
            for (int t = 0; t < alpha[i]; ++t) {
              A = A.d_xi(i);
              B = B.d_x(i);
            }
          if (A.is_zero() || B.is_zero()) continue;
          S f = minus_i_pow<S>(a) / ScalarTraits<S>::from_rational(multi_factorial(alpha, n));
          acc += A.times(B) * f;
        }
      }
    GradedSymbol<S> qj = res1.times(acc) * ScalarTraits<S>::from_int(-1);
    if (x_order >= 0) qj = qj.x_degree_at_most(x_order + depth - j);
    q.push_back(qj);
  }
  GradedSymbol<S> out(ctx, n);
  for (const auto& part : q) out += part;
  out.set_declared_order(-2);
  if (x_order >= 0) out = out.x_degree_at_most(x_order + depth);
  return out;
}

template <class S>
GradedSymbol<S> parametrix(const DiffOp<S>& P, int depth) {
  DiffOp<S> P0 = P.form_free_part();
  DiffOp<S> W = P.form_positive_part();
  GradedSymbol<S> Q0 = parametrix_recursive(P0, depth);
  if (W.is_zero()) return Q0;
  const int floor = -2 - depth;
  GradedSymbol<S> WQ0 = compose(W.symbol(), Q0, floor);
  GradedSymbol<S> result = Q0, X = Q0;
  for (int k = 1;; ++k) {
    X = compose(X, WQ0, floor);
    if (X.is_zero()) break;
    if (k > P.context()->form_count() + 1) throw std::logic_error("parametrix: family series failed to terminate");
    result += X * ScalarTraits<S>::from_int(k % 2 ? -1 : 1);
  }
  result.set_declared_order(-2);
  return result;
}

// ---------------------------------------------------------------------------
// Diagonal values

namespace {

// prod_j (beta_j - 1)!! / 2^{beta_j / 2}, zero for odd moments
Rational gaussian_moment(const MultiIndex& beta, int n) {
  Rational r = 1;
  for (int j = 0; j < n; ++j) {
    int b = beta[j];
    if (b % 2) return 0;
    for (int t = b - 1; t > 0; t -= 2) r *= t;
    r /= Rational(mpz_class(1) << (b / 2));
  }
  return r;
}

}  // namespace

template <class S>
HeatDiagonal<S> kernel_diagonal(const GradedSymbol<S>& q_hom, const std::vector<S>& x) {
  HeatDiagonal<S> d{q_hom.n(), GradedElement<S>(q_hom.context())};
  for (const auto& [k, c] : q_hom.terms()) {
    if (k.res == 0) throw std::invalid_argument("kernel_diagonal: polynomial term has a distributional diagonal");
    Rational g = gaussian_moment(k.xi, q_hom.n());
    if (sgn(g) == 0) continue;
    S xv = ScalarTraits<S>::one();
    for (int j = 0; j < q_hom.n(); ++j) {
      if (k.x[j] == 0) continue;
      if (x.empty()) {
        xv = ScalarTraits<S>::zero();
        break;
      }
      xv *= ipow(x.at(j), k.x[j]);
    }
    if (ScalarTraits<S>::is_zero(xv)) continue;
    d.reduced += c * (xv * ScalarTraits<S>::from_rational(g / series::factorial(k.res - 1)));
  }
  return d;
}

template <class S>
std::vector<int> kernel_diagonal_exponents(const GradedSymbol<S>& q_hom) {
  std::vector<int> e;
  for (const auto& [k, c] : q_hom.terms()) {
    if (gaussian_moment(k.xi, q_hom.n()) == 0) continue;
    int two = 2 * (k.res - 1) - q_hom.n() - k.xi.total();
    if (std::find(e.begin(), e.end(), two) == e.end()) e.push_back(two);
  }
  std::sort(e.begin(), e.end());
  return e;
}

template <class S>
std::vector<HeatDiagonal<S>> heat_coefficients(const DiffOp<S>& P, int l_max, const std::vector<S>& x) {
  GradedSymbol<S> q = parametrix_recursive(P, 2 * l_max, x.empty() ? 0 : -1);
  std::vector<HeatDiagonal<S>> out;
  for (int l = 0; l <= l_max; ++l) out.push_back(kernel_diagonal(q.homogeneous_part(-2 - 2 * l), x));
  return out;
}

template <class S>
ParityReport rescaled_parity_check(const GradedSymbol<S>& q, int getzler_order_Q, int depth) {
  ParityReport r;
  r.getzler_order_Q = getzler_order_Q;
  const AlgebraContext& ctx = *q.context();
  const int n = q.n();
  for (int d = -2; d >= -2 - depth; --d) {
    HeatDiagonal<S> diag = kernel_diagonal(q.homogeneous_part(d).at_x_zero());
    for (const auto& [m, c] : diag.reduced.terms()) {
      ParityEntry e;
      e.clifford_degree = std::popcount(m & ctx.fiber_mask());
      e.form_degree = std::popcount(m & ctx.form_mask());
      e.two_power = -(n + 2 + d) - e.form_degree;
      e.bound_ok = e.two_power >= e.clifford_degree - n - getzler_order_Q - 2;
      e.parity_ok = n % 2 ? true : ((e.two_power & 1) == (e.form_degree & 1));
      if (e.two_power & 1) r.half_integer_seen = true;
      r.bound_ok = r.bound_ok && e.bound_ok;
      r.parity_ok = r.parity_ok && e.parity_ok;
      r.entries.push_back(e);
    }
  }
  return r;
}

#define INDEXLAB_VOLTERRA(S)                                                                                       \
  template GradedSymbol<S> compose(const GradedSymbol<S>&, const GradedSymbol<S>&, std::optional<int>);           \
  template int getzler_order(const DiffOp<S>&);                                                                    \
  template int getzler_order(const GradedSymbol<S>&);                                                              \
  template DiffOp<S> model_operator(const DiffOp<S>&);                                                             \
  template DiffOp<S> getzler_part(const DiffOp<S>&, int);                                                          \
  template ModelComposeReport<S> model_compose_check(const DiffOp<S>&, const DiffOp<S>&);                          \
  template GradedSymbol<S> parametrix_recursive(const DiffOp<S>&, int, int);                                       \
  template GradedSymbol<S> parametrix(const DiffOp<S>&, int);                                                      \
  template HeatDiagonal<S> kernel_diagonal(const GradedSymbol<S>&, const std::vector<S>&);                         \
  template std::vector<int> kernel_diagonal_exponents(const GradedSymbol<S>&);                                     \
  template std::vector<HeatDiagonal<S>> heat_coefficients(const DiffOp<S>&, int, const std::vector<S>&);           \
  template ParityReport rescaled_parity_check(const GradedSymbol<S>&, int, int);                                   \
  template std::string format_element(const GradedElement<S>&);

INDEXLAB_VOLTERRA(QComplex)
INDEXLAB_VOLTERRA(CDouble)

}  // namespace indexlab
