#include "indexlab/graded_algebra.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace indexlab {

AlgebraContext::AlgebraContext(int n, int q_bar, std::vector<std::string> aux, FiberMode fiber)
    : n_(n), q_bar_(q_bar), aux_(std::move(aux)), fiber_(fiber) {
  if (n < 1) throw std::invalid_argument("AlgebraContext: n must be >= 1");
  if (q_bar < 0) throw std::invalid_argument("AlgebraContext: q_bar must be >= 0");
  for (std::size_t i = 0; i < aux_.size(); ++i)
    for (std::size_t j = i + 1; j < aux_.size(); ++j)
      if (aux_[i] == aux_[j]) throw std::invalid_argument("AlgebraContext: duplicate aux name " + aux_[i]);
  if (generator_count() > 62) throw std::invalid_argument("AlgebraContext: too many generators");
  auto ones = [](int k) { return k == 0 ? 0ULL : ((1ULL << k) - 1); };
  base_mask_ = ones(q_bar_);
  form_mask_ = ones(form_count());
  fiber_mask_ = ones(n_) << form_count();
}

std::uint64_t AlgebraContext::fiber_bit(int i) const {
  if (i < 1 || i > n_) throw std::out_of_range("fiber generator index out of range");
  return 1ULL << (form_count() + i - 1);
}

std::uint64_t AlgebraContext::base_bit(int alpha) const {
  if (alpha < 1 || alpha > q_bar_) throw std::out_of_range("base generator index out of range");
  return 1ULL << (alpha - 1);
}

std::uint64_t AlgebraContext::aux_bit(const std::string& name) const {
  auto it = std::find(aux_.begin(), aux_.end(), name);
  if (it == aux_.end()) throw std::out_of_range("unknown aux generator " + name);
  return 1ULL << (q_bar_ + (it - aux_.begin()));
}

bool AlgebraContext::same_as(const AlgebraContext& o) const {
  return n_ == o.n_ && q_bar_ == o.q_bar_ && aux_ == o.aux_ && fiber_ == o.fiber_;
}

ContextPtr AlgebraContext::with_fiber(FiberMode mode) const {
  return std::make_shared<const AlgebraContext>(n_, q_bar_, aux_, mode);
}

std::string AlgebraContext::mask_string(std::uint64_t mask) const {
  if (mask == 0) return "1";
  std::string s;
  for (int b = 0; b < generator_count(); ++b) {
    if (!(mask >> b & 1)) continue;
    if (!s.empty()) s += "*";
    if (b < q_bar_) {
      s += "dy" + std::to_string(b + 1);
    } else if (b < form_count()) {
      s += aux_[b - q_bar_];
    } else {
      s += (fiber_ == FiberMode::clifford ? "c" : "e") + std::to_string(b - form_count() + 1);
    }
  }
  return s;
}

ContextPtr make_context(int n, int q_bar, std::vector<std::string> aux, FiberMode fiber) {
  return std::make_shared<const AlgebraContext>(n, q_bar, std::move(aux), fiber);
}

BasisMask BasisMask::from_sets(const AlgebraContext& ctx, const std::vector<int>& clifford, const std::vector<int>& base,
                               const std::vector<std::string>& aux) {
  BasisMask m;
  auto set = [&](std::uint64_t bit) {
    if (m.bits & bit) throw std::invalid_argument("BasisMask: repeated generator");
    m.bits |= bit;
  };
  for (int i : clifford) set(ctx.fiber_bit(i));
  for (int a : base) set(ctx.base_bit(a));
  for (const auto& z : aux) set(ctx.aux_bit(z));
  return m;
}

std::vector<int> BasisMask::clifford_set(const AlgebraContext& ctx) const {
  std::vector<int> r;
  for (int i = 1; i <= ctx.n(); ++i)
    if (bits & ctx.fiber_bit(i)) r.push_back(i);
  return r;
}

std::vector<int> BasisMask::base_set(const AlgebraContext& ctx) const {
  std::vector<int> r;
  for (int a = 1; a <= ctx.q_bar(); ++a)
    if (bits & ctx.base_bit(a)) r.push_back(a);
  return r;
}

std::vector<std::string> BasisMask::aux_set(const AlgebraContext& ctx) const {
  std::vector<std::string> r;
  for (const auto& z : ctx.aux())
    if (bits & ctx.aux_bit(z)) r.push_back(z);
  return r;
}

BladeProduct blade_product(const AlgebraContext& ctx, std::uint64_t a, std::uint64_t b) {
  std::uint64_t overlap = a & b;
  if (overlap & ctx.form_mask()) return {0, 0};
  if (overlap && ctx.fiber() == FiberMode::exterior) return {0, 0};
  int swaps = 0;
  for (std::uint64_t x = a >> 1; x; x >>= 1) swaps += std::popcount(x & b);
  swaps += std::popcount(overlap);  // e_i e_i = -1
  return {(swaps & 1) ? -1 : 1, a ^ b};
}

// ---------------------------------------------------------------------------
// GradedElement

template <class S>
GradedElement<S> GradedElement<S>::scalar(ContextPtr ctx, const S& c) {
  return monomial(std::move(ctx), 0, c);
}

template <class S>
GradedElement<S> GradedElement<S>::monomial(ContextPtr ctx, std::uint64_t mask, const S& c) {
  GradedElement r(std::move(ctx));
  r.add_term(mask, c);
  return r;
}

template <class S>
GradedElement<S> GradedElement<S>::fiber_gen(ContextPtr ctx, int i) {
  std::uint64_t m = ctx->fiber_bit(i);
  return monomial(std::move(ctx), m, ScalarTraits<S>::one());
}

template <class S>
GradedElement<S> GradedElement<S>::base_gen(ContextPtr ctx, int alpha) {
  std::uint64_t m = ctx->base_bit(alpha);
  return monomial(std::move(ctx), m, ScalarTraits<S>::one());
}

template <class S>
GradedElement<S> GradedElement<S>::aux_gen(ContextPtr ctx, const std::string& name) {
  std::uint64_t m = ctx->aux_bit(name);
  return monomial(std::move(ctx), m, ScalarTraits<S>::one());
}

template <class S>
S GradedElement<S>::coeff(std::uint64_t mask) const {
  auto it = terms_.find(mask);
  return it == terms_.end() ? ScalarTraits<S>::zero() : it->second;
}

template <class S>
void GradedElement<S>::add_term(std::uint64_t mask, const S& c) {
  if (ScalarTraits<S>::is_zero(c)) return;
  auto [it, inserted] = terms_.try_emplace(mask, c);
  if (!inserted) {
    it->second += c;
    if (ScalarTraits<S>::is_zero(it->second)) terms_.erase(it);
  }
}

namespace {
template <class S>
void check_same(const GradedElement<S>& a, const GradedElement<S>& b) {
  if (!a.context() || !b.context()) throw std::invalid_argument("GradedElement without context");
  if (a.context() != b.context() && !a.ctx().same_as(b.ctx()))
    throw std::invalid_argument("GradedElement: context mismatch");
}
}  // namespace

template <class S>
GradedElement<S>& GradedElement<S>::operator+=(const GradedElement& o) {
  if (!ctx_) ctx_ = o.ctx_;
  check_same(*this, o);
  for (const auto& [m, c] : o.terms_) add_term(m, c);
  return *this;
}

template <class S>
GradedElement<S>& GradedElement<S>::operator-=(const GradedElement& o) {
  if (!ctx_) ctx_ = o.ctx_;
  check_same(*this, o);
  for (const auto& [m, c] : o.terms_) add_term(m, -c);
  return *this;
}

template <class S>
GradedElement<S>& GradedElement<S>::operator*=(const S& c) {
  if (ScalarTraits<S>::is_zero(c)) {
    terms_.clear();
    return *this;
  }
  for (auto it = terms_.begin(); it != terms_.end();) {
    it->second *= c;
    if (ScalarTraits<S>::is_zero(it->second)) {
      it = terms_.erase(it);
    } else {
      ++it;
    }
  }
  return *this;
}

template <class S>
GradedElement<S> GradedElement<S>::operator-() const {
  GradedElement r(*this);
  for (auto& [m, c] : r.terms_) c = -c;
  return r;
}

template <class S>
GradedElement<S> GradedElement<S>::mul(const GradedElement& a, const GradedElement& b) {
  check_same(a, b);
  GradedElement r(a.ctx_);
  const AlgebraContext& ctx = *a.ctx_;
  for (const auto& [ma, ca] : a.terms_) {
    for (const auto& [mb, cb] : b.terms_) {
      BladeProduct p = blade_product(ctx, ma, mb);
      if (p.sign == 0) continue;
      S c = ca * cb;
      if (p.sign < 0) c = -c;
      r.add_term(p.mask, c);
    }
  }
  return r;
}

template <class S>
GradedElement<S> GradedElement<S>::truncated(int max_degree) const {
  GradedElement r(ctx_);
  for (const auto& [m, c] : terms_)
    if (std::popcount(m) <= max_degree) r.terms_.emplace(m, c);
  return r;
}

template <class S>
GradedElement<S> GradedElement<S>::chopped(double tol) const {
  GradedElement r(ctx_);
  for (const auto& [m, c] : terms_)
    if (ScalarTraits<S>::abs(c) > tol) r.terms_.emplace(m, c);
  return r;
}

template <class S>
GradedElement<S> GradedElement<S>::filtered(std::uint64_t keep_if_subset_of) const {
  GradedElement r(ctx_);
  for (const auto& [m, c] : terms_)
    if ((m & ~keep_if_subset_of) == 0) r.terms_.emplace(m, c);
  return r;
}

template <class S>
int GradedElement<S>::max_degree() const {
  int d = -1;
  for (const auto& [m, c] : terms_) d = std::max(d, std::popcount(m));
  return d;
}

template <class S>
int GradedElement<S>::min_degree() const {
  int d = 1 << 20;
  for (const auto& [m, c] : terms_) d = std::min(d, std::popcount(m));
  return terms_.empty() ? -1 : d;
}

template <class S>
bool GradedElement<S>::is_even() const {
  for (const auto& [m, c] : terms_)
    if (std::popcount(m) & 1) return false;
  return true;
}

template <class S>
bool GradedElement<S>::is_odd() const {
  for (const auto& [m, c] : terms_)
    if (!(std::popcount(m) & 1)) return false;
  return true;
}

template <class S>
GradedElement<S> GradedElement<S>::even_part() const {
  GradedElement r(ctx_);
  for (const auto& [m, c] : terms_)
    if (!(std::popcount(m) & 1)) r.terms_.emplace(m, c);
  return r;
}

template <class S>
GradedElement<S> GradedElement<S>::odd_part() const {
  GradedElement r(ctx_);
  for (const auto& [m, c] : terms_)
    if (std::popcount(m) & 1) r.terms_.emplace(m, c);
  return r;
}

template <class S>
GradedElement<S> GradedElement<S>::form_degree_part(int k) const {
  GradedElement r(ctx_);
  for (const auto& [m, c] : terms_)
    if (std::popcount(m & ctx_->form_mask()) == k) r.terms_.emplace(m, c);
  return r;
}

template <class S>
GradedElement<S> GradedElement<S>::with_context(ContextPtr other) const {
  if (other->generator_count() != ctx_->generator_count() || other->form_count() != ctx_->form_count())
    throw std::invalid_argument("with_context: incompatible layout");
  GradedElement r(std::move(other));
  r.terms_ = terms_;
  return r;
}

template <class S>
std::string GradedElement<S>::dump() const {
  std::ostringstream os;
  for (const auto& [m, c] : terms_) os << ctx_->mask_string(m) << " -> " << to_string(c) << "\n";
  return os.str();
}

template class GradedElement<QComplex>;
template class GradedElement<CDouble>;

// ---------------------------------------------------------------------------
// Maps and traces

template <class S>
GradedElement<S> symbol_map(const GradedElement<S>& a) {
  if (a.ctx().fiber() != FiberMode::clifford) throw std::invalid_argument("symbol_map expects a Clifford element");
  return a.with_context(a.ctx().with_fiber(FiberMode::exterior));
}

template <class S>
GradedElement<S> quantize(const GradedElement<S>& a) {
  if (a.ctx().fiber() != FiberMode::exterior) throw std::invalid_argument("quantize expects an exterior element");
  return a.with_context(a.ctx().with_fiber(FiberMode::clifford));
}

template <class S>
GradedElement<S> supertrace(const GradedElement<S>& a) {
  const AlgebraContext& ctx = a.ctx();
  if (ctx.n() % 2 != 0) throw std::invalid_argument("supertrace: n odd (use trace_odd)");
  if (ctx.fiber() != FiberMode::clifford) throw std::invalid_argument("supertrace expects a Clifford element");
  S top = ipow(S(ScalarTraits<S>::from_int(-2) * ScalarTraits<S>::i()), ctx.n() / 2);
  GradedElement<S> r(a.context());
  for (const auto& [m, c] : a.terms())
    if ((m & ctx.fiber_mask()) == ctx.fiber_mask()) r.add_term(m & ctx.form_mask(), c * top);
  return r;
}

template <class S>
GradedElement<S> trace_odd(const GradedElement<S>& a) {
  const AlgebraContext& ctx = a.ctx();
  if (ctx.n() % 2 == 0) throw std::invalid_argument("trace_odd: n even (use supertrace)");
  if (ctx.fiber() != FiberMode::clifford) throw std::invalid_argument("trace_odd expects a Clifford element");
  int h = ctx.n() / 2;
  S dim = ipow(ScalarTraits<S>::from_int(2), h);
  S top = ipow(S(-ScalarTraits<S>::i()), h + 1) * dim;
  GradedElement<S> r(a.context());
  for (const auto& [m, c] : a.terms()) {
    std::uint64_t f = m & ctx.fiber_mask();
    if (f == 0) r.add_term(m, c * dim);
    else if (f == ctx.fiber_mask()) r.add_term(m & ctx.form_mask(), c * top);
  }
  return r;
}

template <class S>
GradedElement<S> berezin(const GradedElement<S>& a, int fixed_dim, BerezinMode mode) {
  const AlgebraContext& ctx = a.ctx();
  if (ctx.fiber() != FiberMode::exterior) throw std::invalid_argument("berezin expects an exterior (symbol) element");
  if (fixed_dim < 0 || fixed_dim > ctx.n()) throw std::out_of_range("berezin: fixed_dim out of range");
  std::uint64_t tangential = 0;
  for (int i = 1; i <= fixed_dim; ++i) tangential |= ctx.fiber_bit(i);
  GradedElement<S> r(a.context());
  for (const auto& [m, c] : a.terms()) {
    std::uint64_t f = m & ctx.fiber_mask();
    if (f & ~tangential) {
      if (mode == BerezinMode::full)
        throw std::invalid_argument("berezin(full): element has normal fiber components; use star_zero");
      continue;
    }
    if (f == tangential) r.add_term(m & ctx.form_mask(), c);
  }
  return r;
}

template <class S>
S det_half_one_minus(const std::vector<Angle>& angles) {
  S r = ScalarTraits<S>::one();
  for (const auto& th : angles) {
    S s = sin_of<S>(half(th));
    if (ScalarTraits<S>::abs(s) < 1e-14) throw std::domain_error("degenerate normal action: eigenvalue 1");
    r *= ScalarTraits<S>::from_int(2) * s;
  }
  return r;
}

template <class S>
GradedElement<S> spinor_lift(ContextPtr ctx, int a, const std::vector<Angle>& angles) {
  if (a + 2 * static_cast<int>(angles.size()) != ctx->n())
    throw std::invalid_argument("spinor_lift: a + 2*blocks must equal n");
  GradedElement<S> g = GradedElement<S>::scalar(ctx, ScalarTraits<S>::one());
  for (std::size_t j = 0; j < angles.size(); ++j) {
    Angle h = half(angles[j]);
    int p = a + 2 * static_cast<int>(j) + 1;
    GradedElement<S> f = GradedElement<S>::scalar(ctx, cos_of<S>(h));
    f.add_term(ctx->fiber_bit(p) | ctx->fiber_bit(p + 1), sin_of<S>(h));
    g = mul(g, f);
  }
  return g;
}

template <class S>
EquivariantSupertrace<S> equivariant_supertrace(const GradedElement<S>& phi_spinor, const GradedElement<S>& A, int a,
                                                const std::vector<Angle>& angles) {
  const AlgebraContext& ctx = A.ctx();
  int b = 2 * static_cast<int>(angles.size());
  if (a + b != ctx.n()) throw std::invalid_argument("equivariant_supertrace: a + b != n");
  S det_half = det_half_one_minus<S>(angles);  // throws on degenerate action
  S pre = ipow(S(ScalarTraits<S>::from_int(-2) * ScalarTraits<S>::i()), ctx.n() / 2) *
          ipow(ScalarTraits<S>::from_int(2), -(b / 2)) * det_half;
  EquivariantSupertrace<S> r;
  r.leading = berezin(symbol_map(A), a, BerezinMode::star_zero).with_context(A.context()) * pre;
  r.total = supertrace(mul(phi_spinor, A));
  r.correction = r.total - r.leading;
  bool positive = true;
  for (const auto& th : angles) positive = positive && std::sin(th.radians / 2) > 0;
  r.lift_branch = positive ? "exp((theta/2) e_a e_b), theta in (0, 2pi): det^{1/2}(1-phi^N) > 0"
                           : "exp((theta/2) e_a e_b) continued from theta=0: det^{1/2}(1-phi^N) = prod 2 sin(theta_j/2)";
  return r;
}

#define INDEXLAB_INSTANTIATE(S)                                                                               \
  template GradedElement<S> symbol_map(const GradedElement<S>&);                                              \
  template GradedElement<S> quantize(const GradedElement<S>&);                                                \
  template GradedElement<S> supertrace(const GradedElement<S>&);                                              \
  template GradedElement<S> trace_odd(const GradedElement<S>&);                                               \
  template GradedElement<S> berezin(const GradedElement<S>&, int, BerezinMode);                               \
  template S det_half_one_minus<S>(const std::vector<Angle>&);                                                \
  template GradedElement<S> spinor_lift<S>(ContextPtr, int, const std::vector<Angle>&);                       \
  template EquivariantSupertrace<S> equivariant_supertrace(const GradedElement<S>&, const GradedElement<S>&, \
                                                           int, const std::vector<Angle>&);                   \
  template Eigen::MatrixXcd GradedMatrixRep::apply(const GradedElement<S>&) const;

// ---------------------------------------------------------------------------
// Matrix representations

namespace {

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd r(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return r;
}

Eigen::MatrixXcd pauli(int k) {
  using C = std::complex<double>;
  Eigen::MatrixXcd m(2, 2);
  if (k == 1) m << 0, 1, 1, 0;
  else if (k == 2) m << 0, C(0, -1), C(0, 1), 0;
  else m << 1, 0, 0, -1;
  return m;
}

}  // namespace

SpinorRep::SpinorRep(int n) : n_(n) {
  if (n < 1) throw std::invalid_argument("SpinorRep: n >= 1");
  const std::complex<double> I(0, 1);
  int h = n / 2;
  int dim = 1 << h;
  auto eye = [](int d) { return Eigen::MatrixXcd::Identity(d, d).eval(); };
  for (int j = 0; j < h; ++j) {
    for (int k = 1; k <= 2; ++k) {
      Eigen::MatrixXcd m = eye(1);
      for (int l = 0; l < j; ++l) m = kron(m, pauli(3));
      m = kron(m, pauli(k));
      m = kron(m, eye(1 << (h - j - 1)));
      gammas_.push_back(I * m);
    }
  }
  Eigen::MatrixXcd prod = eye(dim);
  for (const auto& g : gammas_) prod = prod * g;
  std::complex<double> ih = 1;
  for (int j = 0; j < h; ++j) ih *= I;
  Eigen::MatrixXcd gamma_even = ih * prod;  // chirality of Cl(2h)
  if (n % 2 == 0) {
    chirality_ = gamma_even;
  } else {
    // choose the irrep with gamma_1...gamma_n = (-i)^{h+1}
    Eigen::MatrixXcd last = I * gamma_even;
    Eigen::MatrixXcd full = prod * last;
    std::complex<double> want = 1;
    for (int j = 0; j <= h; ++j) want *= -I;
    if (std::abs(full(0, 0) - want) > 1e-12) last = -last;
    gammas_.push_back(last);
    chirality_ = eye(dim);
  }
}

Eigen::MatrixXcd SpinorRep::clifford_monomial(std::uint64_t fiber_bits) const {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(dim(), dim());
  for (int i = 1; i <= n_; ++i)
    if (fiber_bits >> (i - 1) & 1) m = m * gammas_[i - 1];
  return m;
}

GradedMatrixRep::GradedMatrixRep(const AlgebraContext& ctx) : forms_(ctx.form_count()), n_(ctx.n()) {
  bool ext = ctx.fiber() == FiberMode::exterior;
  int ext_count = forms_ + (ext ? n_ : 0);
  int ext_dim = 1 << ext_count;
  Eigen::MatrixXcd parity = Eigen::MatrixXcd::Zero(ext_dim, ext_dim);
  for (int s = 0; s < ext_dim; ++s) parity(s, s) = (std::popcount(static_cast<unsigned>(s)) & 1) ? -1.0 : 1.0;
  auto eps = [&](int k) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(ext_dim, ext_dim);
    for (int s = 0; s < ext_dim; ++s) {
      if (s >> k & 1) continue;
      int sign = (std::popcount(static_cast<unsigned>(s & ((1 << k) - 1))) & 1) ? -1 : 1;
      m(s | (1 << k), s) = sign;
    }
    return m;
  };
  if (ext) {
    for (int k = 0; k < ext_count; ++k) gens_.push_back(eps(k));
    identity_ = Eigen::MatrixXcd::Identity(ext_dim, ext_dim);
    return;
  }
  SpinorRep spin(n_);
  Eigen::MatrixXcd spin_id = Eigen::MatrixXcd::Identity(spin.dim(), spin.dim());
  for (int k = 0; k < forms_; ++k) gens_.push_back(kron(eps(k), spin_id));
  for (int i = 1; i <= n_; ++i) gens_.push_back(kron(parity, spin.gamma(i)));
  identity_ = Eigen::MatrixXcd::Identity(ext_dim * spin.dim(), ext_dim * spin.dim());
}

Eigen::MatrixXcd GradedMatrixRep::monomial(std::uint64_t mask) const {
  Eigen::MatrixXcd m = identity_;
  for (std::size_t b = 0; b < gens_.size(); ++b)
    if (mask >> b & 1) m = m * gens_[b];
  return m;
}

template <class S>
Eigen::MatrixXcd GradedMatrixRep::apply(const GradedElement<S>& a) const {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(identity_.rows(), identity_.cols());
  for (const auto& [mask, c] : a.terms()) m += ScalarTraits<S>::to_complex(c) * monomial(mask);
  return m;
}

INDEXLAB_INSTANTIATE(QComplex)
INDEXLAB_INSTANTIATE(CDouble)

}  // namespace indexlab
