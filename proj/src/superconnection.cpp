#include "indexlab/superconnection.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <bit>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace indexlab {

namespace {

// sign of dy_a ^ dy_b reordered into ascending order
int wedge_sign(std::uint32_t a, std::uint32_t b) {
  int swaps = 0;
  for (std::uint32_t m = b; m; m &= m - 1) {
    std::uint32_t bit = m & (~m + 1);
    swaps += std::popcount(a & ~((bit << 1) - 1));
  }
  return swaps % 2 ? -1 : 1;
}

template <class S>
S inv_sqrt_power(const S& t, int k) {
  // t^{-k/2}
  if (k % 2 == 0) return ipow(t, -(k / 2));
  if constexpr (ScalarTraits<S>::exact) {
    if (sgn(t.im) != 0) throw std::domain_error("rescaling needs a real t");
    auto r = exact_sqrt(t.re);
    if (!r) throw std::domain_error("odd-degree rescaling needs sqrt(t) rational in exact mode");
    return ipow(QComplex(*r), -k);
  } else {
    return std::pow(t, -0.5 * k);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// FormScalar

template <class S>
FormScalar<S> FormScalar<S>::constant(BaseSpec base, const S& c) {
  FormScalar f(base);
  f.add_term(0, {}, c);
  return f;
}

template <class S>
FormScalar<S> FormScalar<S>::dy(BaseSpec base, int i) {
  if (i < 1 || i > base.q) throw std::out_of_range("dy index out of range");
  FormScalar f(base);
  f.add_term(1u << (i - 1), {}, ScalarTraits<S>::one());
  return f;
}

template <class S>
FormScalar<S> FormScalar<S>::y(BaseSpec base, int i) {
  if (i < 1 || i > base.q) throw std::out_of_range("y index out of range");
  FormScalar f(base);
  f.add_term(0, MultiIndex::unit(i - 1), ScalarTraits<S>::one());
  return f;
}

template <class S>
void FormScalar<S>::add_term(std::uint32_t mask, const MultiIndex& y, const S& c) {
  if (ScalarTraits<S>::is_zero(c) || y.total() > base_.jet) return;
  if (std::popcount(mask) > base_.q) return;
  auto [it, inserted] = terms_.try_emplace(Key{mask, y}, c);
  if (!inserted) {
    it->second += c;
    if (ScalarTraits<S>::is_zero(it->second)) terms_.erase(it);
  }
}

template <class S>
S FormScalar<S>::coeff(std::uint32_t mask, const MultiIndex& y) const {
  auto it = terms_.find(Key{mask, y});
  return it == terms_.end() ? ScalarTraits<S>::zero() : it->second;
}

template <class S>
FormScalar<S>& FormScalar<S>::operator+=(const FormScalar& o) {
  if (base_.q == 0 && base_.jet == 0 && terms_.empty()) base_ = o.base_;
  for (const auto& [k, c] : o.terms_) add_term(k.first, k.second, c);
  return *this;
}

template <class S>
FormScalar<S>& FormScalar<S>::operator-=(const FormScalar& o) {
  if (base_.q == 0 && base_.jet == 0 && terms_.empty()) base_ = o.base_;
  for (const auto& [k, c] : o.terms_) add_term(k.first, k.second, -c);
  return *this;
}

template <class S>
FormScalar<S>& FormScalar<S>::operator*=(const S& c) {
  if (ScalarTraits<S>::is_zero(c)) {
    terms_.clear();
    return *this;
  }
  for (auto& [k, v] : terms_) v *= c;
  return *this;
}

template <class S>
FormScalar<S> FormScalar<S>::wedge(const FormScalar& o) const {
  FormScalar r(base_);
  for (const auto& [k1, c1] : terms_)
    for (const auto& [k2, c2] : o.terms_) {
      if (k1.first & k2.first) continue;
      MultiIndex y = k1.second + k2.second;
      if (y.total() > base_.jet) continue;
      S c = c1 * c2;
      if (wedge_sign(k1.first, k2.first) < 0) c = -c;
      r.add_term(k1.first | k2.first, y, c);
    }
  return r;
}

template <class S>
FormScalar<S> FormScalar<S>::degree_part(int k) const {
  FormScalar r(base_);
  for (const auto& [key, c] : terms_)
    if (std::popcount(key.first) == k) r.terms_.emplace(key, c);
  return r;
}

template <class S>
FormScalar<S> FormScalar<S>::even_part() const {
  FormScalar r(base_);
  for (const auto& [key, c] : terms_)
    if (std::popcount(key.first) % 2 == 0) r.terms_.emplace(key, c);
  return r;
}

template <class S>
FormScalar<S> FormScalar<S>::jet_at_most(int d) const {
  FormScalar r(base_);
  for (const auto& [key, c] : terms_)
    if (key.second.total() <= d) r.terms_.emplace(key, c);
  return r;
}

template <class S>
int FormScalar<S>::max_degree() const {
  int m = -1;
  for (const auto& [key, c] : terms_) m = std::max(m, std::popcount(key.first));
  return m;
}

template <class S>
int FormScalar<S>::min_degree() const {
  int m = 1 << 20;
  for (const auto& [key, c] : terms_) m = std::min(m, std::popcount(key.first));
  return m;
}

template <class S>
bool FormScalar<S>::is_y_constant() const {
  for (const auto& [key, c] : terms_)
    if (key.second.total()) return false;
  return true;
}

template <class S>
FormScalar<S> FormScalar<S>::d() const {
  FormScalar r(base_);
  for (const auto& [key, c] : terms_)
    for (int j = 0; j < base_.q; ++j) {
      if (key.second[j] == 0 || (key.first >> j) & 1u) continue;
      MultiIndex y = key.second;
      y[j] -= 1;
      S v = c * ScalarTraits<S>::from_int(key.second[j]);
      if (std::popcount(key.first & ((1u << j) - 1)) % 2) v = -v;
      r.add_term(key.first | (1u << j), y, v);
    }
  return r;
}

template <class S>
FormScalar<S> FormScalar<S>::rescaled(const S& t) const {
  FormScalar r(base_);
  for (const auto& [key, c] : terms_) r.add_term(key.first, key.second, c * inv_sqrt_power(t, std::popcount(key.first)));
  return r;
}

template <class S>
double FormScalar<S>::max_abs() const {
  double m = 0;
  for (const auto& [key, c] : terms_) m = std::max(m, ScalarTraits<S>::abs(c));
  return m;
}

template <class S>
std::string FormScalar<S>::dump() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [key, c] : terms_) {
    if (!first) os << " + ";
    first = false;
    os << "(" << to_string(c) << ")";
    for (int j = 0; j < base_.q; ++j)
      if (key.second[j]) os << "*y" << j + 1 << (key.second[j] > 1 ? "^" + std::to_string(key.second[j]) : "");
    for (int j = 0; j < base_.q; ++j)
      if ((key.first >> j) & 1u) os << "*dy" << j + 1;
  }
  return os.str();
}

template class FormScalar<QComplex>;
template class FormScalar<CDouble>;

// ---------------------------------------------------------------------------
// FormMatrix

namespace {

template <class S>
S from_cd(const CDouble& z) {
  if constexpr (ScalarTraits<S>::exact) {
    return QComplex(Rational(z.real()), Rational(z.imag()));  // binary-exact
  } else {
    return z;
  }
}

}  // namespace

template <class S>
FormMatrix<S>::FormMatrix(BaseSpec base, std::vector<int> grading)
    : base_(base), grading_(std::move(grading)), data_(grading_.size() * grading_.size(), FormScalar<S>(base)) {
  for (int g : grading_)
    if (g != 1 && g != -1) throw std::invalid_argument("FormMatrix: grading entries must be +1 or -1");
}

template <class S>
FormMatrix<S> FormMatrix<S>::identity(BaseSpec base, std::vector<int> grading) {
  FormMatrix m(base, std::move(grading));
  for (int i = 0; i < m.size(); ++i) m(i, i) = FormScalar<S>::constant(base, ScalarTraits<S>::one());
  return m;
}

template <class S>
FormMatrix<S> FormMatrix<S>::numeric(BaseSpec base, std::vector<int> grading, const Eigen::MatrixXcd& v) {
  FormMatrix m(base, std::move(grading));
  if (v.rows() != m.size() || v.cols() != m.size()) throw std::invalid_argument("FormMatrix::numeric: size mismatch");
  for (int i = 0; i < m.size(); ++i)
    for (int j = 0; j < m.size(); ++j) m(i, j) = FormScalar<S>::constant(base, from_cd<S>(v(i, j)));
  return m;
}

template <class S>
FormMatrix<S> FormMatrix<S>::times_form(const FormScalar<S>& w, BaseSpec base, std::vector<int> grading,
                                        const Eigen::MatrixXcd& v) {
  FormMatrix m = numeric(base, std::move(grading), v);
  for (auto& e : m.data_) e = w * e;
  return m;
}

template <class S>
FormMatrix<S>& FormMatrix<S>::operator+=(const FormMatrix& o) {
  if (size() != o.size()) throw std::invalid_argument("FormMatrix: size mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
  return *this;
}

template <class S>
FormMatrix<S>& FormMatrix<S>::operator-=(const FormMatrix& o) {
  if (size() != o.size()) throw std::invalid_argument("FormMatrix: size mismatch");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
  return *this;
}

template <class S>
FormMatrix<S>& FormMatrix<S>::operator*=(const S& c) {
  for (auto& e : data_) e *= c;
  return *this;
}

template <class S>
FormMatrix<S> FormMatrix<S>::times(const FormMatrix& o) const {
  if (size() != o.size() || grading_ != o.grading_) throw std::invalid_argument("FormMatrix: incompatible product");
  const int n = size();
  FormMatrix r(base_, grading_);
  std::vector<FormScalar<S>> even(o.data_.size()), odd(o.data_.size());
  for (std::size_t k = 0; k < o.data_.size(); ++k) {
    even[k] = o.data_[k].even_part();
    odd[k] = o.data_[k] - even[k];
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const FormScalar<S>& a = (*this)(i, j);
      if (a.is_zero()) continue;
      bool twist = grading_[i] != grading_[j];
      for (int k = 0; k < n; ++k) {
        std::size_t idx = static_cast<std::size_t>(j) * n + k;
        if (o.data_[idx].is_zero()) continue;
        r(i, k) += a * even[idx];
        if (twist) r(i, k) -= a * odd[idx];
        else r(i, k) += a * odd[idx];
      }
    }
  return r;
}

template <class S>
FormMatrix<S> FormMatrix<S>::supercommutator(const FormMatrix& o) const {
  int p = parity(), q = o.parity();
  if (p < 0 || q < 0) throw std::invalid_argument("supercommutator: operands must have definite parity");
  FormMatrix ab = times(o), ba = o.times(*this);
  if (p == 1 && q == 1) return ab + ba;
  return ab - ba;
}

template <class S>
FormScalar<S> FormMatrix<S>::supertrace() const {
  FormScalar<S> s(base_);
  for (int i = 0; i < size(); ++i) {
    if (grading_[i] > 0) s += (*this)(i, i);
    else s -= (*this)(i, i);
  }
  return s;
}

template <class S>
FormScalar<S> FormMatrix<S>::trace() const {
  FormScalar<S> s(base_);
  for (int i = 0; i < size(); ++i) s += (*this)(i, i);
  return s;
}

template <class S>
FormMatrix<S> FormMatrix<S>::degree_part(int k) const {
  FormMatrix r(base_, grading_);
  for (std::size_t i = 0; i < data_.size(); ++i) r.data_[i] = data_[i].degree_part(k);
  return r;
}

template <class S>
FormMatrix<S> FormMatrix<S>::positive_degree_part() const {
  return *this - degree_part(0);
}

template <class S>
FormMatrix<S> FormMatrix<S>::rescaled(const S& t) const {
  FormMatrix r(base_, grading_);
  for (std::size_t i = 0; i < data_.size(); ++i) r.data_[i] = data_[i].rescaled(t);
  return r;
}

template <class S>
FormMatrix<S> FormMatrix<S>::jet_at_most(int d) const {
  FormMatrix r(base_, grading_);
  for (std::size_t i = 0; i < data_.size(); ++i) r.data_[i] = data_[i].jet_at_most(d);
  return r;
}

template <class S>
int FormMatrix<S>::min_degree() const {
  int m = 1 << 20;
  for (const auto& e : data_)
    if (!e.is_zero()) m = std::min(m, e.min_degree());
  return m;
}

template <class S>
int FormMatrix<S>::max_degree() const {
  int m = -1;
  for (const auto& e : data_) m = std::max(m, e.max_degree());
  return m;
}

template <class S>
bool FormMatrix<S>::is_zero() const {
  for (const auto& e : data_)
    if (!e.is_zero()) return false;
  return true;
}

template <class S>
int FormMatrix<S>::parity() const {
  int p = -2;
  for (int i = 0; i < size(); ++i)
    for (int j = 0; j < size(); ++j)
      for (const auto& [key, c] : (*this)(i, j).terms()) {
        int q = (std::popcount(key.first) + (grading_[i] != grading_[j])) % 2;
        if (p == -2) p = q;
        else if (p != q) return -1;
      }
  return p == -2 ? 0 : p;
}

template <class S>
Eigen::MatrixXcd FormMatrix<S>::constant_numeric() const {
  Eigen::MatrixXcd m(size(), size());
  for (int i = 0; i < size(); ++i)
    for (int j = 0; j < size(); ++j) m(i, j) = ScalarTraits<S>::to_complex((*this)(i, j).constant_term());
  return m;
}

template <class S>
bool FormMatrix<S>::degree_zero_is_y_constant() const {
  for (const auto& e : data_)
    if (!e.degree_part(0).is_y_constant()) return false;
  return true;
}

template <class S>
double FormMatrix<S>::max_abs() const {
  double m = 0;
  for (const auto& e : data_) m = std::max(m, e.max_abs());
  return m;
}

template class FormMatrix<QComplex>;
template class FormMatrix<CDouble>;

template <class S>
Curvature<S> curvature(const Superconnection<S>& B) {
  if (B.A_plus.size() && !B.A_plus.degree_part(0).is_zero())
    throw std::invalid_argument("curvature: A_plus must have positive form degree");
  // (d + b)^2 = db + b^2, d acting entrywise
  FormMatrix<S> b = B.D + B.A_plus;
  FormMatrix<S> F = b * b;
  for (int i = 0; i < F.size(); ++i)
    for (int j = 0; j < F.size(); ++j) F(i, j) += b(i, j).d();
  return {F, F.degree_part(0), F.positive_degree_part()};
}

// ---------------------------------------------------------------------------
// Duhamel expansion

CDouble divided_difference_exp(const std::vector<CDouble>& nodes, double t, bool derivative) {
  const int m = static_cast<int>(nodes.size());
  if (m == 0) throw std::invalid_argument("divided_difference_exp: no nodes");
  Eigen::MatrixXcd Z = Eigen::MatrixXcd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    Z(i, i) = nodes[i];
    if (i + 1 < m) Z(i, i + 1) = 1;
  }
  Eigen::MatrixXcd E = (Z * CDouble(-t)).exp();
  if (derivative) E = -Z * E;
  return E(0, m - 1);
}

namespace {

// Eigenbasis of the (even, y-constant) degree-0 part and all path products of the positive part.
class DuhamelEngine {
 public:
  explicit DuhamelEngine(const FormMatrix<CDouble>& F) : base_(F.base()), grading_(F.grading()) {
    if (!F.degree_zero_is_y_constant())
      throw std::domain_error("duhamel_exp: degree-0 part must be constant in y in float mode");
    const int n = F.size();
    Eigen::MatrixXcd F0 = F.constant_numeric();
    V_ = Eigen::MatrixXcd::Zero(n, n);
    lambda_.assign(n, 0);
    for (int g : {1, -1}) {
      std::vector<int> idx;
      for (int i = 0; i < n; ++i)
        if (grading_[i] == g) idx.push_back(i);
      for (int i = 0; i < n; ++i)
        for (int j : idx)
          if (grading_[i] != g && std::abs(F0(i, j)) > 0) throw std::domain_error("duhamel_exp: degree-0 part must be even");
      if (idx.empty()) continue;
      Eigen::MatrixXcd blk(idx.size(), idx.size());
      for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = 0; b < idx.size(); ++b) blk(a, b) = F0(idx[a], idx[b]);
      Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(blk);
      for (std::size_t a = 0; a < idx.size(); ++a) {
        lambda_[idx[a]] = es.eigenvalues()(a);
        for (std::size_t b = 0; b < idx.size(); ++b) V_(idx[b], idx[a]) = es.eigenvectors()(b, a);
      }
    }
    Vinv_ = V_.inverse();
    FormMatrix<CDouble> G = FormMatrix<CDouble>::numeric(base_, grading_, Vinv_) * F.positive_degree_part() *
                            FormMatrix<CDouble>::numeric(base_, grading_, V_);
    // enumerate paths i0 -> i1 -> ... -> ik with nonzero form products
    for (int a = 0; a < n; ++a) {
      std::vector<int> path{a};
      FormScalar<CDouble> unit = FormScalar<CDouble>::constant(base_, 1.0);
      std::function<void(const FormScalar<CDouble>&)> dfs = [&](const FormScalar<CDouble>& acc) {
        paths_.push_back({path, acc});
        int j = path.back();
        bool twist = grading_[a] != grading_[j];
        for (int l = 0; l < n; ++l) {
          const FormScalar<CDouble>& h = G(j, l);
          if (h.is_zero()) continue;
          FormScalar<CDouble> he = h.even_part(), ho = h - he;
          FormScalar<CDouble> next = acc * he + (twist ? -(acc * ho) : acc * ho);
          if (next.is_zero()) continue;
          path.push_back(l);
          dfs(next);
          path.pop_back();
        }
      };
      dfs(unit);
    }
  }

  // sum over paths of length k (k < 0: all) of weight(path) * product, conjugated back
  template <class W>
  FormMatrix<CDouble> assemble(W weight, int k = -1) const {
    FormMatrix<CDouble> R(base_, grading_);
    for (const auto& p : paths_) {
      int len = static_cast<int>(p.nodes.size()) - 1;
      if (k >= 0 && len != k) continue;
      std::vector<CDouble> lam;
      for (int i : p.nodes) lam.push_back(lambda_[i]);
      CDouble w = weight(lam);
      if (w == CDouble(0)) continue;
      R(p.nodes.front(), p.nodes.back()) += p.product * w;
    }
    return FormMatrix<CDouble>::numeric(base_, grading_, V_) * R * FormMatrix<CDouble>::numeric(base_, grading_, Vinv_);
  }

 private:
  struct Path {
    std::vector<int> nodes;
    FormScalar<CDouble> product;
  };
  BaseSpec base_;
  std::vector<int> grading_;
  Eigen::MatrixXcd V_, Vinv_;
  std::vector<CDouble> lambda_;
  std::vector<Path> paths_;
};

// (-t)^k int_{Delta_k} prod_j exp(-sigma_j t lambda_j) by tensor Gauss-Legendre with a Duffy-type map.
CDouble simplex_weight(const std::vector<CDouble>& lam, double t, int nodes) {
  const int k = static_cast<int>(lam.size()) - 1;
  if (k == 0) return std::exp(-t * lam[0]);
  std::vector<double> x, w;
  {
    // Gauss-Legendre on [0,1]
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(nodes, nodes);
    for (int i = 1; i < nodes; ++i) J(i, i - 1) = J(i - 1, i) = i / std::sqrt(4.0 * i * i - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    for (int i = 0; i < nodes; ++i) {
      x.push_back(0.5 * (es.eigenvalues()(i) + 1));
      w.push_back(es.eigenvectors()(0, i) * es.eigenvectors()(0, i));
    }
  }
  CDouble sum = 0;
  std::vector<int> idx(k, 0);
  while (true) {
    // s_k = u_k, s_j = u_j s_{j+1}; jacobian prod_{j>=2} s_j
    std::vector<double> s(k + 1);
    double weight = 1, jac = 1;
    s[k] = x[idx[k - 1]];
    weight *= w[idx[k - 1]];
    for (int j = k - 1; j >= 1; --j) {
      s[j] = x[idx[j - 1]] * s[j + 1];
      weight *= w[idx[j - 1]];
      jac *= s[j + 1];
    }
    s[0] = 0;
    CDouble e = 0;
    for (int j = 0; j <= k; ++j) {
      double lo = s[j], hi = j < k ? s[j + 1] : 1.0;
      e += (hi - lo) * lam[j];
    }
    sum += weight * jac * std::exp(-t * e);
    int p = 0;
    while (p < k && ++idx[p] == nodes) idx[p++] = 0;
    if (p == k) break;
  }
  return std::pow(-t, k) * sum;
}

template <class S>
void check_exact_nilpotent(const FormMatrix<S>& F) {
  for (int i = 0; i < F.size(); ++i)
    for (int j = 0; j < F.size(); ++j)
      if (!ScalarTraits<S>::is_zero(F(i, j).constant_term()))
        throw std::domain_error("duhamel_exp: exact mode needs a vanishing constant part (use float mode)");
}

template <class S>
bool constant_part_vanishes(const FormMatrix<S>& F) {
  for (int i = 0; i < F.size(); ++i)
    for (int j = 0; j < F.size(); ++j)
      if (!ScalarTraits<S>::is_zero(F(i, j).constant_term())) return false;
  return true;
}

}  // namespace

template <class S>
FormMatrix<S> duhamel_exp(const FormMatrix<S>& F, const S& t, DuhamelOptions opt) {
  if constexpr (ScalarTraits<S>::exact) {
    check_exact_nilpotent(F);
  }
  if (ScalarTraits<S>::exact || (constant_part_vanishes(F) && opt.mode == DuhamelMode::exact)) {
    // terminating power series
    FormMatrix<S> result = FormMatrix<S>::identity(F.base(), F.grading());
    FormMatrix<S> term = result;
    const int limit = F.base().q + F.base().jet + 1;
    for (int k = 1;; ++k) {
      term = term * F * (-t / ScalarTraits<S>::from_int(k));
      if (term.is_zero()) break;
      if (k > limit) throw std::logic_error("duhamel_exp: nilpotent series failed to terminate");
      result += term;
    }
    return result;
  }
  if constexpr (!ScalarTraits<S>::exact) {
    if (t.imag() != 0) throw std::invalid_argument("duhamel_exp: t must be real");
    DuhamelEngine eng(F);
    double tr = t.real();
    if (opt.mode == DuhamelMode::exact)
      return eng.assemble([tr](const std::vector<CDouble>& lam) { return divided_difference_exp(lam, tr); });
    return eng.assemble([tr, &opt](const std::vector<CDouble>& lam) { return simplex_weight(lam, tr, opt.nodes); });
  }
  return F;
}

template <class S>
FormMatrix<S> duhamel_term(const FormMatrix<S>& F, const S& t, int k, DuhamelOptions opt) {
  if constexpr (ScalarTraits<S>::exact) {
    check_exact_nilpotent(F);
    FormMatrix<S> term = FormMatrix<S>::identity(F.base(), F.grading());
    for (int j = 1; j <= k; ++j) term = term * F * (-t / ScalarTraits<S>::from_int(j));
    return term;
  } else {
    DuhamelEngine eng(F);
    double tr = t.real();
    if (opt.mode == DuhamelMode::exact)
      return eng.assemble([tr](const std::vector<CDouble>& lam) { return divided_difference_exp(lam, tr); }, k);
    return eng.assemble([tr, &opt](const std::vector<CDouble>& lam) { return simplex_weight(lam, tr, opt.nodes); }, k);
  }
}

FormMatrix<CDouble> duhamel_exp_dt(const FormMatrix<CDouble>& F, double t) {
  DuhamelEngine eng(F);
  return eng.assemble([t](const std::vector<CDouble>& lam) { return divided_difference_exp(lam, t, true); });
}

double heat_residual(const FormMatrix<CDouble>& F, double t, DuhamelOptions opt) {
  FormMatrix<CDouble> E = duhamel_exp(F, CDouble(t), opt);
  FormMatrix<CDouble> Et;
  if (opt.mode == DuhamelMode::exact) {
    Et = duhamel_exp_dt(F, t);
  } else {
    // Richardson-extrapolated central differences
    auto central = [&](double h) {
      return (duhamel_exp(F, CDouble(t + h), opt) - duhamel_exp(F, CDouble(t - h), opt)) * CDouble(0.5 / h);
    };
    double h = 1e-3 * std::max(1.0, t);
    Et = (central(h / 2) * CDouble(4) - central(h)) * CDouble(1.0 / 3);
  }
  return (Et + F * E).max_abs();
}

template <class S>
FormScalar<S> chern_form(const Superconnection<S>& B, const S& t, const Eigen::MatrixXcd& phi, ChernResult* info,
                         DuhamelOptions opt) {
  const BaseSpec base = B.D.base();
  FormMatrix<S> P = FormMatrix<S>::numeric(base, B.D.grading(), phi);
  if (P.parity() != 0) throw std::invalid_argument("chern_form: phi must be even");
  bool commutes = (P * B.D - B.D * P).is_zero();
  if (info) {
    info->phi_commutes = commutes;
    info->warning = commutes ? "" : "phi does not commute with D; closedness not guaranteed";
  }
  Curvature<S> c = curvature(B);
  FormMatrix<S> E = duhamel_exp(c.F, t, opt);
  return (P * E).supertrace().rescaled(t);
}

// ---------------------------------------------------------------------------
// d alpha = omega

namespace {

std::vector<MultiIndex> monomials_up_to(int q, int deg) {
  std::vector<MultiIndex> out;
  MultiIndex cur;
  std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == q) {
      out.push_back(cur);
      return;
    }
    for (int k = 0; k <= left; ++k) {
      cur[i] = static_cast<std::int8_t>(k);
      rec(i + 1, left - k);
    }
    cur[i] = 0;
  };
  rec(0, deg);
  return out;
}

}  // namespace

ExactDifferential solve_exact(const FormScalar<QComplex>& omega) {
  ExactDifferential r;
  const BaseSpec base = omega.base();
  const int q = base.q, K = base.jet;
  r.checked_jet = K - 1;
  r.alpha = FormScalar<QComplex>(BaseSpec{q, K});
  // omega's components of y-degree <= K-1 are the reliable ones for a jet of order K closed up to K-1
  FormScalar<QComplex> target = omega.jet_at_most(K - 1);
  if (!target.degree_part(0).is_zero()) return r;
  if (target.is_zero()) {
    r.solvable = true;
    return r;
  }
  // unknowns: alpha coefficients (mask of degree p-1, y^beta with |beta| <= K)
  std::vector<std::pair<std::uint32_t, MultiIndex>> unknowns;
  auto monos = monomials_up_to(q, K);
  for (std::uint32_t m = 0; m < (1u << q); ++m) {
    int p = std::popcount(m) + 1;
    if (target.degree_part(p).is_zero()) continue;
    for (const auto& b : monos) unknowns.emplace_back(m, b);
  }
  // equations: coefficients of every (mask, y^beta) with |beta| <= K-1
  std::map<std::pair<std::uint32_t, MultiIndex>, int> row_of;
  std::vector<std::vector<std::pair<int, QComplex>>> rows;
  auto row = [&](std::uint32_t mask, const MultiIndex& y) {
    auto key = std::make_pair(mask, y);
    auto it = row_of.find(key);
    if (it != row_of.end()) return it->second;
    row_of[key] = static_cast<int>(rows.size());
    rows.emplace_back();
    return static_cast<int>(rows.size()) - 1;
  };
  for (std::size_t u = 0; u < unknowns.size(); ++u) {
    FormScalar<QComplex> basis(BaseSpec{q, K});
    basis.add_term(unknowns[u].first, unknowns[u].second, QComplex(1));
    const FormScalar<QComplex> db = basis.d();
    for (const auto& [key, c] : db.terms())
      if (key.second.total() <= K - 1) rows[row(key.first, key.second)].push_back({static_cast<int>(u), c});
  }
  for (const auto& [key, c] : target.terms()) row(key.first, key.second);
  const int nr = static_cast<int>(rows.size()), nc = static_cast<int>(unknowns.size());
  std::vector<std::vector<QComplex>> M(nr, std::vector<QComplex>(nc + 1));
  for (int i = 0; i < nr; ++i)
    for (const auto& [col, c] : rows[i]) M[i][col] += c;
  for (const auto& [key, c] : target.terms()) M[row_of.at(key)][nc] = c;
  // exact Gauss-Jordan elimination
  std::vector<int> pivot_col;
  int rr = 0;
  for (int col = 0; col < nc && rr < nr; ++col) {
    int piv = -1;
    for (int i = rr; i < nr; ++i)
      if (!M[i][col].is_zero()) {
        piv = i;
        break;
      }
    if (piv < 0) continue;
    std::swap(M[piv], M[rr]);
    QComplex inv = QComplex(1) / M[rr][col];
    for (int j = col; j <= nc; ++j) M[rr][j] *= inv;
    for (int i = 0; i < nr; ++i) {
      if (i == rr || M[i][col].is_zero()) continue;
      QComplex f = M[i][col];
      for (int j = col; j <= nc; ++j) M[i][j] -= f * M[rr][j];
    }
    pivot_col.push_back(col);
    ++rr;
  }
  for (int i = rr; i < nr; ++i)
    if (!M[i][nc].is_zero()) return r;
  for (int i = 0; i < rr; ++i) r.alpha.add_term(unknowns[pivot_col[i]].first, unknowns[pivot_col[i]].second, M[i][nc]);
  r.solvable = true;
  return r;
}

// ---------------------------------------------------------------------------
// JLO cochain

namespace {

struct GaussRule {
  std::vector<double> x, w;
};

GaussRule gauss01(int n) {
  GaussRule g;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) J(i, i - 1) = J(i - 1, i) = i / std::sqrt(4.0 * i * i - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  for (int i = 0; i < n; ++i) {
    g.x.push_back(0.5 * (es.eigenvalues()(i) + 1));
    g.w.push_back(es.eigenvectors()(0, i) * es.eigenvectors()(0, i));
  }
  return g;
}

FormScalar<CDouble> jlo_quadrature(const DuhamelEngine& eng, const FormMatrix<CDouble>& front,
                                   const std::vector<FormMatrix<CDouble>>& T, int k, double t, int nodes) {
  const int m = 2 * k;  // simplex dimension; gaps sigma_0..sigma_m
  FormScalar<CDouble> sum(front.base());
  if (m == 0) {
    FormMatrix<CDouble> E = eng.assemble([t](const std::vector<CDouble>& lam) { return divided_difference_exp(lam, t); });
    return (front * T[0] * E).supertrace();
  }
  GaussRule g = gauss01(nodes);
  std::vector<int> idx(m, 0);
  while (true) {
    std::vector<double> s(m + 2);
    double weight = 1, jac = 1;
    s[m] = g.x[idx[m - 1]];
    weight *= g.w[idx[m - 1]];
    for (int j = m - 1; j >= 1; --j) {
      s[j] = g.x[idx[j - 1]] * s[j + 1];
      weight *= g.w[idx[j - 1]];
      jac *= s[j + 1];
    }
    s[0] = 0;
    s[m + 1] = 1;
    FormMatrix<CDouble> prod = front * T[0];
    for (int j = 0; j <= m; ++j) {
      double sigma = s[j + 1] - s[j];
      FormMatrix<CDouble> E =
          eng.assemble([t, sigma](const std::vector<CDouble>& lam) { return divided_difference_exp(lam, t * sigma); });
      prod = prod * E;
      if (j < m) prod = prod * T[j + 1];
    }
    sum += prod.supertrace() * CDouble(weight * jac);
    int p = 0;
    while (p < m && ++idx[p] == nodes) idx[p++] = 0;
    if (p == m) break;
  }
  return sum;
}

}  // namespace

JloResult jlo_cochain(const Superconnection<CDouble>& B, double t, const Eigen::MatrixXcd& phi,
                      const std::vector<FormMatrix<CDouble>>& T, int k, JloOptions opt) {
  if (k < 0) throw std::invalid_argument("jlo_cochain: k >= 0");
  if (static_cast<int>(T.size()) != 2 * k + 1) throw std::invalid_argument("jlo_cochain: need 2k+1 inputs");
  if (!(t > 0)) throw std::invalid_argument("jlo_cochain: t must be positive");
  Curvature<CDouble> c = curvature(B);
  DuhamelEngine eng(c.F);
  FormMatrix<CDouble> front = FormMatrix<CDouble>::numeric(B.D.base(), B.D.grading(), phi);
  double tk = std::pow(t, k);
  JloResult r;
  FormScalar<CDouble> fine = jlo_quadrature(eng, front, T, k, t, opt.nodes) * CDouble(tk);
  r.value = fine.rescaled(CDouble(t));
  if (opt.richardson && k > 0) {
    FormScalar<CDouble> coarse = jlo_quadrature(eng, front, T, k, t, std::max(1, opt.nodes / 2)) * CDouble(tk);
    r.error_estimate = (fine - coarse).rescaled(CDouble(t)).max_abs();
  }
  return r;
}

// ---------------------------------------------------------------------------
// Grassmann variable

DualMatrix dual_exp(const DualMatrix& X) {
  const Eigen::Index n = X.P.rows();
  double norm = X.P.cwiseAbs().rowwise().sum().maxCoeff();
  int s = norm > 0.5 ? static_cast<int>(std::ceil(std::log2(norm / 0.5))) : 0;
  double scale = std::ldexp(1.0, -s);
  DualMatrix Y{X.P * scale, X.Q * scale};
  DualMatrix result{Eigen::MatrixXcd::Identity(n, n), Eigen::MatrixXcd::Zero(n, n)};
  DualMatrix term = result;
  for (int k = 1; k <= 30; ++k) {
    term = term * Y;
    term.P /= static_cast<double>(k);
    term.Q /= static_cast<double>(k);
    result = result + term;
  }
  for (int i = 0; i < s; ++i) result = result * result;
  return result;
}

GrassmannReport grassmann_exp_identity(const Eigen::MatrixXcd& D, double t) {
  if (D.rows() != D.cols()) throw std::invalid_argument("grassmann_exp_identity: square matrix required");
  GrassmannReport r;
  Eigen::MatrixXcd D2 = D * D;
  r.lhs = dual_exp(DualMatrix{-t * D2, t * D});
  Eigen::MatrixXcd E = (-t * D2).exp();
  r.rhs = DualMatrix{E, t * D * E};
  r.deviation = std::max((r.lhs.P - r.rhs.P).cwiseAbs().maxCoeff(), (r.lhs.Q - r.rhs.Q).cwiseAbs().maxCoeff());
  return r;
}

// ---------------------------------------------------------------------------
// Eta-form integrand

EtaFormIntegrand eta_form_integrand(const Superconnection<CDouble>& B, double t, const Eigen::MatrixXcd& phi,
                                    const FormMatrix<CDouble>* cT4) {
  if (!(t > 0)) throw std::invalid_argument("eta_form_integrand: t must be positive");
  const BaseSpec base = B.D.base();
  const auto& grading = B.D.grading();
  FormMatrix<CDouble> P = FormMatrix<CDouble>::numeric(base, grading, phi);
  FormMatrix<CDouble> b = B.D + B.A_plus;
  const double st = std::sqrt(t);
  FormMatrix<CDouble> Bt = b.rescaled(CDouble(t)) * CDouble(st);
  // dB_t/dt = (1/2 sqrt t) psi_t(D + sum_j (1-j) A_j)
  FormMatrix<CDouble> gen = B.D;
  for (int j = 1; j <= base.q; ++j) gen += B.A_plus.degree_part(j) * CDouble(1 - j);
  FormMatrix<CDouble> dBt = gen.rescaled(CDouble(t)) * CDouble(0.5 / st);
  Superconnection<CDouble> scaled{Bt.degree_part(0), Bt.positive_degree_part()};
  FormMatrix<CDouble> E1 = duhamel_exp(curvature(scaled).F, CDouble(1));
  EtaFormIntegrand r;
  r.value = (P * dBt * E1).trace().even_part();
  FormMatrix<CDouble> alt = B.D;
  if (cT4) alt += *cT4;
  FormMatrix<CDouble> E = duhamel_exp(curvature(B).F, CDouble(t));
  r.alternative = ((P * alt * E).rescaled(CDouble(t)).trace() * CDouble(0.5 / st)).even_part();
  double a = r.alternative.max_abs(), v = r.value.max_abs();
  r.ratio = v > 0 ? a / v : (a > 0 ? INFINITY : 1.0);
  return r;
}

#define INDEXLAB_SUPERCONNECTION(S)                                                                        \
  template Curvature<S> curvature(const Superconnection<S>&);                                              \
  template FormMatrix<S> duhamel_exp(const FormMatrix<S>&, const S&, DuhamelOptions);                      \
  template FormMatrix<S> duhamel_term(const FormMatrix<S>&, const S&, int, DuhamelOptions);                \
  template FormScalar<S> chern_form(const Superconnection<S>&, const S&, const Eigen::MatrixXcd&, ChernResult*, \
                                    DuhamelOptions);

INDEXLAB_SUPERCONNECTION(QComplex)
INDEXLAB_SUPERCONNECTION(CDouble)

}  // namespace indexlab
