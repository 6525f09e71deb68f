#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "indexlab/scalar.hpp"

namespace indexlab {

enum class FiberMode { clifford, exterior };

// Generator layout on a single 64-bit mask:
//   bits [0, q_bar)                 base forms dy_1..dy_q
//   bits [q_bar, q_bar + aux)       auxiliary odd generators
//   bits [forms, forms + n)         fiber generators e_1..e_n
// A canonical monomial is (forms in ascending order)(fiber in ascending order).
class AlgebraContext {
 public:
  AlgebraContext(int n, int q_bar, std::vector<std::string> aux = {}, FiberMode fiber = FiberMode::clifford);

  int n() const { return n_; }
  int q_bar() const { return q_bar_; }
  const std::vector<std::string>& aux() const { return aux_; }
  FiberMode fiber() const { return fiber_; }

  int form_count() const { return q_bar_ + static_cast<int>(aux_.size()); }
  int generator_count() const { return form_count() + n_; }

  // 1-based generator indices.
  std::uint64_t fiber_bit(int i) const;
  std::uint64_t base_bit(int alpha) const;
  std::uint64_t aux_bit(const std::string& name) const;

  std::uint64_t fiber_mask() const { return fiber_mask_; }
  std::uint64_t form_mask() const { return form_mask_; }
  std::uint64_t base_mask() const { return base_mask_; }

  bool same_as(const AlgebraContext& o) const;
  std::shared_ptr<const AlgebraContext> with_fiber(FiberMode mode) const;
  std::string mask_string(std::uint64_t mask) const;

 private:
  int n_, q_bar_;
  std::vector<std::string> aux_;
  FiberMode fiber_;
  std::uint64_t fiber_mask_, form_mask_, base_mask_;
};

using ContextPtr = std::shared_ptr<const AlgebraContext>;

ContextPtr make_context(int n, int q_bar, std::vector<std::string> aux = {}, FiberMode fiber = FiberMode::clifford);

struct BasisMask {
  std::uint64_t bits = 0;

  int degree() const { return __builtin_popcountll(bits); }
  static BasisMask from_sets(const AlgebraContext& ctx, const std::vector<int>& clifford,
                             const std::vector<int>& base = {}, const std::vector<std::string>& aux = {});
  std::vector<int> clifford_set(const AlgebraContext& ctx) const;
  std::vector<int> base_set(const AlgebraContext& ctx) const;
  std::vector<std::string> aux_set(const AlgebraContext& ctx) const;
};

// Sign and result of multiplying two canonical monomials; sign 0 means the product vanishes.
struct BladeProduct {
  int sign;
  std::uint64_t mask;
};
BladeProduct blade_product(const AlgebraContext& ctx, std::uint64_t a, std::uint64_t b);

template <class S>
class GradedElement {
 public:
  using Map = std::map<std::uint64_t, S>;

  GradedElement() = default;
  explicit GradedElement(ContextPtr ctx) : ctx_(std::move(ctx)) {}

  static GradedElement scalar(ContextPtr ctx, const S& c);
  static GradedElement monomial(ContextPtr ctx, std::uint64_t mask, const S& c);
  static GradedElement fiber_gen(ContextPtr ctx, int i);
  static GradedElement base_gen(ContextPtr ctx, int alpha);
  static GradedElement aux_gen(ContextPtr ctx, const std::string& name);

  const ContextPtr& context() const { return ctx_; }
  const AlgebraContext& ctx() const { return *ctx_; }
  const Map& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  S coeff(std::uint64_t mask) const;
  S constant_term() const { return coeff(0); }

  void add_term(std::uint64_t mask, const S& c);

  GradedElement& operator+=(const GradedElement& o);
  GradedElement& operator-=(const GradedElement& o);
  GradedElement& operator*=(const S& c);
  GradedElement operator-() const;

  friend GradedElement operator+(GradedElement a, const GradedElement& b) { return a += b; }
  friend GradedElement operator-(GradedElement a, const GradedElement& b) { return a -= b; }
  friend GradedElement operator*(GradedElement a, const S& c) { return a *= c; }
  friend GradedElement operator*(const S& c, GradedElement a) { return a *= c; }
  friend GradedElement operator*(const GradedElement& a, const GradedElement& b) { return mul(a, b); }
  friend bool operator==(const GradedElement& a, const GradedElement& b) { return a.terms_ == b.terms_; }

  // Drop terms whose total degree exceeds cap, or with |coeff| <= tol.
  GradedElement truncated(int max_degree) const;
  GradedElement chopped(double tol) const;
  GradedElement filtered(std::uint64_t keep_if_subset_of) const;

  int max_degree() const;
  int min_degree() const;
  bool is_even() const;
  bool is_odd() const;
  GradedElement even_part() const;
  GradedElement odd_part() const;
  // Keeps monomials with the given number of form generators.
  GradedElement form_degree_part(int k) const;
  GradedElement with_context(ContextPtr other) const;

  std::string dump() const;

  template <class T>
  GradedElement<T> cast(std::function<T(const S&)> f) const {
    GradedElement<T> r(ctx_);
    for (const auto& [m, c] : terms_) r.add_term(m, f(c));
    return r;
  }

  static GradedElement mul(const GradedElement& a, const GradedElement& b);

 private:
  ContextPtr ctx_;
  Map terms_;
};

template <class S>
GradedElement<S> mul(const GradedElement<S>& a, const GradedElement<S>& b) {
  return GradedElement<S>::mul(a, b);
}

template <class S>
GradedElement<S> symbol_map(const GradedElement<S>& a);
template <class S>
GradedElement<S> quantize(const GradedElement<S>& a);
template <class S>
GradedElement<S> supertrace(const GradedElement<S>& a);
template <class S>
GradedElement<S> trace_odd(const GradedElement<S>& a);

enum class BerezinMode { full, star_zero };
template <class S>
GradedElement<S> berezin(const GradedElement<S>& a, int fixed_dim, BerezinMode mode);

// Quantized exp((theta_j/2) e_{a+2j-1} e_{a+2j}) over the normal blocks.
template <class S>
GradedElement<S> spinor_lift(ContextPtr ctx, int a, const std::vector<Angle>& angles);

// sign(prod sin(theta_j/2)) * prod 2|sin(theta_j/2)|: the det^{1/2}(1 - phi^N) compatible with spinor_lift.
template <class S>
S det_half_one_minus(const std::vector<Angle>& angles);

template <class S>
struct EquivariantSupertrace {
  GradedElement<S> leading;
  GradedElement<S> correction;
  GradedElement<S> total;
  std::string lift_branch;
};

template <class S>
EquivariantSupertrace<S> equivariant_supertrace(const GradedElement<S>& phi_spinor, const GradedElement<S>& A, int a,
                                                const std::vector<Angle>& angles);

// Complex spinor representation; gamma_i^2 = -1, chirality = i^{n/2} gamma_1...gamma_n.
class SpinorRep {
 public:
  explicit SpinorRep(int n);
  int n() const { return n_; }
  int dim() const { return static_cast<int>(chirality_.rows()); }
  const Eigen::MatrixXcd& gamma(int i) const { return gammas_.at(i - 1); }
  const Eigen::MatrixXcd& chirality() const { return chirality_; }
  Eigen::MatrixXcd clifford_monomial(std::uint64_t fiber_bits) const;

 private:
  int n_;
  std::vector<Eigen::MatrixXcd> gammas_;
  Eigen::MatrixXcd chirality_;
};

// Faithful matrix representation of Cl(n) (x) Lambda(forms) with the Koszul sign:
// form generators act by Jordan-Wigner exterior multiplication, fiber generators by parity (x) gamma.
class GradedMatrixRep {
 public:
  explicit GradedMatrixRep(const AlgebraContext& ctx);
  int dim() const { return static_cast<int>(identity_.rows()); }
  Eigen::MatrixXcd monomial(std::uint64_t mask) const;
  template <class S>
  Eigen::MatrixXcd apply(const GradedElement<S>& a) const;

 private:
  int forms_, n_;
  std::vector<Eigen::MatrixXcd> gens_;
  Eigen::MatrixXcd identity_;
};

extern template class GradedElement<QComplex>;
extern template class GradedElement<CDouble>;

}  // namespace indexlab
