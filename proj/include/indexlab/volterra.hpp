#pragma once

#include <array>
#include <compare>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "indexlab/char_forms.hpp"
#include "indexlab/graded_algebra.hpp"

namespace indexlab {

constexpr int kMaxDim = 8;

struct MultiIndex {
  std::array<std::int8_t, kMaxDim> v{};

  int operator[](int i) const { return v[i]; }
  std::int8_t& operator[](int i) { return v[i]; }
  int total() const;
  static MultiIndex unit(int i);
  friend MultiIndex operator+(MultiIndex a, const MultiIndex& b);
  friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;
  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
};

// x^alpha xi^beta tau^k (i tau + |xi|^2)^{-m}
struct SymbolKey {
  MultiIndex x, xi;
  int tau = 0;
  int res = 0;

  int homogeneity() const { return xi.total() + 2 * tau - 2 * res; }
  friend auto operator<=>(const SymbolKey&, const SymbolKey&) = default;
  friend bool operator==(const SymbolKey&, const SymbolKey&) = default;
};

// Finite sum of coeff * x^alpha xi^beta tau^k res^{-m}. Canonical form has tau = 0 whenever m >= 1,
// using tau = -i(res - |xi|^2); the representation is then unique.
template <class S>
class GradedSymbol {
 public:
  GradedSymbol() = default;
  GradedSymbol(ContextPtr ctx, int n) : ctx_(std::move(ctx)), n_(n) {}

  static GradedSymbol constant(ContextPtr ctx, int n, const GradedElement<S>& c);
  static GradedSymbol resolvent(ContextPtr ctx, int n, int m);  // (i tau + |xi|^2)^{-m}

  const ContextPtr& context() const { return ctx_; }
  int n() const { return n_; }
  const std::map<SymbolKey, GradedElement<S>>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int declared_order() const { return declared_order_; }
  void set_declared_order(int d) { declared_order_ = d; }

  void add_term(const SymbolKey& key, const GradedElement<S>& c);

  GradedSymbol& operator+=(const GradedSymbol& o);
  GradedSymbol& operator-=(const GradedSymbol& o);
  GradedSymbol& operator*=(const S& c);
  friend GradedSymbol operator+(GradedSymbol a, const GradedSymbol& b) { return a += b; }
  friend GradedSymbol operator-(GradedSymbol a, const GradedSymbol& b) { return a -= b; }
  friend GradedSymbol operator*(GradedSymbol a, const S& c) { return a *= c; }
  friend bool operator==(const GradedSymbol& a, const GradedSymbol& b) { return a.terms_ == b.terms_; }

  // Pointwise product (coefficients multiplied left to right).
  GradedSymbol times(const GradedSymbol& o) const;
  GradedSymbol left_multiply(const GradedElement<S>& c) const;
  GradedSymbol d_xi(int i) const;
  GradedSymbol d_x(int i) const;

  GradedSymbol homogeneous_part(int d) const;
  GradedSymbol homogeneity_at_least(int d) const;
  GradedSymbol x_degree_at_most(int d) const;
  GradedSymbol at_x_zero() const { return x_degree_at_most(0); }
  int max_homogeneity() const;
  int min_homogeneity() const;
  int max_x_degree() const;

  std::string dump() const;

 private:
  ContextPtr ctx_;
  int n_ = 0;
  int declared_order_ = 0;
  std::map<SymbolKey, GradedElement<S>> terms_;
};

// Asymptotic composition sum_alpha (1/alpha!) d_xi^alpha q1 D_x^alpha q2, D = -i d_x; terms of
// homogeneity below min_homogeneity are dropped when it is given.
template <class S>
GradedSymbol<S> compose(const GradedSymbol<S>& q1, const GradedSymbol<S>& q2, std::optional<int> min_homogeneity = {});

// coeff * x^alpha d_x^beta d_t^k
struct OpKey {
  MultiIndex x, dx;
  int dt = 0;
  friend auto operator<=>(const OpKey&, const OpKey&) = default;
  friend bool operator==(const OpKey&, const OpKey&) = default;
};

template <class S>
class DiffOp {
 public:
  DiffOp() = default;
  DiffOp(ContextPtr ctx, int n) : ctx_(std::move(ctx)), n_(n) {}

  static DiffOp identity(ContextPtr ctx, int n);
  static DiffOp laplacian(ContextPtr ctx, int n);  // -sum d_i^2
  static DiffOp d_t(ContextPtr ctx, int n);
  static DiffOp d(ContextPtr ctx, int n, int i);
  static DiffOp x(ContextPtr ctx, int n, int i);
  static DiffOp coefficient(ContextPtr ctx, int n, const GradedElement<S>& c);

  const ContextPtr& context() const { return ctx_; }
  int n() const { return n_; }
  const std::map<OpKey, GradedElement<S>>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  void add_term(const OpKey& key, const GradedElement<S>& c);

  DiffOp& operator+=(const DiffOp& o);
  DiffOp& operator-=(const DiffOp& o);
  DiffOp& operator*=(const S& c);
  friend DiffOp operator+(DiffOp a, const DiffOp& b) { return a += b; }
  friend DiffOp operator-(DiffOp a, const DiffOp& b) { return a -= b; }
  friend DiffOp operator*(DiffOp a, const S& c) { return a *= c; }
  friend DiffOp operator*(const DiffOp& a, const DiffOp& b) { return a.then(b); }
  friend bool operator==(const DiffOp& a, const DiffOp& b) { return a.terms_ == b.terms_; }
  // Operator composition (this after other's argument): (A*B) f = A(B f).
  DiffOp then(const DiffOp& o) const;

  GradedSymbol<S> symbol() const;
  // Split by base/aux form degree: zero part and positive part.
  DiffOp form_free_part() const;
  DiffOp form_positive_part() const;
  DiffOp with_context(ContextPtr ctx) const;
  std::string dump() const;

 private:
  ContextPtr ctx_;
  int n_ = 0;
  std::map<OpKey, GradedElement<S>> terms_;
};

// Getzler degree: d_j -> 1, d_t -> 2, Clifford or form generator -> 1, x_j -> -1.
template <class S>
int getzler_order(const DiffOp<S>& P);
template <class S>
int getzler_order(const GradedSymbol<S>& q);
// Top Getzler-degree part with Clifford generators replaced by exterior ones.
template <class S>
DiffOp<S> model_operator(const DiffOp<S>& P);
template <class S>
DiffOp<S> getzler_part(const DiffOp<S>& P, int degree);

template <class S>
struct ModelComposeReport {
  int order1, order2, order_product;
  bool top_part_matches;  // degree (m1+m2) part of Q1 Q2 equals c[model(Q1) model(Q2)]
  bool orders_add;
};
template <class S>
ModelComposeReport<S> model_compose_check(const DiffOp<S>& Q1, const DiffOp<S>& Q2);

// Parametrix of d_t + P by the homogeneous recursion, through homogeneity -2-depth.
// x_order >= 0 keeps only what is needed for x-Taylor degree <= x_order in the deepest piece.
template <class S>
GradedSymbol<S> parametrix_recursive(const DiffOp<S>& P, int depth, int x_order = -1);
// Form-free part by recursion, positive form-degree part by the finite family series
// Q0 + sum_k (-1)^k Q0 (W Q0)^k.
template <class S>
GradedSymbol<S> parametrix(const DiffOp<S>& P, int depth);

// Value (4 pi)^{-n/2} * reduced.
template <class S>
struct HeatDiagonal {
  int n = 0;
  GradedElement<S> reduced;
};

template <class S>
HeatDiagonal<S> kernel_diagonal(const GradedSymbol<S>& q_hom, const std::vector<S>& x = {});
// Set of 2*(t exponent) values appearing in the kernel of q_hom.
template <class S>
std::vector<int> kernel_diagonal_exponents(const GradedSymbol<S>& q_hom);

template <class S>
std::vector<HeatDiagonal<S>> heat_coefficients(const DiffOp<S>& P, int l_max, const std::vector<S>& x = {});

struct ParityEntry {
  int clifford_degree;
  int two_power;    // 2 * t-exponent after rescaling
  int form_degree;  // base/aux form degree
  bool bound_ok;
  bool parity_ok;
};

struct ParityReport {
  int getzler_order_Q;
  std::vector<ParityEntry> entries;
  bool bound_ok = true;
  bool parity_ok = true;
  bool half_integer_seen = false;
};

// Rescaled diagonal expansion of a parametrix-type symbol evaluated at x = 0.
template <class S>
ParityReport rescaled_parity_check(const GradedSymbol<S>& q, int getzler_order_Q, int depth);

template <class S>
std::string format_element(const GradedElement<S>& e);

extern template class GradedSymbol<QComplex>;
extern template class GradedSymbol<CDouble>;
extern template class DiffOp<QComplex>;
extern template class DiffOp<CDouble>;

}  // namespace indexlab
