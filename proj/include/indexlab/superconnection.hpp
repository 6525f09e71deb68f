#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "indexlab/scalar.hpp"
#include "indexlab/volterra.hpp"

namespace indexlab {

// Base R^q with 1-forms dy_1..dy_q; coefficients are polynomial jets in y of total degree <= jet.
struct BaseSpec {
  int q = 0;
  int jet = 0;
  friend bool operator==(const BaseSpec&, const BaseSpec&) = default;
};

template <class S>
class FormScalar {
 public:
  using Key = std::pair<std::uint32_t, MultiIndex>;  // (dy mask, y exponent)

  FormScalar() = default;
  explicit FormScalar(BaseSpec base) : base_(base) {}
  static FormScalar constant(BaseSpec base, const S& c);
  static FormScalar dy(BaseSpec base, int i);  // 1-based
  static FormScalar y(BaseSpec base, int i);   // coordinate function y_i, 1-based

  const BaseSpec& base() const { return base_; }
  const std::map<Key, S>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  void add_term(std::uint32_t mask, const MultiIndex& y, const S& c);
  S coeff(std::uint32_t mask, const MultiIndex& y = {}) const;
  S constant_term() const { return coeff(0); }

  FormScalar& operator+=(const FormScalar& o);
  FormScalar& operator-=(const FormScalar& o);
  FormScalar& operator*=(const S& c);
  friend FormScalar operator+(FormScalar a, const FormScalar& b) { return a += b; }
  friend FormScalar operator-(FormScalar a, const FormScalar& b) { return a -= b; }
  friend FormScalar operator*(FormScalar a, const S& c) { return a *= c; }
  friend FormScalar operator*(const FormScalar& a, const FormScalar& b) { return a.wedge(b); }
  FormScalar operator-() const { return *this * ScalarTraits<S>::from_int(-1); }
  friend bool operator==(const FormScalar& a, const FormScalar& b) { return a.terms_ == b.terms_; }
  FormScalar wedge(const FormScalar& o) const;

  FormScalar degree_part(int k) const;
  FormScalar even_part() const;
  FormScalar jet_at_most(int d) const;
  int max_degree() const;
  int min_degree() const;
  bool is_y_constant() const;
  // Exterior derivative in y.
  FormScalar d() const;
  // psi_t: degree-k part times t^{-k/2}.
  FormScalar rescaled(const S& t) const;
  double max_abs() const;
  std::string dump() const;

 private:
  BaseSpec base_;
  std::map<Key, S> terms_;
};

// Matrix with form entries and a super-grading (+1 even, -1 odd) on the index set.
// Product uses (w E_ij)(h E_jk) = (-1)^{p(E_ij)|h|} w h E_ik.
template <class S>
class FormMatrix {
 public:
  FormMatrix() = default;
  FormMatrix(BaseSpec base, std::vector<int> grading);

  static FormMatrix identity(BaseSpec base, std::vector<int> grading);
  static FormMatrix numeric(BaseSpec base, std::vector<int> grading, const Eigen::MatrixXcd& m);
  // form * numeric matrix
  static FormMatrix times_form(const FormScalar<S>& w, BaseSpec base, std::vector<int> grading, const Eigen::MatrixXcd& m);

  int size() const { return static_cast<int>(grading_.size()); }
  const BaseSpec& base() const { return base_; }
  const std::vector<int>& grading() const { return grading_; }
  FormScalar<S>& operator()(int i, int j) { return data_[i * size() + j]; }
  const FormScalar<S>& operator()(int i, int j) const { return data_[i * size() + j]; }

  FormMatrix& operator+=(const FormMatrix& o);
  FormMatrix& operator-=(const FormMatrix& o);
  FormMatrix& operator*=(const S& c);
  friend FormMatrix operator+(FormMatrix a, const FormMatrix& b) { return a += b; }
  friend FormMatrix operator-(FormMatrix a, const FormMatrix& b) { return a -= b; }
  friend FormMatrix operator*(FormMatrix a, const S& c) { return a *= c; }
  friend FormMatrix operator*(const FormMatrix& a, const FormMatrix& b) { return a.times(b); }
  friend bool operator==(const FormMatrix& a, const FormMatrix& b) { return a.data_ == b.data_; }
  FormMatrix times(const FormMatrix& o) const;
  // [a, b] graded by total parity
  FormMatrix supercommutator(const FormMatrix& o) const;

  FormScalar<S> supertrace() const;
  FormScalar<S> trace() const;
  FormMatrix degree_part(int k) const;
  FormMatrix positive_degree_part() const;
  FormMatrix rescaled(const S& t) const;
  FormMatrix jet_at_most(int d) const;
  int min_degree() const;
  int max_degree() const;
  bool is_zero() const;
  // total parity: 0 even, 1 odd, -1 mixed
  int parity() const;
  Eigen::MatrixXcd constant_numeric() const;  // degree-0, y^0 part
  bool degree_zero_is_y_constant() const;
  double max_abs() const;

 private:
  BaseSpec base_;
  std::vector<int> grading_;
  std::vector<FormScalar<S>> data_;
};

// B = d + D + A_plus on the trivial bundle over R^q.
template <class S>
struct Superconnection {
  FormMatrix<S> D;       // odd, form degree 0
  FormMatrix<S> A_plus;  // form degree >= 1
};

template <class S>
struct Curvature {
  FormMatrix<S> F, F0, F_plus;
};

template <class S>
Curvature<S> curvature(const Superconnection<S>& B);

enum class DuhamelMode { exact, simplex };
struct DuhamelOptions {
  DuhamelMode mode = DuhamelMode::exact;
  int nodes = 16;  // Gauss-Legendre nodes per simplex coordinate
};

// exp(-tF) by the finite Duhamel series. Exact mode: divided differences in the eigenbasis of the
// degree-0 part in float mode; terminating power series when the constant part of F vanishes.
template <class S>
FormMatrix<S> duhamel_exp(const FormMatrix<S>& F, const S& t, DuhamelOptions opt = {});
// The k-th term (-t)^k I_k of the expansion.
template <class S>
FormMatrix<S> duhamel_term(const FormMatrix<S>& F, const S& t, int k, DuhamelOptions opt = {});
// d/dt exp(-tF) from the same expansion.
FormMatrix<CDouble> duhamel_exp_dt(const FormMatrix<CDouble>& F, double t);
// max |(d_t + F) exp(-tF)|
double heat_residual(const FormMatrix<CDouble>& F, double t, DuhamelOptions opt = {});

// exp(-tZ)_{0k} with Z bidiagonal: divided difference of e^{-tx} at the nodes (times (-x) if derivative).
CDouble divided_difference_exp(const std::vector<CDouble>& nodes, double t, bool derivative = false);

struct ChernResult {
  bool phi_commutes = true;
  std::string warning;
};

// psi_t Str[phi exp(-tF)]
template <class S>
FormScalar<S> chern_form(const Superconnection<S>& B, const S& t, const Eigen::MatrixXcd& phi, ChernResult* info = nullptr,
                         DuhamelOptions opt = {});

struct ExactDifferential {
  bool solvable = false;
  FormScalar<QComplex> alpha;
  int checked_jet = 0;  // equations imposed for y-degree <= checked_jet
};
// Solve d alpha = omega for polynomial alpha; omega must be homogeneous-free, jets up to base.jet are used.
ExactDifferential solve_exact(const FormScalar<QComplex>& omega);

// t^k int_{Delta_2k} Str[psi_t phi T0 e^{-t s_1 F} T1 ... T_2k e^{-t(1-s_2k)F}] ds
struct JloOptions {
  int nodes = 8;
  bool richardson = true;
};
struct JloResult {
  FormScalar<CDouble> value;
  double error_estimate = 0;
};
JloResult jlo_cochain(const Superconnection<CDouble>& B, double t, const Eigen::MatrixXcd& phi,
                      const std::vector<FormMatrix<CDouble>>& T, int k, JloOptions opt = {});

// Dual numbers P + zQ with z^2 = 0.
struct DualMatrix {
  Eigen::MatrixXcd P, Q;
  DualMatrix operator*(const DualMatrix& o) const { return {P * o.P, P * o.Q + Q * o.P}; }
  DualMatrix operator+(const DualMatrix& o) const { return {P + o.P, Q + o.Q}; }
};
DualMatrix dual_exp(const DualMatrix& X);

struct GrassmannReport {
  double deviation = 0;
  DualMatrix lhs, rhs;
};
// exp(-t(D^2 - zD)) versus exp(-tD^2) + z t D exp(-tD^2)
GrassmannReport grassmann_exp_identity(const Eigen::MatrixXcd& D, double t);

struct EtaFormIntegrand {
  FormScalar<CDouble> value;        // Tr^even[phi dB_t/dt exp(-B_t^2)]
  FormScalar<CDouble> alternative;  // (1/2 sqrt t) Tr^even[psi_t phi (D + cT4) exp(-tF)]
  double ratio = 1;                 // |alternative| / |value| on the largest coefficient
};
// B_t = sqrt(t) psi_t(B); cT4 is the optional bounded odd perturbation c(T)/4 (zero matrix if empty).
EtaFormIntegrand eta_form_integrand(const Superconnection<CDouble>& B, double t, const Eigen::MatrixXcd& phi,
                                    const FormMatrix<CDouble>* cT4 = nullptr);

extern template class FormScalar<QComplex>;
extern template class FormScalar<CDouble>;
extern template class FormMatrix<QComplex>;
extern template class FormMatrix<CDouble>;

}  // namespace indexlab
