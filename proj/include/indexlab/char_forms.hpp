#pragma once

#include <optional>
#include <string>
#include <vector>

#include "indexlab/graded_algebra.hpp"
#include "indexlab/power_series.hpp"

namespace indexlab {

// Even elements of an exterior context; commutative, positive-degree part nilpotent.
template <class S>
using NilpotentEvenScalar = GradedElement<S>;

template <class S>
class RingMatrix {
 public:
  RingMatrix() = default;
  RingMatrix(ContextPtr ctx, int rows, int cols);

  static RingMatrix identity(ContextPtr ctx, int k);
  static RingMatrix numeric(ContextPtr ctx, int rows, int cols, const std::vector<S>& row_major);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const ContextPtr& context() const { return ctx_; }
  GradedElement<S>& operator()(int i, int j) { return data_[i * cols_ + j]; }
  const GradedElement<S>& operator()(int i, int j) const { return data_[i * cols_ + j]; }

  RingMatrix& operator+=(const RingMatrix& o);
  RingMatrix& operator-=(const RingMatrix& o);
  RingMatrix& operator*=(const S& c);
  friend RingMatrix operator+(RingMatrix a, const RingMatrix& b) { return a += b; }
  friend RingMatrix operator-(RingMatrix a, const RingMatrix& b) { return a -= b; }
  friend RingMatrix operator*(RingMatrix a, const S& c) { return a *= c; }
  friend RingMatrix operator*(const RingMatrix& a, const RingMatrix& b) { return a.times(b); }
  friend bool operator==(const RingMatrix& a, const RingMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }
  RingMatrix times(const RingMatrix& o) const;
  RingMatrix scaled(const GradedElement<S>& u) const;

  GradedElement<S> trace() const;
  RingMatrix transpose() const;
  std::vector<S> constant_part() const;
  RingMatrix nilpotent_part() const;
  bool is_nilpotent() const;
  bool is_zero() const;
  bool is_antisymmetric() const;
  bool is_even() const;
  RingMatrix truncated(int cap) const;
  RingMatrix block(int r0, int c0, int nr, int nc) const;
  double max_abs() const;

 private:
  ContextPtr ctx_;
  int rows_ = 0, cols_ = 0;
  std::vector<GradedElement<S>> data_;
};

template <class S>
using CurvatureMatrix = RingMatrix<S>;

// Scalar functions of c + n (n nilpotent).
template <class S>
GradedElement<S> apply_series(const PowerSeries& f, const GradedElement<S>& nilpotent, int cap = -1);
template <class S>
GradedElement<S> elem_exp(const GradedElement<S>& u, int cap = -1);
template <class S>
GradedElement<S> elem_log(const GradedElement<S>& u, int cap = -1);
template <class S>
GradedElement<S> elem_pow(const GradedElement<S>& u, const Rational& r, int cap = -1);
template <class S>
GradedElement<S> elem_inverse(const GradedElement<S>& u, int cap = -1);

// Number of series terms that can contribute for entries of minimum positive degree 2.
int nilpotency_order(const AlgebraContext& ctx);

template <class S>
RingMatrix<S> matrix_function(const PowerSeries& f, const RingMatrix<S>& M, int cap = -1);
template <class S>
RingMatrix<S> matrix_exp(const RingMatrix<S>& M, int cap = -1);
template <class S>
GradedElement<S> ring_det(const RingMatrix<S>& M, int cap = -1);
// det^{1/2} with the positive branch on the numeric part.
template <class S>
GradedElement<S> det_sqrt(const RingMatrix<S>& M, int cap = -1);

struct IsometryNormalAction {
  std::vector<Angle> angles;  // one 2x2 rotation block per angle; pi gives a -1 pair

  int b() const { return 2 * static_cast<int>(angles.size()); }
  // phi e_a = cos e_a + sin e_b on each block (a, b) = (2j, 2j+1).
  template <class S>
  RingMatrix<S> matrix(ContextPtr ctx) const;
  std::string branch() const;
};

template <class S>
GradedElement<S> a_hat(const CurvatureMatrix<S>& R, int cap = -1);
template <class S>
GradedElement<S> nu_phi(const IsometryNormalAction& phi, const CurvatureMatrix<S>& R_N, int cap = -1);
template <class S>
GradedElement<S> chern_character(const RingMatrix<S>& C, const RingMatrix<S>* action = nullptr, int cap = -1);

// coeff * pi^{pi_power}.
template <class S>
struct ScaledForm {
  GradedElement<S> coeff;
  int pi_power = 0;

  GradedElement<CDouble> evaluate() const;
};

template <class S>
struct Twist {
  RingMatrix<S> curvature;
  std::optional<RingMatrix<S>> action;
};

template <class S>
ScaledForm<S> equivariant_index_density(const CurvatureMatrix<S>& R_fix, const IsometryNormalAction& phi,
                                        const CurvatureMatrix<S>& R_N, int a, int n, const Twist<S>* twist = nullptr);
// (2 i pi)^{-n/2} |A-hat(R)|^{(n)}.
template <class S>
ScaledForm<S> ahat_index_density(const CurvatureMatrix<S>& R, int n);
// Ratio of (-i)^{n/2} (2pi)^{-n/2} to (2 i pi)^{-n/2}.
QComplex prefactor_ratio(int n);

template <class S>
GradedElement<CDouble> to_float(const GradedElement<S>& a);

extern template class RingMatrix<QComplex>;
extern template class RingMatrix<CDouble>;

}  // namespace indexlab
