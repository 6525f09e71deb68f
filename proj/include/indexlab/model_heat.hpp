#pragma once

#include <string>
#include <vector>

#include "indexlab/char_forms.hpp"
#include "indexlab/graded_algebra.hpp"

namespace indexlab {

// F = -sum_i (d_i - 1/4 sum_j a_ij x_j)^2 with A antisymmetric.
template <class S>
struct MehlerData {
  int n = 0;
  RingMatrix<S> A;

  static MehlerData numeric(int n, const std::vector<double>& row_major);
};

// Kernel value (4 pi t)^{-n/2} * reduced.
template <class S>
struct MehlerValue {
  int n;
  S t;
  GradedElement<S> reduced;

  GradedElement<CDouble> evaluate() const;
};

// K(x,y,t) = (4 pi t)^{-n/2} det^{1/2}(M / sinh M) exp(-(1/4t)(x-y)^T M coth M (x-y) + 1/4 x^T A y), M = tA/2.
template <class S>
MehlerValue<S> mehler_kernel(const MehlerData<S>& data, const std::vector<S>& x, const std::vector<S>& y, const S& t);

// Scalar numeric kernel for real A at fixed t; the matrix functions are computed once.
class NumericMehler {
 public:
  NumericMehler(const std::vector<double>& A_row_major, int n, double t);
  double operator()(const std::vector<double>& x, const std::vector<double>& y) const;
  double diagonal() const { return prefactor_; }

 private:
  int n_;
  double t_, prefactor_;
  std::vector<double> A_, C_;
};

// Coefficients c_l of (4 pi t)^{n/2} K(0,0,t) = sum_l c_l t^l for nilpotent A (exact interpolation in t).
template <class S>
std::vector<GradedElement<S>> mehler_t_expansion(const MehlerData<S>& data, int l_max);

struct FixedPointGeometry {
  int a = 0;  // fixed-set dimension; normal coordinates are a..n-1
  IsometryNormalAction phi;

  int b() const { return phi.b(); }
};

// Integral over the normal fibre of K(v, phi v, t); value coeff * pi^{pi_power}.
template <class S>
ScaledForm<S> fixed_point_integral(const FixedPointGeometry& geom, const MehlerData<S>& data, const S& t);

template <class S>
struct EquivariantModelDensity {
  ScaledForm<S> density;  // leading rescaled supertrace
  GradedElement<S> total_supertrace;
  GradedElement<S> integral;
  std::string lift_branch;
};

// Str[phi~ c(I)] over the fixed-point integral; A must live in an exterior context of fibre dimension n.
template <class S>
EquivariantModelDensity<S> equivariant_model_density(const FixedPointGeometry& geom, const MehlerData<S>& data,
                                                     const S& t);

// Finite-difference semigroup for the n = 2 real model on a periodic box: 4th-order differences in space,
// Crank-Nicolson in time with Richardson extrapolation.
class GridSemigroupOracle {
 public:
  struct Config {
    int grid = 256;
    double box = 8.0;
    int steps = 40;
    bool richardson = true;
    double solver_tolerance = 1e-12;
  };

  GridSemigroupOracle() : GridSemigroupOracle(Config{}) {}
  explicit GridSemigroupOracle(Config cfg) : cfg_(cfg) {}

  // K(0,0,t) for A = row_major 2x2.
  double diagonal(const std::vector<double>& A, double t) const;
  // Full kernel column K(., 0, t) on the grid, row-major with x_k = (k - grid/2) h.
  std::vector<double> column(const std::vector<double>& A, double t) const;
  double spacing() const { return cfg_.box / cfg_.grid; }
  const Config& config() const { return cfg_; }

 private:
  std::vector<double> evolve(const std::vector<double>& A, double t, int steps) const;
  Config cfg_;
};

}  // namespace indexlab
