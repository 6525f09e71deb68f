#pragma once

#include <functional>
#include <string>
#include <vector>

#include "indexlab/scalar.hpp"

namespace indexlab {

// One eigenvalue of D with a block of rotation weights: character(alpha) = degeneracy * sum_j e^{i(w0+j)alpha}.
struct SpectralLevel {
  double lambda = 0;
  int chirality = 0;  // +1/-1 for graded models, 0 otherwise
  double w0 = 0;
  int count = 1;
  int degeneracy = 1;

  int multiplicity() const { return count * degeneracy; }
  CDouble character(double alpha) const;
};

class SpectrumModel {
 public:
  // levels with |lambda| <= cutoff, in a fixed summation order
  using Generator = std::function<std::vector<SpectralLevel>(double cutoff)>;
  // upper bound on total multiplicity with |lambda| in [r, r + 1)
  using DensityBound = std::function<double(double r)>;

  SpectrumModel(std::string name, bool graded, bool equivariant, Generator gen, DensityBound density)
      : name_(std::move(name)), graded_(graded), equivariant_(equivariant), gen_(std::move(gen)),
        density_(std::move(density)) {}

  const std::string& name() const { return name_; }
  bool graded() const { return graded_; }
  bool equivariant() const { return equivariant_; }
  std::vector<SpectralLevel> levels(double cutoff) const { return gen_(cutoff); }
  // bound on sum_{|lambda| > cutoff} mult |lambda|^power e^{-t lambda^2}
  double tail_bound(double t, double cutoff, int power) const;
  // smallest cutoff whose tail bound is below target
  double cutoff_for(double t, int power, double target = 1e-14) const;
  int kernel_dimension() const;
  double smallest_nonzero() const;

 private:
  std::string name_;
  bool graded_, equivariant_;
  Generator gen_;
  DensityBound density_;
};

// D = -i d/dx + a on the circle of length 2pi; spectrum {m + a}. Rotation by alpha acts on e^{imx} by e^{i m alpha}
// (character exponent m, independent of a).
SpectrumModel circle_dirac(double a);
// Flat torus R^2/(2pi Z)^2 with flat twist (a1, a2): D^2 eigenvalues |k + a|^2, one mode of each chirality.
// Trivial action only.
SpectrumModel flat_torus(double a1, double a2);
// Spin Dirac on the unit round sphere twisted by the line bundle of charge k, graded by chirality. Levels are the
// SU(2) spins j: D^2 = (j + 1/2)^2 - k^2/4; the rotation about the axis acts on spin j with weights -j..j.
SpectrumModel sphere_dirac(int k = 0);

struct SpectralSum {
  CDouble value = 0;
  double abs_sum = 0;          // sum of |terms|, for a roundoff floor
  double truncation_bound = 0;  // certified tail bound
  double cutoff = 0;
  double roundoff() const;
};

// sum (+/-) mult character(alpha) e^{-t lambda^2}
SpectralSum heat_trace(const SpectrumModel& m, double t, double alpha = 0, bool signed_trace = false);
// Tr[phi D e^{-t D^2}] (zero modes contribute nothing)
SpectralSum eta_integrand(const SpectrumModel& m, double t, double alpha = 0);

struct EtaInvariant {
  CDouble value;
  double error_estimate = 0;
  int kernel_dimension = 0;  // zero modes are excluded
};
// (1/sqrt(pi)) int_0^inf t^{-1/2} Tr[phi D e^{-t D^2}] dt; split at t = 1 with t = u^2 below and t = e^s above.
EtaInvariant eta_invariant(const SpectrumModel& m, double alpha = 0, double tolerance = 1e-10);

struct SlopeFit {
  double slope = 0;
  int points_used = 0;
  int below_floor = 0;
  bool floor_pass = false;  // every point under the numerical floor
};
// least squares of log|v| against log t over points with |v| above max(1e-14, floor_i)
SlopeFit fit_log_slope(const std::vector<double>& t, const std::vector<double>& values,
                       const std::vector<double>& floors = {});

struct ExponentCheck {
  SlopeFit fit;
  bool pass = false;
  bool skipped = false;
  std::string note;
};
ExponentCheck small_t_exponent(const std::vector<double>& t, const std::vector<double>& values,
                               const std::vector<double>& floors = {}, double target = 0.5, double slack = 0.05);
ExponentCheck large_t_exponent(const std::vector<double>& t, const std::vector<double>& values,
                               const std::vector<double>& floors = {}, bool has_zero_modes = false,
                               double target = -1.5, double slack = 0.05);
std::vector<double> log_grid(double t0, double t1, int points);

struct LefschetzReport {
  CDouble spectral;       // Str[phi e^{-tD^2}]
  double truncation_bound = 0;
};
LefschetzReport sphere_lefschetz(int k, double alpha, double t);
// Sum over the two poles of the isolated fixed-point densities (south pole sees the angle -alpha).
CDouble sphere_fixed_point_sum(int k, double alpha);

// Brute-force check of the sphere table: staggered finite differences for the azimuthal mode mu in
// theta in (0, pi); returns the lowest `count` eigenvalues of D^2 on the chirality block.
std::vector<double> sphere_mode_eigenvalues(int k, double mu, int chirality, int count, int grid);
// The table's prediction for the same block.
std::vector<double> sphere_table_eigenvalues(int k, double mu, int chirality, int count);

// Oracles
// Hurwitz zeta by Euler-Maclaurin (analytic continuation in s, 0 < a <= 1).
double hurwitz_zeta(double s, double a);
// eta(a) = zeta(0, a) - zeta(0, 1 - a)
double circle_eta_hurwitz(double a);
// Sum over eigenvalues of e^{i m alpha} sign(m + a) erfc(|m + a| sqrt(eps)) at 50 digits, small-t part dropped.
CDouble circle_eta_series_oracle(double a, double alpha, double eps = 1e-4);
// theta-series value sum_m e^{-t(m+a)^2} by Poisson resummation at 50 digits
double circle_theta_oracle(double a, double t);

}  // namespace indexlab
