#include "indexlab/spectral.hpp"

#include <Eigen/Dense>
#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bernoulli.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "indexlab/char_forms.hpp"

namespace indexlab {

namespace {

constexpr double kPi = boost::math::constants::pi<double>();

bool near_zero_angle(double alpha) {
  double r = std::remainder(alpha, 2 * kPi);
  return std::abs(r) < 1e-12;
}

}  // namespace

CDouble SpectralLevel::character(double alpha) const {
  if (alpha == 0) return static_cast<double>(multiplicity());
  // geometric sum of e^{i(w0 + j) alpha}, j < count
  CDouble s = 0;
  if (near_zero_angle(alpha)) {
    s = static_cast<double>(count) * std::polar(1.0, w0 * alpha);
  } else if (count <= 8) {
    for (int j = 0; j < count; ++j) s += std::polar(1.0, (w0 + j) * alpha);
  } else {
    double mid = w0 + 0.5 * (count - 1);
    s = std::polar(1.0, mid * alpha) * (std::sin(0.5 * count * alpha) / std::sin(0.5 * alpha));
  }
  return s * static_cast<double>(degeneracy);
}

// ---------------------------------------------------------------------------

double SpectrumModel::tail_bound(double t, double cutoff, int power) const {
  if (!(t > 0)) throw std::invalid_argument("tail_bound: t must be positive");
  // x^p e^{-t x^2} is decreasing for x >= peak
  double peak = std::sqrt(power / (2.0 * t));
  auto g = [&](double x) { return std::pow(x, power) * std::exp(-t * x * x); };
  double total = 0;
  for (double r = std::floor(cutoff);; r += 1) {
    double lo = std::max(r, cutoff);
    double hi = r + 1;
    double m = (hi <= peak) ? g(hi) : (lo >= peak ? g(lo) : g(peak));
    double term = density_(r) * m;
    total += term;
    if (lo > peak && term < 1e-40 + 1e-18 * total) break;
  }
  return total;
}

double SpectrumModel::cutoff_for(double t, int power, double target) const {
  double cutoff = std::max(2.0, std::sqrt(std::max(1.0, power / (2.0 * t))));
  while (tail_bound(t, cutoff, power) > target) cutoff *= 1.08;
  return cutoff;
}

int SpectrumModel::kernel_dimension() const {
  int k = 0;
  for (const auto& l : levels(1.0))
    if (std::abs(l.lambda) < 1e-12) k += l.multiplicity();
  return k;
}

double SpectrumModel::smallest_nonzero() const {
  for (double c = 2.0;; c *= 2) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& l : levels(c))
      if (std::abs(l.lambda) >= 1e-12) best = std::min(best, std::abs(l.lambda));
    if (std::isfinite(best)) return best;
    if (c > 1e6) throw std::runtime_error("smallest_nonzero: no nonzero eigenvalue found");
  }
}

SpectrumModel circle_dirac(double a) {
  if (!(a >= 0 && a <= 1)) throw std::invalid_argument("circle_dirac: a must lie in [0, 1]");
  auto gen = [a](double cutoff) {
    // pairs (m + a, -(m + 1) + a) so that symmetric spectra cancel exactly
    std::vector<SpectralLevel> out;
    for (int m = 0;; ++m) {
      double p = m + a, q = -(m + 1) + a;
      bool keep_p = std::abs(p) <= cutoff, keep_q = std::abs(q) <= cutoff;
      if (!keep_p && !keep_q) break;
      if (keep_p) out.push_back({p, 0, static_cast<double>(m), 1, 1});
      if (keep_q) out.push_back({q, 0, static_cast<double>(-(m + 1)), 1, 1});
    }
    return out;
  };
  return SpectrumModel("circle(a=" + std::to_string(a) + ")", false, true, gen, [](double) { return 2.0; });
}

SpectrumModel flat_torus(double a1, double a2) {
  auto gen = [a1, a2](double cutoff) {
    std::vector<SpectralLevel> out;
    int K = static_cast<int>(std::ceil(cutoff)) + 2;
    for (int k1 = -K; k1 <= K; ++k1)
      for (int k2 = -K; k2 <= K; ++k2) {
        double x = k1 + a1, y = k2 + a2, r = std::hypot(x, y);
        if (r > cutoff) continue;
        out.push_back({r, 1, 0, 1, 1});
        out.push_back({r, -1, 0, 1, 1});
      }
    return out;
  };
  auto density = [](double r) {
    double h = std::sqrt(0.5);
    double outer = r + 1 + h, inner = std::max(0.0, r - h);
    return 2 * kPi * (outer * outer - inner * inner) + 2;
  };
  return SpectrumModel("torus(a=" + std::to_string(a1) + "," + std::to_string(a2) + ")", true, false, gen, density);
}

namespace {

// chirality s carries spins j >= |k - s|/2
double sphere_jmin(int k, int s) { return std::abs(k - s) / 2.0; }

}  // namespace

SpectrumModel sphere_dirac(int k) {
  auto gen = [k](double cutoff) {
    std::vector<SpectralLevel> out;
    double j0 = std::min(sphere_jmin(k, 1), sphere_jmin(k, -1));
    for (double j = j0;; j += 1) {
      double l2 = (j + 0.5) * (j + 0.5) - k * k / 4.0;
      double lam = std::sqrt(std::max(0.0, l2));
      if (lam > cutoff) break;
      for (int s : {1, -1})
        if (j >= sphere_jmin(k, s) - 1e-12) out.push_back({lam, s, -j, static_cast<int>(std::lround(2 * j + 1)), 1});
    }
    return out;
  };
  auto density = [k](double r) {
    double ak = std::abs(k);
    return (2 + ak / 2) * 2 * (2 * r + 3 + ak);
  };
  return SpectrumModel("sphere(k=" + std::to_string(k) + ")", true, true, gen, density);
}

// ---------------------------------------------------------------------------

double SpectralSum::roundoff() const { return 16 * std::numeric_limits<double>::epsilon() * abs_sum; }

SpectralSum heat_trace(const SpectrumModel& m, double t, double alpha, bool signed_trace) {
  if (!(t > 0)) throw std::invalid_argument("heat_trace: t must be positive");
  if (signed_trace && !m.graded()) throw std::invalid_argument("heat_trace: signed trace needs a graded model");
  if (alpha != 0 && !m.equivariant()) throw std::invalid_argument("heat_trace: model carries no rotation action");
  SpectralSum r;
  r.cutoff = m.cutoff_for(t, 0);
  r.truncation_bound = m.tail_bound(t, r.cutoff, 0);
  for (const auto& l : m.levels(r.cutoff)) {
    CDouble term = l.character(alpha) * std::exp(-t * l.lambda * l.lambda);
    if (signed_trace) term *= static_cast<double>(l.chirality);
    r.value += term;
    r.abs_sum += std::abs(term);
  }
  return r;
}

SpectralSum eta_integrand(const SpectrumModel& m, double t, double alpha) {
  if (!(t > 0)) throw std::invalid_argument("eta_integrand: t must be positive");
  if (m.graded()) throw std::invalid_argument("eta_integrand: needs an ungraded (odd-dimensional) model");
  if (alpha != 0 && !m.equivariant()) throw std::invalid_argument("eta_integrand: model carries no rotation action");
  SpectralSum r;
  r.cutoff = m.cutoff_for(t, 1);
  r.truncation_bound = m.tail_bound(t, r.cutoff, 1);
  for (const auto& l : m.levels(r.cutoff)) {
    CDouble term = l.character(alpha) * (l.lambda * std::exp(-t * l.lambda * l.lambda));
    r.value += term;
    r.abs_sum += std::abs(term);
  }
  return r;
}

EtaInvariant eta_invariant(const SpectrumModel& m, double alpha, double tolerance) {
  using boost::math::quadrature::gauss_kronrod;
  EtaInvariant out;
  out.kernel_dimension = m.kernel_dimension();
  const double lmin = m.smallest_nonzero();
  // values under their roundoff + truncation floor are noise; drop them and charge the floor to the error
  double max_floor = 0;
  auto f = [&](double t) {
    SpectralSum s = eta_integrand(m, t, alpha);
    double floor = s.roundoff() + s.truncation_bound;
    max_floor = std::max(max_floor, floor);
    return std::abs(s.value) <= floor ? CDouble(0) : s.value;
  };
  auto integrate = [&](auto g, double a, double b) {
    double err_re = 0, err_im = 0;
    double re = gauss_kronrod<double, 31>::integrate([&](double x) { return g(x).real(); }, a, b, 12, tolerance, &err_re);
    double im = 0;
    if (alpha != 0)
      im = gauss_kronrod<double, 31>::integrate([&](double x) { return g(x).imag(); }, a, b, 12, tolerance, &err_im);
    out.error_estimate += err_re + err_im;
    return CDouble(re, im);
  };
  // small-t endpoint: |f| <= |f(t0)| (t/t0)^s with s from the local slope, dropped piece <= |f(t0)| t0^{1/2}/(s+1/2)
  const double t0 = 1e-6, u0 = 1e-3;
  {
    std::vector<double> ts = log_grid(t0, 1e-4, 6), vs, fl;
    for (double t : ts) {
      SpectralSum s = eta_integrand(m, t, alpha);
      vs.push_back(std::abs(s.value));
      fl.push_back(s.roundoff() + s.truncation_bound);
    }
    SlopeFit fit = fit_log_slope(ts, vs, fl);
    double s = fit.floor_pass ? 0.5 : fit.slope;
    if (s <= -0.5) throw std::runtime_error("eta_invariant: integrand too singular at t = 0");
    out.error_estimate += std::max(vs.front(), fl.front()) * std::sqrt(t0) / (s + 0.5);
  }
  CDouble lower = integrate([&](double u) { return 2.0 * f(u * u); }, u0, 1.0);
  const double S = std::max(0.0, std::log(60.0 / (lmin * lmin)));
  CDouble upper = integrate([&](double s) { return std::exp(0.5 * s) * f(std::exp(s)); }, 0.0, S);
  // beyond S: |f| <= sum |lambda| e^{-t lambda^2} with t lambda^2 >= 60
  out.error_estimate += 1e-20 + 2 * max_floor * (1 + S);
  out.value = (lower + upper) / std::sqrt(kPi);
  out.error_estimate /= std::sqrt(kPi);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> log_grid(double t0, double t1, int points) {
  if (points < 2 || !(t0 > 0) || !(t1 > t0)) throw std::invalid_argument("log_grid: bad range");
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) g[i] = t0 * std::pow(t1 / t0, double(i) / (points - 1));
  return g;
}

SlopeFit fit_log_slope(const std::vector<double>& t, const std::vector<double>& values,
                       const std::vector<double>& floors) {
  if (t.size() != values.size() || (!floors.empty() && floors.size() != t.size()))
    throw std::invalid_argument("fit_log_slope: size mismatch");
  if (t.size() < 6) throw std::invalid_argument("fit_log_slope: need at least 6 points");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1])) throw std::invalid_argument("fit_log_slope: grid must be strictly increasing");
  if (!(t.front() > 0) || t.back() / t.front() < 100 * (1 - 1e-12))
    throw std::invalid_argument("fit_log_slope: grid must span two decades");
  SlopeFit fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    double floor = std::max(1e-14, floors.empty() ? 0.0 : floors[i]);
    double v = std::abs(values[i]);
    if (!(v > floor)) {
      ++fit.below_floor;
      continue;
    }
    double x = std::log(t[i]), y = std::log(v);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
    ++fit.points_used;
  }
  if (fit.points_used < 2) {
    fit.floor_pass = true;
    fit.slope = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  double n = fit.points_used;
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return fit;
}

ExponentCheck small_t_exponent(const std::vector<double>& t, const std::vector<double>& values,
                               const std::vector<double>& floors, double target, double slack) {
  ExponentCheck c;
  c.fit = fit_log_slope(t, values, floors);
  c.pass = c.fit.floor_pass || c.fit.slope >= target - slack;
  c.note = c.fit.floor_pass ? "all values below the numerical floor" : "";
  return c;
}

ExponentCheck large_t_exponent(const std::vector<double>& t, const std::vector<double>& values,
                               const std::vector<double>& floors, bool has_zero_modes, double target, double slack) {
  ExponentCheck c;
  if (has_zero_modes) {
    c.skipped = true;
    c.note = "zero modes present; large-t decay check skipped";
    return c;
  }
  c.fit = fit_log_slope(t, values, floors);
  c.pass = c.fit.floor_pass || c.fit.slope <= target + slack;
  c.note = c.fit.floor_pass ? "all values below the numerical floor" : "";
  return c;
}

// ---------------------------------------------------------------------------

LefschetzReport sphere_lefschetz(int k, double alpha, double t) {
  if (near_zero_angle(alpha)) throw std::invalid_argument("sphere_lefschetz: alpha must not be a multiple of 2 pi");
  SpectralSum s = heat_trace(sphere_dirac(k), t, alpha, true);
  return {s.value, s.truncation_bound + s.roundoff()};
}

CDouble sphere_fixed_point_sum(int k, double alpha) {
  if (near_zero_angle(alpha)) throw std::invalid_argument("sphere_fixed_point_sum: alpha must not be a multiple of 2 pi");
  auto ctx = make_context(2, 0, {}, FiberMode::exterior);
  CDouble total = 0;
  // north pole: angle alpha, fibre weight k/2; south pole: angle -alpha, fibre weight -k/2
  for (int pole : {1, -1}) {
    double angle = pole * alpha;
    CurvatureMatrix<CDouble> R_fix(ctx, 0, 0), R_N(ctx, 2, 2);
    IsometryNormalAction phi{{Angle::from_radians(angle)}};
    Twist<CDouble> tw{RingMatrix<CDouble>(ctx, 1, 1),
                      RingMatrix<CDouble>::numeric(ctx, 1, 1, {std::polar(1.0, pole * 0.5 * k * alpha)})};
    ScaledForm<CDouble> d = equivariant_index_density(R_fix, phi, R_N, 0, 2, &tw);
    total += d.evaluate().constant_term() * std::pow(kPi, d.pi_power);
  }
  return total;
}

namespace {

// Gauss-Chebyshev points on (0, pi) and the collocation derivative
void chebyshev_gauss(int N, Eigen::VectorXd& theta, Eigen::MatrixXd& Dth) {
  Eigen::VectorXd x(N), w(N);
  for (int j = 0; j < N; ++j) {
    double a = (2 * j + 1) * kPi / (2 * N);
    x(j) = std::cos(a);
    w(j) = (j % 2 ? -1.0 : 1.0) * std::sin(a);
  }
  Dth = Eigen::MatrixXd::Zero(N, N);
  for (int i = 0; i < N; ++i) {
    double row = 0;
    for (int k = 0; k < N; ++k)
      if (i != k) {
        Dth(i, k) = (w(k) / w(i)) / (x(i) - x(k));
        row += Dth(i, k);
      }
    Dth(i, i) = -row;
  }
  theta = (x.array() + 1) * (kPi / 2);
  Dth *= 2 / kPi;
}

}  // namespace

std::vector<double> sphere_mode_eigenvalues(int k, double mu, int chirality, int count, int grid) {
  if (chirality != 1 && chirality != -1) throw std::invalid_argument("sphere_mode_eigenvalues: chirality must be +-1");
  Eigen::VectorXd th;
  Eigen::MatrixXd Dth;
  chebyshev_gauss(grid, th, Dth);
  Eigen::ArrayXd s = th.array().sin(), c = th.array().cos();
  Eigen::ArrayXd W = (mu - 0.5 * k * (1 - c)) / s;
  Eigen::ArrayXd half_cot = 0.5 * c / s;
  // D = -i [[0, d + cot/2 + W], [d + cot/2 - W, 0]] on (upper, lower) = (+, -) spinor components
  Eigen::MatrixXd B = Dth, C = Dth;
  B.diagonal() += (half_cot + W).matrix();
  C.diagonal() += (half_cot - W).matrix();
  Eigen::MatrixXd block = chirality > 0 ? Eigen::MatrixXd(-(B * C)) : Eigen::MatrixXd(-(C * B));
  Eigen::EigenSolver<Eigen::MatrixXd> es(block, false);
  std::vector<double> ev;
  for (int i = 0; i < grid; ++i)
    if (std::abs(es.eigenvalues()(i)) > 1e-8) ev.push_back(es.eigenvalues()(i).real());
  std::sort(ev.begin(), ev.end());
  // zero mode on this block iff the operator annihilating it has a null vector
  const Eigen::MatrixXd& annihilator = chirality > 0 ? C : B;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(annihilator);
  if (svd.singularValues()(grid - 1) < 1e-8) ev.insert(ev.begin(), 0.0);
  if (static_cast<int>(ev.size()) > count) ev.resize(count);
  return ev;
}

std::vector<double> sphere_table_eigenvalues(int k, double mu, int chirality, int count) {
  double w = mu - 0.5 * k;
  double j = std::max(std::abs(w), sphere_jmin(k, chirality));
  std::vector<double> ev;
  for (int i = 0; i < count; ++i, j += 1) ev.push_back((j + 0.5) * (j + 0.5) - k * k / 4.0);
  return ev;
}

// ---------------------------------------------------------------------------

double hurwitz_zeta(double s, double a) {
  if (!(a > 0 && a <= 1)) throw std::invalid_argument("hurwitz_zeta: a must lie in (0, 1]");
  if (std::abs(s - 1) < 1e-14) throw std::domain_error("hurwitz_zeta: pole at s = 1");
  const int N = 20, J = 12;
  double sum = 0;
  for (int k = 0; k < N; ++k) sum += std::pow(k + a, -s);
  double x = N + a;
  sum += std::pow(x, 1 - s) / (s - 1) + 0.5 * std::pow(x, -s);
  // B_{2j}/(2j)! s(s+1)...(s+2j-2) x^{-s-2j+1}
  double rising = s, fact = 2;
  for (int j = 1; j <= J; ++j) {
    double term = boost::math::bernoulli_b2n<double>(j) / fact * rising * std::pow(x, -s - 2 * j + 1);
    sum += term;
    rising *= (s + 2 * j - 1) * (s + 2 * j);
    fact *= (2 * j + 1) * (2 * j + 2);
  }
  return sum;
}

double circle_eta_hurwitz(double a) {
  if (!(a > 0 && a < 1)) throw std::invalid_argument("circle_eta_hurwitz: a must lie in (0, 1)");
  return hurwitz_zeta(0, a) - hurwitz_zeta(0, 1 - a);
}

CDouble circle_eta_series_oracle(double a, double alpha, double eps) {
  using F = boost::multiprecision::cpp_bin_float_50;
  if (!(a > 0 && a < 1)) throw std::invalid_argument("circle_eta_series_oracle: a must lie in (0, 1)");
  F se = sqrt(F(eps)), A(a), al(alpha);
  F re = 0, im = 0;
  for (int m = 0;; ++m) {
    F p = F(m) + A, q = F(m + 1) - A;  // eigenvalues m + a and -(m + 1 - a)
    F ep = boost::math::erfc(p * se), eq = boost::math::erfc(q * se);
    re += cos(F(m) * al) * ep - cos(F(m + 1) * al) * eq;
    im += sin(F(m) * al) * ep + sin(F(m + 1) * al) * eq;
    if (ep < F("1e-60") && eq < F("1e-60")) break;
  }
  return {static_cast<double>(re), static_cast<double>(im)};
}

double circle_theta_oracle(double a, double t) {
  using F = boost::multiprecision::cpp_bin_float_50;
  const F pi = boost::math::constants::pi<F>();
  F T(t), sum = 1;
  for (int k = 1;; ++k) {
    F g = exp(-pi * pi * F(k) * F(k) / T);
    sum += 2 * g * cos(2 * pi * F(k) * F(a));
    if (g < F("1e-60")) break;
  }
  return static_cast<double>(sqrt(pi / T) * sum);
}

}  // namespace indexlab
