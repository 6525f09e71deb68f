#include "indexlab/model_heat.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <cmath>
#include <stdexcept>

namespace indexlab {

namespace {

template <class S>
S half_power_inverse(const S& t, int n) {
  // t^{-n/2}
  if (n % 2 == 0) return ipow(t, -(n / 2));
  if constexpr (ScalarTraits<S>::exact) {
    throw std::domain_error("odd dimension requires float mode for t^{-n/2}");
  } else {
    return std::pow(t, -0.5 * n);
  }
}

template <class S>
int series_order(const RingMatrix<S>& M) {
  return M.is_nilpotent() ? nilpotency_order(*M.context()) + 1 : 60;
}

template <class S>
void check_data(const MehlerData<S>& d) {
  if (d.A.rows() != d.n || d.A.cols() != d.n) throw std::invalid_argument("Mehler data: A must be n x n");
  if (!d.A.is_antisymmetric()) throw std::invalid_argument("Mehler data: A must be antisymmetric");
}

template <class S>
void check_time(const S& t) {
  if constexpr (ScalarTraits<S>::exact) {
    if (sgn(t.im) != 0 || sgn(t.re) <= 0) throw std::invalid_argument("t must be a positive real");
  } else {
    if (t.imag() != 0 || !(t.real() > 0)) throw std::invalid_argument("t must be a positive real");
  }
}

}  // namespace

template <class S>
MehlerData<S> MehlerData<S>::numeric(int n, const std::vector<double>& row_major) {
  if (static_cast<int>(row_major.size()) != n * n) throw std::invalid_argument("MehlerData::numeric: need n*n entries");
  auto ctx = make_context(n, 0, {}, FiberMode::exterior);
  std::vector<S> v;
  for (double d : row_major) v.push_back(ScalarTraits<S>::from_real(d));
  return {n, RingMatrix<S>::numeric(ctx, n, n, v)};
}

template <class S>
GradedElement<CDouble> MehlerValue<S>::evaluate() const {
  CDouble tt = ScalarTraits<S>::to_complex(t);
  return to_float(reduced) * std::pow(4 * M_PI * tt, -0.5 * n);
}

template <class S>
MehlerValue<S> mehler_kernel(const MehlerData<S>& data, const std::vector<S>& x, const std::vector<S>& y, const S& t) {
  check_data(data);
  check_time(t);
  const int n = data.n;
  auto ctx = data.A.context();
  std::vector<S> xs = x.empty() ? std::vector<S>(n) : x, ys = y.empty() ? std::vector<S>(n) : y;
  if (static_cast<int>(xs.size()) != n || static_cast<int>(ys.size()) != n)
    throw std::invalid_argument("mehler_kernel: point dimension mismatch");
  RingMatrix<S> M = data.A * (t / ScalarTraits<S>::from_int(2));
  int order = series_order(M);
  RingMatrix<S> X = matrix_function(series::x_over_sinh(order), M);
  RingMatrix<S> C = matrix_function(series::x_coth(order), M);
  GradedElement<S> quad(ctx);
  S q4t = ScalarTraits<S>::one() / (ScalarTraits<S>::from_int(4) * t);
  S q4 = ScalarTraits<S>::from_rational(Rational(1, 4));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      S di = xs[i] - ys[i], dj = xs[j] - ys[j];
      if (!ScalarTraits<S>::is_zero(di * dj)) quad -= C(i, j) * (di * dj * q4t);
      if (!ScalarTraits<S>::is_zero(xs[i] * ys[j])) quad += data.A(i, j) * (xs[i] * ys[j] * q4);
    }
  GradedElement<S> reduced = mul(det_sqrt(X), elem_exp(quad));
  return {n, t, reduced};
}

template <class S>
std::vector<GradedElement<S>> mehler_t_expansion(const MehlerData<S>& data, int l_max) {
  check_data(data);
  if (!data.A.is_nilpotent()) throw std::invalid_argument("mehler_t_expansion: A must be nilpotent");
  auto ctx = data.A.context();
  const int D = nilpotency_order(*ctx);
  const int m = D + 1;
  // Vandermonde system in t = 1..m
  std::vector<std::vector<S>> V(m, std::vector<S>(m));
  std::vector<GradedElement<S>> r;
  for (int k = 0; k < m; ++k) {
    S tk = ScalarTraits<S>::from_int(k + 1);
    for (int l = 0; l < m; ++l) V[k][l] = ipow(tk, l);
    r.push_back(mehler_kernel(data, {}, {}, tk).reduced);
  }
  for (int c = 0; c < m; ++c) {
    S p = V[c][c];
    for (int row = 0; row < m; ++row) {
      if (row == c) continue;
      S f = V[row][c] / p;
      if (ScalarTraits<S>::is_zero(f)) continue;
      for (int l = c; l < m; ++l) V[row][l] -= f * V[c][l];
      r[row] -= r[c] * f;
    }
  }
  std::vector<GradedElement<S>> out;
  for (int l = 0; l <= l_max; ++l) out.push_back(l < m ? r[l] * (ScalarTraits<S>::one() / V[l][l]) : GradedElement<S>(ctx));
  return out;
}

template <class S>
ScaledForm<S> fixed_point_integral(const FixedPointGeometry& geom, const MehlerData<S>& data, const S& t) {
  check_data(data);
  check_time(t);
  const int n = data.n, a = geom.a, b = geom.b();
  if (a + b != n) throw std::invalid_argument("fixed_point_integral: a + b != n");
  det_half_one_minus<S>(geom.phi.angles);  // throws on a degenerate action
  auto ctx = data.A.context();
  RingMatrix<S> M = data.A * (t / ScalarTraits<S>::from_int(2));
  int order = series_order(M);
  RingMatrix<S> X = matrix_function(series::x_over_sinh(order), M);
  RingMatrix<S> C = matrix_function(series::x_coth(order), M);
  RingMatrix<S> phiN = geom.phi.template matrix<S>(ctx);
  RingMatrix<S> U = RingMatrix<S>::identity(ctx, b) - phiN;
  RingMatrix<S> Q = U.transpose() * C.block(a, a, b, b) * U * (ScalarTraits<S>::one() / (ScalarTraits<S>::from_int(4) * t)) -
                    data.A.block(a, a, b, b) * phiN * ScalarTraits<S>::from_rational(Rational(1, 4));
  RingMatrix<S> Qs = (Q + Q.transpose()) * ScalarTraits<S>::from_rational(Rational(1, 2));
  GradedElement<S> gauss = elem_pow(ring_det(Qs), Rational(-1, 2));
  S pre = ipow(ScalarTraits<S>::from_int(4), -(n / 2)) * half_power_inverse(t, n);
  if (n % 2) pre = pre / ScalarTraits<S>::from_int(2);
  return {mul(det_sqrt(X), gauss) * pre, -(a / 2)};
}

template <class S>
EquivariantModelDensity<S> equivariant_model_density(const FixedPointGeometry& geom, const MehlerData<S>& data,
                                                     const S& t) {
  auto ctx = data.A.context();
  if (ctx->fiber() != FiberMode::exterior || ctx->n() != data.n)
    throw std::invalid_argument("equivariant_model_density: A must live in an exterior context of fibre dimension n");
  if (geom.a % 2) throw std::invalid_argument("equivariant_model_density: fixed-set dimension must be even");
  ScaledForm<S> I = fixed_point_integral(geom, data, t);
  GradedElement<S> cI = quantize(I.coeff);
  GradedElement<S> lift = spinor_lift<S>(cI.context(), geom.a, geom.phi.angles);
  EquivariantSupertrace<S> est = equivariant_supertrace(lift, cI, geom.a, geom.phi.angles);
  EquivariantModelDensity<S> r;
  r.density = {est.leading.with_context(ctx), I.pi_power};
  r.total_supertrace = est.total.with_context(ctx);
  r.integral = I.coeff;
  r.lift_branch = est.lift_branch;
  return r;
}

NumericMehler::NumericMehler(const std::vector<double>& A_row_major, int n, double t) : n_(n), t_(t), A_(A_row_major) {
  auto d = MehlerData<CDouble>::numeric(n, A_row_major);
  check_data(d);
  check_time(CDouble(t));
  RingMatrix<CDouble> M = d.A * CDouble(t / 2);
  RingMatrix<CDouble> X = matrix_function(series::x_over_sinh(60), M);
  RingMatrix<CDouble> C = matrix_function(series::x_coth(60), M);
  prefactor_ = std::pow(4 * M_PI * t, -0.5 * n) * det_sqrt(X).constant_term().real();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) C_.push_back(C(i, j).constant_term().real());
}

double NumericMehler::operator()(const std::vector<double>& x, const std::vector<double>& y) const {
  double e = 0;
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) {
      e -= C_[i * n_ + j] * (x[i] - y[i]) * (x[j] - y[j]) / (4 * t_);
      e += A_[i * n_ + j] * x[i] * y[j] / 4;
    }
  return prefactor_ * std::exp(e);
}

#define INDEXLAB_MODEL_HEAT(S)                                                                                       \
  template struct MehlerData<S>;                                                                                     \
  template struct MehlerValue<S>;                                                                                    \
  template MehlerValue<S> mehler_kernel(const MehlerData<S>&, const std::vector<S>&, const std::vector<S>&, const S&); \
  template std::vector<GradedElement<S>> mehler_t_expansion(const MehlerData<S>&, int);                              \
  template ScaledForm<S> fixed_point_integral(const FixedPointGeometry&, const MehlerData<S>&, const S&);            \
  template EquivariantModelDensity<S> equivariant_model_density(const FixedPointGeometry&, const MehlerData<S>&, const S&);

INDEXLAB_MODEL_HEAT(QComplex)
INDEXLAB_MODEL_HEAT(CDouble)

// ---------------------------------------------------------------------------
// Grid oracle

std::vector<double> GridSemigroupOracle::evolve(const std::vector<double>& A, double t, int steps) const {
  if (A.size() != 4) throw std::invalid_argument("GridSemigroupOracle: A must be 2x2");
  if (!(t > 0)) throw std::invalid_argument("GridSemigroupOracle: t must be positive");
  const int N = cfg_.grid;
  const double h = spacing();
  const int total = N * N;
  auto idx = [N](int i, int j) { return ((i + N) % N) * N + ((j + N) % N); };
  auto coord = [N, h](int k) { return (k - N / 2) * h; };
  // F = -Lap + 1/2 sum_i (Ax)_i d_i - 1/16 |Ax|^2
  const double d2[5] = {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};
  const double d1[5] = {1.0 / 12, -8.0 / 12, 0, 8.0 / 12, -1.0 / 12};
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(total) * 9);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      double x1 = coord(i), x2 = coord(j);
      double ax1 = A[0] * x1 + A[1] * x2, ax2 = A[2] * x1 + A[3] * x2;
      int row = idx(i, j);
      trip.emplace_back(row, row, -(ax1 * ax1 + ax2 * ax2) / 16);
      for (int s = -2; s <= 2; ++s) {
        double lap = -d2[s + 2] / (h * h);
        trip.emplace_back(row, idx(i + s, j), lap + 0.5 * ax1 * d1[s + 2] / h);
        trip.emplace_back(row, idx(i, j + s), lap + 0.5 * ax2 * d1[s + 2] / h);
      }
    }
  Eigen::SparseMatrix<double> F(total, total);
  F.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseMatrix<double> I(total, total);
  I.setIdentity();
  const double dt = t / steps;
  Eigen::SparseMatrix<double> Lp = I + 0.5 * dt * F, Lm = I - 0.5 * dt * F;
  Eigen::BiCGSTAB<Eigen::SparseMatrix<double>> solver;
  solver.setTolerance(cfg_.solver_tolerance);
  solver.compute(Lp);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(total);
  u[idx(N / 2, N / 2)] = 1.0 / (h * h);
  // Rannacher start: the first step is four implicit Euler quarter steps, damping the stiff part of the delta
  {
    Eigen::BiCGSTAB<Eigen::SparseMatrix<double>> be;
    be.setTolerance(cfg_.solver_tolerance);
    Eigen::SparseMatrix<double> Lb = I + 0.25 * dt * F;
    be.compute(Lb);
    for (int s = 0; s < 4; ++s) {
      u = be.solveWithGuess(Eigen::VectorXd(u), u);
      if (be.info() != Eigen::Success) throw std::runtime_error("GridSemigroupOracle: linear solve failed");
    }
  }
  for (int s = 1; s < steps; ++s) {
    Eigen::VectorXd rhs = Lm * u;
    u = solver.solveWithGuess(rhs, u);
    if (solver.info() != Eigen::Success) throw std::runtime_error("GridSemigroupOracle: linear solve failed");
  }
  return {u.data(), u.data() + total};
}

std::vector<double> GridSemigroupOracle::column(const std::vector<double>& A, double t) const {
  std::vector<double> coarse = evolve(A, t, cfg_.steps);
  if (!cfg_.richardson) return coarse;
  std::vector<double> fine = evolve(A, t, 2 * cfg_.steps);
  for (std::size_t k = 0; k < fine.size(); ++k) fine[k] = (4 * fine[k] - coarse[k]) / 3;
  return fine;
}

double GridSemigroupOracle::diagonal(const std::vector<double>& A, double t) const {
  const int N = cfg_.grid;
  return column(A, t)[static_cast<std::size_t>(N / 2) * N + N / 2];
}

}  // namespace indexlab
