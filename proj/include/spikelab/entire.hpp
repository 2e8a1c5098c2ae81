#pragma once

// Radial ground states of the whole-space system
//   -U'' - (N-1)/r U' + U = V^q,   -V'' - (N-1)/r V' + V = U^p,
//   U'(0) = V'(0) = 0,  U(R_max) = V(R_max) = 0  (Dirichlet truncation).
//
// Discretization is 4th-order finite differences on a uniform radial grid
// with even-symmetry ghost values at r = 0 (odd derivatives vanish there, so
// the 1/r term loses no order) and an odd-reflection ghost past R_max. The
// nonlinear system is solved by damped Newton with a sparse direct
// factorization; the initial iterate is a Gaussian pair rescaled to the
// maximizer of its own dual ray, with a symmetric-exponent continuation
// fallback. Derived quantities: weighted moments with fitted-tail
// extrapolation, far-field decay rates, the energy constant, and the
// second-moment combination eta under both printed sign conventions.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <json.hpp>

#include "spikelab/errors.hpp"
#include "spikelab/exponents.hpp"
#include "spikelab/grid.hpp"
#include "spikelab/ray.hpp"

namespace spikelab {

inline double unit_sphere_area(int N) {
  return 2.0 * std::pow(M_PI, 0.5 * N) / std::tgamma(0.5 * N);
}

// ---------------------------------------------------------------------------
// Radial operator tables: rows of -Delta_r = -(d^2/dr^2 + (N-1)/r d/dr) on
// unknowns u_0..u_{M-1} (u_M = 0).
struct RadialOperator {
  int M = 0;
  int N = 1;
  double h = 0;
  std::vector<std::vector<std::pair<int, double>>> lap_rows;   // -Delta_r
  std::vector<std::vector<std::pair<int, double>>> ddr_rows;   // d/dr

  RadialOperator() = default;
  RadialOperator(int M_, int N_, double R_max) : M(M_), N(N_), h(R_max / M_) {
    if (M < 8) throw std::invalid_argument("radial: M too small");
    lap_rows.resize(M);
    ddr_rows.resize(M);
    double ih2 = 1.0 / (12.0 * h * h);
    double ih1 = 1.0 / (12.0 * h);

    auto add = [](std::vector<std::pair<int, double>>& row, int j, double c) {
      if (c == 0.0) return;
      for (auto& e : row)
        if (e.first == j) {
          e.second += c;
          return;
        }
      row.push_back({j, c});
    };

    for (int i = 0; i < M; ++i) {
      auto& Lr = lap_rows[i];
      auto& Dr = ddr_rows[i];
      double r = i * h;
      if (i == 0) {
        // Delta u(0) = N u''(0); even symmetry folds the 5-point stencil
        add(Lr, 0, 30.0 * N * ih2);
        add(Lr, 1, -32.0 * N * ih2);
        add(Lr, 2, 2.0 * N * ih2);
        // u'(0) = 0
        continue;
      }
      // u'' and u' stencils with folding at the ends
      std::vector<std::pair<int, double>> s2 = {{i - 2, -1.0}, {i - 1, 16.0}, {i, -30.0}, {i + 1, 16.0}, {i + 2, -1.0}};
      std::vector<std::pair<int, double>> s1 = {{i - 2, 1.0}, {i - 1, -8.0}, {i + 1, 8.0}, {i + 2, -1.0}};
      auto fold = [&](std::vector<std::pair<int, double>>& st, std::vector<std::pair<int, double>>& out, double scale) {
        for (auto [j, c] : st) {
          if (j == -1) j = 1;                    // even reflection at r=0
          if (j == M) continue;                  // Dirichlet
          if (j == M + 1) {                      // odd reflection past R_max
            j = M - 1;
            c = -c;
          }
          add(out, j, c * scale);
        }
      };
      std::vector<std::pair<int, double>> row2, row1;
      fold(s2, row2, ih2);
      fold(s1, row1, ih1);
      for (auto [j, c] : row2) add(Lr, j, -c);
      for (auto [j, c] : row1) {
        add(Dr, j, c);
        add(Lr, j, -(N - 1) / r * c);
      }
    }
  }

  // y = -Delta_r u (u has M entries)
  void apply_lap(const std::vector<double>& u, std::vector<double>& y) const {
    y.assign(M, 0.0);
    for (int i = 0; i < M; ++i)
      for (auto [j, c] : lap_rows[i]) y[i] += c * u[j];
  }

  // derivative at interior nodes; du[0] = 0 by symmetry
  std::vector<double> derivative(const std::vector<double>& u) const {
    std::vector<double> du(M, 0.0);
    for (int i = 1; i < M; ++i)
      for (auto [j, c] : ddr_rows[i]) du[i] += c * u[j];
    return du;
  }
};

// Composite Simpson weights on 0..M (M+1 nodes); falls back to a 3/8 block
// when the segment count is odd.
inline std::vector<double> simpson_weights(int M, double h) {
  std::vector<double> w(M + 1, 0.0);
  int even_end = (M % 2 == 0) ? M : M - 3;
  for (int i = 0; i + 2 <= even_end; i += 2) {
    w[i] += h / 3.0;
    w[i + 1] += 4.0 * h / 3.0;
    w[i + 2] += h / 3.0;
  }
  if (M % 2 != 0) {
    int i = M - 3;
    w[i] += 3.0 * h / 8.0;
    w[i + 1] += 9.0 * h / 8.0;
    w[i + 2] += 9.0 * h / 8.0;
    w[i + 3] += 3.0 * h / 8.0;
  }
  return w;
}

// ---------------------------------------------------------------------------
// Natural/clamped cubic spline on a uniform grid; clamped (zero slope) at the
// left end, natural at the right.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(double h, std::vector<double> y) : h_(h), y_(std::move(y)) {
    int n = static_cast<int>(y_.size()) - 1;
    std::vector<double> a(n + 1), b(n + 1), c(n + 1), d(n + 1);
    m_.assign(n + 1, 0.0);
    // solve for second derivatives m_i: tridiagonal
    // left: clamped y'(0)=0 -> 2 m_0 + m_1 = 6/h^2 (y_1 - y_0)
    b[0] = 2.0;
    c[0] = 1.0;
    d[0] = 6.0 / (h_ * h_) * (y_[1] - y_[0]);
    for (int i = 1; i < n; ++i) {
      a[i] = 1.0;
      b[i] = 4.0;
      c[i] = 1.0;
      d[i] = 6.0 / (h_ * h_) * (y_[i - 1] - 2.0 * y_[i] + y_[i + 1]);
    }
    a[n] = 0.0;
    b[n] = 1.0;
    d[n] = 0.0;  // natural right end
    for (int i = 1; i <= n; ++i) {
      double wfac = a[i] / b[i - 1];
      b[i] -= wfac * c[i - 1];
      d[i] -= wfac * d[i - 1];
    }
    m_[n] = d[n] / b[n];
    for (int i = n - 1; i >= 0; --i) m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
  }

  double operator()(double x) const {
    int n = static_cast<int>(y_.size()) - 1;
    if (x <= 0) x = 0;
    double s = x / h_;
    int i = std::min(static_cast<int>(s), n - 1);
    double t = x - i * h_;
    double u = h_ - t;
    return (m_[i] * u * u * u + m_[i + 1] * t * t * t) / (6.0 * h_) +
           (y_[i] / h_ - m_[i] * h_ / 6.0) * u + (y_[i + 1] / h_ - m_[i + 1] * h_ / 6.0) * t;
  }

  double domain_end() const { return h_ * (static_cast<double>(y_.size()) - 1.0); }

 private:
  double h_ = 1;
  std::vector<double> y_;
  std::vector<double> m_;
};

// ---------------------------------------------------------------------------
struct DecayFit {
  double rate = 0;      // exponential rate c in P r^{-(N-1)/2} e^{-c r}
  double prefactor = 0; // P
  double residual = 0;  // max abs deviation of the log-model over the window
  int samples = 0;
};

enum class EtaConvention { Minus, Plus };

struct RadialGroundState {
  ExponentPair exponents;
  double R_max = 0;
  int M = 0;
  double h = 0;
  double tol = 0;
  std::vector<double> U, V;  // size M+1, boundary value 0
  double residual_norm = 0;
  int newton_iterations = 0;

  DecayFit decay_U, decay_V;
  double A0 = 0, B0 = 0;       // integrals of U^{p+1}, V^{q+1} over R^N
  double M2U = 0, M2V = 0;     // |y|^2-weighted versions
  double tail_A0 = 0, tail_B0 = 0;
  double C_inf = 0;            // (1/2 - 1/(p+1)) A0 + (1/2 - 1/(q+1)) B0
  double bilinear = 0;         // int (U'V' + UV) dV, equals A0 and B0 at a solution

  double r(int i) const { return i * h; }
  double sup_U() const { return *std::max_element(U.begin(), U.end()); }
  double sup_V() const { return *std::max_element(V.begin(), V.end()); }

  CubicSpline spline_U() const { return CubicSpline(h, U); }
  CubicSpline spline_V() const { return CubicSpline(h, V); }

  // profile evaluation with the fitted far-field continuation past R_max
  double eval_U(double rr, const CubicSpline& sp) const { return eval_profile(rr, sp, decay_U); }
  double eval_V(double rr, const CubicSpline& sp) const { return eval_profile(rr, sp, decay_V); }

 private:
  double eval_profile(double rr, const CubicSpline& sp, const DecayFit& f) const {
    if (rr < R_max) return sp(rr);
    int N = exponents.N;
    return f.prefactor * std::pow(rr, -0.5 * (N - 1)) * std::exp(-f.rate * rr);
  }
};

// Least-squares fit of log(U r^{(N-1)/2}) ~ log P - c r over the window
// [win_lo, win_hi] * R_max. The algebraic prefactor is the far-field
// asymptotic of the linearized operator, so the fitted c is the pure
// exponential rate.
inline DecayFit decay_rate_fit_values(const std::vector<double>& vals, double h, double R_max,
                                      int N, double win_lo = 0.5, double win_hi = 0.9) {
  double r0 = win_lo * R_max, r1 = win_hi * R_max;
  std::vector<double> xs, ys;
  for (int i = 0; i < static_cast<int>(vals.size()); ++i) {
    double rr = i * h;
    if (rr < r0 || rr > r1) continue;
    if (!(vals[i] > 0)) continue;
    xs.push_back(rr);
    ys.push_back(std::log(vals[i]) + 0.5 * (N - 1) * std::log(rr));
  }
  if (xs.size() < 8) throw WindowUnderflow("decay fit: fewer than 8 positive samples in window");
  double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  double inter = (sy - slope * sx) / n;
  DecayFit f;
  f.rate = -slope;
  f.prefactor = std::exp(inter);
  f.samples = static_cast<int>(xs.size());
  double res = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) res = std::max(res, std::abs(ys[i] - (inter + slope * xs[i])));
  f.residual = res;
  return f;
}

inline std::pair<DecayFit, DecayFit> decay_rate_fit(const RadialGroundState& s, double win_lo = 0.5,
                                                    double win_hi = 0.9) {
  DecayFit fu = decay_rate_fit_values(s.U, s.h, s.R_max, s.exponents.N, win_lo, win_hi);
  DecayFit fv = decay_rate_fit_values(s.V, s.h, s.R_max, s.exponents.N, win_lo, win_hi);
  return {fu, fv};
}

namespace detail {

// integral over R^N of vals^{power} * |y|^{mom} via weighted radial quadrature
// plus the fitted-tail continuation past R_max.
struct MomentResult {
  double main = 0, tail = 0;
  double total() const { return main + tail; }
};

inline MomentResult radial_moment(const std::vector<double>& vals, double h, double R_max, int N,
                                  double power, int mom, const DecayFit& fit) {
  int M = static_cast<int>(vals.size()) - 1;
  std::vector<double> w = simpson_weights(M, h);
  double omega = unit_sphere_area(N);
  MomentResult r;
  for (int i = 0; i <= M; ++i) {
    double rr = i * h;
    double rpow = (i == 0) ? (N - 1 + mom == 0 ? 1.0 : 0.0) : std::pow(rr, N - 1 + mom);
    r.main += w[i] * std::pow(std::abs(vals[i]), power) * rpow;
  }
  r.main *= omega;
  // tail: integrand (P r^{-(N-1)/2} e^{-c r})^{power} r^{N-1+mom}
  double c = fit.rate * power;
  if (c > 0) {
    double span = 80.0 / c;
    int K = 4000;
    double dh = span / K;
    double acc = 0;
    for (int k = 0; k <= K; ++k) {
      double rr = R_max + k * dh;
      double f = std::pow(fit.prefactor * std::pow(rr, -0.5 * (N - 1)), power) * std::exp(-c * rr) *
                 std::pow(rr, N - 1 + mom);
      acc += (k == 0 || k == K) ? 0.5 * f : f;
    }
    r.tail = omega * acc * dh;
  }
  return r;
}

}  // namespace detail

// Fills A0, B0, M2U, M2V (and tail bookkeeping). Throws DecayNotResolved when
// the extrapolated tail exceeds 0.1% of the integral.
inline void compute_moments(RadialGroundState& s) {
  const auto& e = s.exponents;
  auto mu = detail::radial_moment(s.U, s.h, s.R_max, e.N, e.p + 1.0, 0, s.decay_U);
  auto mv = detail::radial_moment(s.V, s.h, s.R_max, e.N, e.q + 1.0, 0, s.decay_V);
  auto m2u = detail::radial_moment(s.U, s.h, s.R_max, e.N, e.p + 1.0, 2, s.decay_U);
  auto m2v = detail::radial_moment(s.V, s.h, s.R_max, e.N, e.q + 1.0, 2, s.decay_V);
  for (const auto& m : {mu, mv, m2u, m2v}) {
    if (std::abs(m.tail) > 1e-3 * std::abs(m.total()))
      throw DecayNotResolved("moments: fitted tail exceeds 0.1% of the integral; increase R_max");
  }
  s.A0 = mu.total();
  s.B0 = mv.total();
  s.tail_A0 = mu.tail;
  s.tail_B0 = mv.tail;
  s.M2U = m2u.total();
  s.M2V = m2v.total();
}

struct EntireEnergy {
  double C_inf = 0;
  double A0 = 0, B0 = 0;
  double bilinear = 0;  // int (U'V' + UV) dV
};

inline EntireEnergy entire_energy(const RadialGroundState& s) {
  const auto& e = s.exponents;
  EntireEnergy en;
  en.A0 = s.A0;
  en.B0 = s.B0;
  en.C_inf = (0.5 - 1.0 / (e.p + 1.0)) * s.A0 + (0.5 - 1.0 / (e.q + 1.0)) * s.B0;

  RadialOperator op(s.M, e.N, s.R_max);
  std::vector<double> u(s.U.begin(), s.U.begin() + s.M), v(s.V.begin(), s.V.begin() + s.M);
  std::vector<double> du = op.derivative(u), dv = op.derivative(v);
  std::vector<double> w = simpson_weights(s.M, s.h);
  double omega = unit_sphere_area(e.N);
  double acc = 0;
  for (int i = 0; i < s.M; ++i) {
    double rr = i * s.h;
    double rpow = (i == 0) ? (e.N == 1 ? 1.0 : 0.0) : std::pow(rr, e.N - 1);
    acc += w[i] * (du[i] * dv[i] + u[i] * v[i]) * rpow;
  }
  en.bilinear = omega * acc;
  return en;
}

// eta = (p-1)/(2(p+1)) M2U  [+ or -]  (q-1)/(2(q+1)) M2V.
inline double eta(const RadialGroundState& s, EtaConvention conv) {
  const auto& e = s.exponents;
  double tu = (e.p - 1.0) / (2.0 * (e.p + 1.0)) * s.M2U;
  double tv = (e.q - 1.0) / (2.0 * (e.q + 1.0)) * s.M2V;
  return conv == EtaConvention::Plus ? tu + tv : tu - tv;
}

// ---------------------------------------------------------------------------
// Newton solver.
struct EntireOptions {
  double R_max = 20.0;
  int M = 2000;
  double tol = 1e-10;
  int max_newton = 60;
  double init_width = 1.0;
  bool allow_continuation = true;
};

namespace detail {

struct RadialNewtonResult {
  std::vector<double> U, V;  // size M (interior); boundary appended later
  double residual = 0;
  int iterations = 0;
};

inline void radial_residual(const RadialOperator& op, const ExponentPair& e,
                            const std::vector<double>& U, const std::vector<double>& V,
                            std::vector<double>& F) {
  int M = op.M;
  F.assign(2 * M, 0.0);
  std::vector<double> lu, lv;
  op.apply_lap(U, lu);
  op.apply_lap(V, lv);
  for (int i = 0; i < M; ++i) {
    F[i] = lu[i] + U[i] - sgn_pow(V[i], e.q);
    F[M + i] = lv[i] + V[i] - sgn_pow(U[i], e.p);
  }
}

// Damped Newton with positivity safeguarding. Iterates may carry negative
// values down at the 1e-13*sup roundoff scale (Gaussian tails underflow long
// before the far field equilibrates); anything deeper is rejected by halving
// the step.
inline std::optional<RadialNewtonResult> radial_newton(const RadialOperator& op, const ExponentPair& e,
                                                       std::vector<double> U, std::vector<double> V,
                                                       double tol, int max_newton) {
  int M = op.M;
  using SpMat = Eigen::SparseMatrix<double>;
  std::vector<Eigen::Triplet<double>> lin;
  for (int i = 0; i < M; ++i) {
    for (auto [j, c] : op.lap_rows[i]) {
      lin.emplace_back(i, j, c);
      lin.emplace_back(M + i, M + j, c);
    }
    lin.emplace_back(i, i, 1.0);
    lin.emplace_back(M + i, M + i, 1.0);
  }

  std::vector<double> F;
  radial_residual(op, e, U, V, F);
  double res = vec_linf(F);

  Eigen::SparseLU<SpMat> solver;
  bool analyzed = false;

  for (int it = 0; it < max_newton; ++it) {
    if (res < tol) {
      RadialNewtonResult r;
      r.U = U;
      r.V = V;
      r.residual = res;
      r.iterations = it;
      return r;
    }
    std::vector<Eigen::Triplet<double>> trip = lin;
    for (int i = 0; i < M; ++i) {
      trip.emplace_back(i, M + i, -e.q * std::pow(std::abs(V[i]), e.q - 1.0));
      trip.emplace_back(M + i, i, -e.p * std::pow(std::abs(U[i]), e.p - 1.0));
    }
    SpMat J(2 * M, 2 * M);
    J.setFromTriplets(trip.begin(), trip.end());
    if (!analyzed) {
      solver.analyzePattern(J);
      analyzed = true;
    }
    solver.factorize(J);
    if (solver.info() != Eigen::Success) return std::nullopt;
    Eigen::VectorXd rhs(2 * M);
    for (int i = 0; i < 2 * M; ++i) rhs[i] = -F[i];
    Eigen::VectorXd d = solver.solve(rhs);

    double lambda = 1.0;
    double sup = 0;
    for (int i = 0; i < M; ++i) sup = std::max({sup, std::abs(U[i]), std::abs(V[i])});
    bool accepted = false;
    std::vector<double> Un(M), Vn(M), Fn;
    while (lambda >= std::pow(2.0, -20)) {
      for (int i = 0; i < M; ++i) {
        Un[i] = U[i] + lambda * d[i];
        Vn[i] = V[i] + lambda * d[M + i];
      }
      double mn = 0;
      for (int i = 0; i < M; ++i) mn = std::min({mn, Un[i], Vn[i]});
      if (mn < -1e-12 * std::max(1.0, sup)) {
        lambda *= 0.5;
        continue;
      }
      radial_residual(op, e, Un, Vn, Fn);
      double rn = vec_linf(Fn);
      if (rn <= (1.0 - 0.25 * lambda) * res || rn < tol) {
        U.swap(Un);
        V.swap(Vn);
        F.swap(Fn);
        res = rn;
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) return std::nullopt;
  }
  if (res < tol) {
    RadialNewtonResult r;
    r.U = U;
    r.V = V;
    r.residual = res;
    r.iterations = max_newton;
    return r;
  }
  return std::nullopt;
}

// Gaussian pair rescaled to the maximizer of its dual ray. The scalar
// Helmholtz solves reuse the radial operator factorization.
inline void gaussian_ray_init(const RadialOperator& op, const ExponentPair& e, double width,
                              std::vector<double>& U, std::vector<double>& V) {
  int M = op.M;
  double h = op.h;
  U.assign(M, 0.0);
  V.assign(M, 0.0);
  // floor keeps far-field iterates away from the positivity guard
  for (int i = 0; i < M; ++i) {
    double rr = i * h;
    double g = std::exp(-rr * rr / (2.0 * width * width));
    double floor = 1e-6 * std::exp(-rr);
    U[i] = std::max(g, floor);
    V[i] = U[i];
  }

  using SpMat = Eigen::SparseMatrix<double>;
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < M; ++i) {
    for (auto [j, c] : op.lap_rows[i]) trip.emplace_back(i, j, c);
    trip.emplace_back(i, i, 1.0);
  }
  SpMat A(M, M);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<SpMat> lu(A);

  Eigen::VectorXd fq(M), fp(M);
  for (int i = 0; i < M; ++i) {
    fq[i] = std::pow(V[i], e.q);
    fp[i] = std::pow(U[i], e.p);
  }
  Eigen::VectorXd Sq = lu.solve(fq), Sp = lu.solve(fp);

  std::vector<double> w = simpson_weights(M, h);  // one past-end weight unused (boundary value 0)
  double a = 0, b = 0, c = 0;
  for (int i = 0; i < M; ++i) {
    double rr = i * h;
    double rpow = (i == 0) ? (e.N == 1 ? 1.0 : 0.0) : std::pow(rr, e.N - 1);
    a += w[i] * std::pow(U[i], e.p + 1.0) * rpow;
    b += w[i] * std::pow(V[i], e.q + 1.0) * rpow;
    c += w[i] * (fp[i] * Sq[i] + fq[i] * Sp[i]) * rpow;
  }
  double t = ray_maximizer(a, b, c, e.p, e.q);
  double su = std::pow(t, 1.0 / e.p), sv = std::pow(t, 1.0 / e.q);
  for (int i = 0; i < M; ++i) {
    U[i] *= su;
    V[i] *= sv;
  }
}

}  // namespace detail

inline void finalize_ground_state(RadialGroundState& s) {
  auto [fu, fv] = decay_rate_fit(s);
  s.decay_U = fu;
  s.decay_V = fv;
  compute_moments(s);
  EntireEnergy en = entire_energy(s);
  s.C_inf = en.C_inf;
  s.bilinear = en.bilinear;
}

inline RadialGroundState solve_entire_ground_state(const ExponentPair& e, const EntireOptions& opt = {}) {
  if (opt.R_max < 15.0) throw ConfigError("entire: R_max must be >= 15");
  if (opt.M < 400) throw ConfigError("entire: M must be >= 400");

  RadialOperator op(opt.M, e.N, opt.R_max);
  std::optional<detail::RadialNewtonResult> best;

  auto attempt = [&](double width) -> std::optional<detail::RadialNewtonResult> {
    std::vector<double> U, V;
    detail::gaussian_ray_init(op, e, width, U, V);
    return detail::radial_newton(op, e, U, V, opt.tol, opt.max_newton);
  };

  best = attempt(opt.init_width);
  if (!best && opt.allow_continuation) {
    for (double w : {0.5, 2.0}) {
      best = attempt(w);
      if (best) break;
    }
  }
  if (!best && opt.allow_continuation && e.p != e.q) {
    // symmetric branch, then morph the exponents in steps
    double pm = 0.5 * (e.p + e.q);
    ExponentPair sym(pm, pm, e.N);
    std::optional<detail::RadialNewtonResult> cur;
    for (double w : {1.0, 0.5, 2.0}) {
      std::vector<double> U, V;
      detail::gaussian_ray_init(op, sym, w, U, V);
      cur = detail::radial_newton(op, sym, U, V, opt.tol, opt.max_newton);
      if (cur) break;
    }
    if (cur) {
      bool ok = true;
      for (double lam : {0.25, 0.5, 0.75, 1.0}) {
        ExponentPair step(pm + lam * (e.p - pm), pm + lam * (e.q - pm), e.N);
        cur = detail::radial_newton(op, step, cur->U, cur->V, opt.tol, opt.max_newton);
        if (!cur) {
          ok = false;
          break;
        }
      }
      if (ok) best = cur;
    }
  }
  if (!best) throw NonConvergence("entire: Newton did not converge from any initialization");

  // positivity of the converged profile
  for (int i = 0; i < opt.M; ++i) {
    if (!(best->U[i] > 0.0) || !(best->V[i] > 0.0))
      throw PositivityLost("entire: converged profile is not strictly positive");
  }

  RadialGroundState s;
  s.exponents = e;
  s.R_max = opt.R_max;
  s.M = opt.M;
  s.h = opt.R_max / opt.M;
  s.tol = opt.tol;
  s.U = best->U;
  s.U.push_back(0.0);
  s.V = best->V;
  s.V.push_back(0.0);
  s.residual_norm = best->residual;
  s.newton_iterations = best->iterations;
  finalize_ground_state(s);
  return s;
}

// Re-solve from explicit profiles (continuation / verification helper).
inline RadialGroundState solve_entire_from(const ExponentPair& e, const EntireOptions& opt,
                                           const std::vector<double>& U0, const std::vector<double>& V0) {
  RadialOperator op(opt.M, e.N, opt.R_max);
  std::vector<double> U(U0.begin(), U0.begin() + opt.M), V(V0.begin(), V0.begin() + opt.M);
  auto r = detail::radial_newton(op, e, U, V, opt.tol, opt.max_newton);
  if (!r) throw NonConvergence("entire: Newton did not converge from the supplied iterate");
  RadialGroundState s;
  s.exponents = e;
  s.R_max = opt.R_max;
  s.M = opt.M;
  s.h = opt.R_max / opt.M;
  s.tol = opt.tol;
  s.U = r->U;
  s.U.push_back(0.0);
  s.V = r->V;
  s.V.push_back(0.0);
  s.residual_norm = r->residual;
  s.newton_iterations = r->iterations;
  finalize_ground_state(s);
  return s;
}

// ---------------------------------------------------------------------------
// Serialization.
inline std::string state_cache_key(const ExponentPair& e, const EntireOptions& opt) {
  std::ostringstream os;
  os.precision(17);
  os << "p=" << e.p << ";q=" << e.q << ";N=" << e.N << ";R=" << opt.R_max << ";M=" << opt.M
     << ";tol=" << opt.tol;
  return os.str();
}

inline nlohmann::json ground_state_to_json(const RadialGroundState& s) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["kind"] = "radial_ground_state";
  j["p"] = s.exponents.p;
  j["q"] = s.exponents.q;
  j["N"] = s.exponents.N;
  j["R_max"] = s.R_max;
  j["M"] = s.M;
  j["tol"] = s.tol;
  j["U"] = s.U;
  j["V"] = s.V;
  j["residual_norm"] = s.residual_norm;
  j["newton_iterations"] = s.newton_iterations;
  j["decay"] = {{"c_U", s.decay_U.rate},       {"P_U", s.decay_U.prefactor},
                {"res_U", s.decay_U.residual}, {"c_V", s.decay_V.rate},
                {"P_V", s.decay_V.prefactor},  {"res_V", s.decay_V.residual}};
  j["moments"] = {{"A0", s.A0}, {"B0", s.B0}, {"M2U", s.M2U}, {"M2V", s.M2V},
                  {"tail_A0", s.tail_A0}, {"tail_B0", s.tail_B0}};
  j["C_inf"] = s.C_inf;
  j["bilinear"] = s.bilinear;
  return j;
}

inline RadialGroundState ground_state_from_json(const nlohmann::json& j) {
  if (j.value("schema_version", 0) != 1 || j.value("kind", "") != "radial_ground_state")
    throw ConfigError("ground state json: unknown schema");
  RadialGroundState s;
  s.exponents = ExponentPair(j.at("p").get<double>(), j.at("q").get<double>(), j.at("N").get<int>());
  s.R_max = j.at("R_max").get<double>();
  s.M = j.at("M").get<int>();
  s.h = s.R_max / s.M;
  s.tol = j.at("tol").get<double>();
  s.U = j.at("U").get<std::vector<double>>();
  s.V = j.at("V").get<std::vector<double>>();
  s.residual_norm = j.at("residual_norm").get<double>();
  s.newton_iterations = j.at("newton_iterations").get<int>();
  s.decay_U.rate = j.at("decay").at("c_U").get<double>();
  s.decay_U.prefactor = j.at("decay").at("P_U").get<double>();
  s.decay_U.residual = j.at("decay").at("res_U").get<double>();
  s.decay_V.rate = j.at("decay").at("c_V").get<double>();
  s.decay_V.prefactor = j.at("decay").at("P_V").get<double>();
  s.decay_V.residual = j.at("decay").at("res_V").get<double>();
  s.A0 = j.at("moments").at("A0").get<double>();
  s.B0 = j.at("moments").at("B0").get<double>();
  s.M2U = j.at("moments").at("M2U").get<double>();
  s.M2V = j.at("moments").at("M2V").get<double>();
  s.tail_A0 = j.at("moments").at("tail_A0").get<double>();
  s.tail_B0 = j.at("moments").at("tail_B0").get<double>();
  s.C_inf = j.at("C_inf").get<double>();
  s.bilinear = j.at("bilinear").get<double>();
  return s;
}

}  // namespace spikelab
