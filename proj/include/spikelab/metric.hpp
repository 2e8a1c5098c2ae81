#pragma once

// Conformally flat periodic metrics g = e^{2 psi} delta on the torus [0,L)^N.
// Closed forms used throughout:
//   sqrt(det g)      = e^{N psi}
//   Gamma^k_ij       = delta_ik d_j psi + delta_jk d_i psi - delta_ij d_k psi
//   Delta_g u        = e^{-2 psi} (Delta u + (N-2) grad psi . grad u)
//   scal. curvature  = e^{-2 psi} (-2(N-1) Delta psi - (N-1)(N-2) |grad psi|^2)
// The catalog (flat / constant / single cosine mode / periodized Gaussian
// bump) carries analytic psi and derivatives; grid caches are sampled from
// those closures.

#include <array>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "spikelab/grid.hpp"
#include "spikelab/spectral.hpp"

namespace spikelab {

enum class MetricKind { Flat, Constant, Cosine, Bump };

inline std::string metric_kind_name(MetricKind k) {
  switch (k) {
    case MetricKind::Flat: return "flat";
    case MetricKind::Constant: return "constant";
    case MetricKind::Cosine: return "cosine";
    case MetricKind::Bump: return "bump";
  }
  return "?";
}

class ConformalMetric {
 public:
  static ConformalMetric flat(int N, double L, const Shape& grid) {
    return ConformalMetric(MetricKind::Flat, N, L, grid);
  }

  static ConformalMetric constant(int N, double L, const Shape& grid, double value) {
    ConformalMetric m(MetricKind::Constant, N, L, grid);
    m.value_ = value;
    return m;
  }

  static ConformalMetric cosine(int N, double L, const Shape& grid, double amplitude,
                                const std::vector<int>& mode) {
    ConformalMetric m(MetricKind::Cosine, N, L, grid);
    m.value_ = amplitude;
    m.mode_ = mode;
    if (static_cast<int>(mode.size()) != N) throw std::invalid_argument("cosine metric: mode size != N");
    return m;
  }

  // psi(x) = amplitude * sum_{images} exp(-sharpness * |x - center + kL|^2),
  // images over offsets k in {-2..2}^N. Two rings keep the periodization
  // error ~ e^{-6 s L^2} even for gentle bumps (s L^2 >= 6).
  static ConformalMetric bump(int N, double L, const Shape& grid, double amplitude,
                              double sharpness, const std::vector<double>& center) {
    ConformalMetric m(MetricKind::Bump, N, L, grid);
    m.value_ = amplitude;
    m.sharpness_ = sharpness;
    m.center_ = center;
    if (static_cast<int>(center.size()) != N) throw std::invalid_argument("bump metric: center size != N");
    if (sharpness * L * L < 6.0) throw std::invalid_argument("bump metric: sharpness*L^2 must be >= 6");
    return m;
  }

  MetricKind kind() const { return kind_; }
  int dim() const { return N_; }
  double L() const { return L_; }
  const Shape& grid() const { return grid_; }
  double h(int axis = 0) const { return L_ / grid_[axis]; }
  double amplitude() const { return value_; }
  double sharpness() const { return sharpness_; }
  const std::vector<double>& center() const { return center_; }
  bool constant_psi() const { return kind_ == MetricKind::Flat || kind_ == MetricKind::Constant; }

  std::vector<double> node_point(const std::vector<int>& idx) const {
    std::vector<double> x(N_);
    for (int d = 0; d < N_; ++d) x[d] = idx[d] * (L_ / grid_[d]);
    return x;
  }

  std::vector<double> node_point(Index lin) const { return node_point(unravel(grid_, lin)); }

  // ---- analytic catalog -------------------------------------------------
  double psi(const std::vector<double>& x) const {
    switch (kind_) {
      case MetricKind::Flat: return 0.0;
      case MetricKind::Constant: return value_;
      case MetricKind::Cosine: return value_ * std::cos(mode_phase(x));
      case MetricKind::Bump: {
        double s = 0;
        for_images(x, [&](double r2, const std::vector<double>&) { s += std::exp(-sharpness_ * r2); });
        return value_ * s;
      }
    }
    return 0.0;
  }

  std::vector<double> grad_psi(const std::vector<double>& x) const {
    std::vector<double> g(N_, 0.0);
    switch (kind_) {
      case MetricKind::Flat:
      case MetricKind::Constant: break;
      case MetricKind::Cosine: {
        double s = -value_ * std::sin(mode_phase(x));
        for (int d = 0; d < N_; ++d) g[d] = s * 2.0 * M_PI * mode_[d] / L_;
        break;
      }
      case MetricKind::Bump: {
        for_images(x, [&](double r2, const std::vector<double>& dx) {
          double e = value_ * std::exp(-sharpness_ * r2);
          for (int d = 0; d < N_; ++d) g[d] += -2.0 * sharpness_ * dx[d] * e;
        });
        break;
      }
    }
    return g;
  }

  double laplace_psi(const std::vector<double>& x) const {
    switch (kind_) {
      case MetricKind::Flat:
      case MetricKind::Constant: return 0.0;
      case MetricKind::Cosine: {
        double k2 = 0;
        for (int d = 0; d < N_; ++d) {
          double kd = 2.0 * M_PI * mode_[d] / L_;
          k2 += kd * kd;
        }
        return -k2 * value_ * std::cos(mode_phase(x));
      }
      case MetricKind::Bump: {
        double s = 0;
        for_images(x, [&](double r2, const std::vector<double>&) {
          s += value_ * std::exp(-sharpness_ * r2) * (4.0 * sharpness_ * sharpness_ * r2 - 2.0 * N_ * sharpness_);
        });
        return s;
      }
    }
    return 0.0;
  }

  double sqrt_g(const std::vector<double>& x) const { return std::exp(N_ * psi(x)); }

  // g_ij = e^{2 psi} delta_ij, row-major N x N.
  std::vector<double> metric_tensor(const std::vector<double>& x) const {
    std::vector<double> g(static_cast<std::size_t>(N_) * N_, 0.0);
    double e = std::exp(2.0 * psi(x));
    for (int d = 0; d < N_; ++d) g[static_cast<std::size_t>(d) * N_ + d] = e;
    return g;
  }

  // Gamma[k][i][j], flattened as (k*N + i)*N + j; symmetric in (i,j).
  std::vector<double> christoffel(const std::vector<double>& x) const {
    std::vector<double> G(static_cast<std::size_t>(N_) * N_ * N_, 0.0);
    std::vector<double> dp = grad_psi(x);
    for (int k = 0; k < N_; ++k)
      for (int i = 0; i < N_; ++i)
        for (int j = 0; j < N_; ++j) {
          double v = 0;
          if (i == k) v += dp[j];
          if (j == k) v += dp[i];
          if (i == j) v -= dp[k];
          G[(static_cast<std::size_t>(k) * N_ + i) * N_ + j] = v;
        }
    return G;
  }

  double scalar_curvature(const std::vector<double>& x) const {
    if (constant_psi()) return 0.0;
    double lp = laplace_psi(x);
    std::vector<double> gp = grad_psi(x);
    double g2 = 0;
    for (double v : gp) g2 += v * v;
    return std::exp(-2.0 * psi(x)) * (-2.0 * (N_ - 1) * lp - (N_ - 1) * (N_ - 2) * g2);
  }

  // ---- grid caches ------------------------------------------------------
  const GridField& psi_field() const { return cache(psi_f_, [&](const std::vector<double>& x) { return psi(x); }); }
  const GridField& sqrt_g_field() const { return cache(sqrtg_f_, [&](const std::vector<double>& x) { return sqrt_g(x); }); }
  const GridField& exp_m2psi_field() const {
    return cache(em2_f_, [&](const std::vector<double>& x) { return std::exp(-2.0 * psi(x)); });
  }
  const GridField& exp_nm2psi_field() const {
    return cache(enm2_f_, [&](const std::vector<double>& x) { return std::exp((N_ - 2.0) * psi(x)); });
  }
  const GridField& scalar_curvature_field() const {
    return cache(scal_f_, [&](const std::vector<double>& x) { return scalar_curvature(x); });
  }
  const std::vector<GridField>& grad_psi_fields() const {
    if (gradpsi_f_.empty()) {
      gradpsi_f_.assign(N_, GridField(grid_));
      Index total = shape_size(grid_);
      for (Index i = 0; i < total; ++i) {
        std::vector<double> g = grad_psi(node_point(i));
        for (int d = 0; d < N_; ++d) gradpsi_f_[d][i] = g[d];
      }
    }
    return gradpsi_f_;
  }

  double mean_psi() const {
    const GridField& p = psi_field();
    return lattice_sum(p) / static_cast<double>(p.size());
  }

  // Delta_g u, spectral: e^{-2 psi}(Lap u + (N-2) grad psi . grad u).
  // Discretized in divergence form,
  //   Delta_g u = e^{-N psi} div( e^{(N-2) psi} grad u ),
  // not as e^{-2 psi}(Lap u + (N-2) grad psi . grad u): the two only agree up
  // to product-rule aliasing, and the divergence form is the one that keeps
  // the operator exactly self-adjoint in L^2(dV_g) and exactly consistent
  // with the weighted system the Helmholtz solver inverts, on any grid.
  void laplace_beltrami_apply(SpectralWorkspace& ws, const GridField& u, GridField& out) const {
    if (constant_psi()) {
      ws.laplacian(u, out);
      double e = std::exp(-2.0 * value_);
      for (Index i = 0; i < out.size(); ++i) out[i] *= e;
      return;
    }
    std::vector<GridField> grad;
    ws.gradient(u, grad);
    const GridField& g2 = exp_nm2psi_field();
    for (int d = 0; d < N_; ++d)
      for (Index i = 0; i < g2.size(); ++i) grad[d][i] *= g2[i];
    if (out.size() != u.size()) out = GridField(grid_);
    ws.divergence(grad, out);
    const GridField& sg = sqrt_g_field();
    for (Index i = 0; i < out.size(); ++i) out[i] /= sg[i];
  }

  // Weighted integral sum f * sqrt(g) * cell_volume.
  double integrate(const GridField& f) const {
    const GridField& sg = sqrt_g_field();
    double cell = 1;
    for (int d = 0; d < N_; ++d) cell *= L_ / grid_[d];
    double s = 0;
    for (Index i = 0; i < f.size(); ++i) s += f[i] * sg[i];
    return s * cell;
  }

  // Node (not refined) with the largest scalar curvature; lexicographic tie-break.
  Index argmax_curvature_node() const {
    const GridField& S = scalar_curvature_field();
    Index best = 0;
    for (Index i = 1; i < S.size(); ++i)
      if (S[i] > S[best]) best = i;
    return best;
  }

 private:
  ConformalMetric(MetricKind k, int N, double L, const Shape& grid)
      : kind_(k), N_(N), L_(L), grid_(grid) {
    if (N < 1) throw std::invalid_argument("metric: N must be >= 1");
    if (static_cast<int>(grid.size()) != N) throw std::invalid_argument("metric: grid rank != N");
    if (L <= 0) throw std::invalid_argument("metric: L must be positive");
    check_shape(grid);
  }

  double mode_phase(const std::vector<double>& x) const {
    double p = 0;
    for (int d = 0; d < N_; ++d) p += 2.0 * M_PI * mode_[d] * x[d] / L_;
    return p;
  }

  template <class F>
  void for_images(const std::vector<double>& x, F f) const {
    // minimal-image displacement, then image offsets in {-2..2}^N around it
    std::vector<double> base(N_);
    for (int d = 0; d < N_; ++d) base[d] = min_image(x[d] - center_[d], L_);
    std::vector<int> off(N_, -2);
    std::vector<double> dx(N_);
    while (true) {
      double r2 = 0;
      for (int d = 0; d < N_; ++d) {
        dx[d] = base[d] + off[d] * L_;
        r2 += dx[d] * dx[d];
      }
      f(r2, dx);
      int d = N_ - 1;
      while (d >= 0 && ++off[d] > 2) off[d--] = -2;
      if (d < 0) break;
    }
  }

  template <class F>
  const GridField& cache(GridField& slot, F f) const {
    if (slot.size() == 0) {
      slot = GridField(grid_);
      Index total = shape_size(grid_);
      for (Index i = 0; i < total; ++i) slot[i] = f(node_point(i));
    }
    return slot;
  }

  MetricKind kind_;
  int N_;
  double L_;
  Shape grid_;
  double value_ = 0.0;      // constant value / cosine amplitude / bump amplitude
  double sharpness_ = 0.0;  // bump only
  std::vector<int> mode_;   // cosine only
  std::vector<double> center_;

  mutable GridField psi_f_, sqrtg_f_, em2_f_, enm2_f_, scal_f_;
  mutable std::vector<GridField> gradpsi_f_;
};

}  // namespace spikelab
