#pragma once

// Inverse of (-eps^2 Delta_g + id) on the periodic torus. With a constant
// conformal factor the inverse is an exact Fourier multiplier. Otherwise the
// equation is multiplied by sqrt(g) = e^{N psi}, which turns the operator
// into the symmetric divergence form
//     A u = -eps^2 div( e^{(N-2) psi} grad u ) + e^{N psi} u,
// solved by conjugate gradients preconditioned with the constant-coefficient
// inverse at the mean conformal factor. Every solve is verified against the
// plain-form residual before it is returned.

#include <cmath>
#include <vector>

#include "spikelab/errors.hpp"
#include "spikelab/grid.hpp"
#include "spikelab/krylov.hpp"
#include "spikelab/metric.hpp"
#include "spikelab/spectral.hpp"

namespace spikelab {

class HelmholtzSolver {
 public:
  HelmholtzSolver(const ConformalMetric& m, SpectralWorkspace& ws, double eps)
      : m_(&m), ws_(&ws), eps_(eps) {
    if (!(eps > 0)) throw ConfigError("helmholtz: eps must be positive");
    int N = m.dim();
    if (m.constant_psi()) {
      double c = m.psi(std::vector<double>(N, 0.0));
      c0_ = std::exp(N * c);
      c2_ = eps * eps * std::exp((N - 2.0) * c);
    } else {
      double pbar = m.mean_psi();
      c0_ = std::exp(N * pbar);
      c2_ = eps * eps * std::exp((N - 2.0) * pbar);
    }
  }

  double eps() const { return eps_; }

  // plain form: out = -eps^2 Delta_g u + u
  void apply(const GridField& u, GridField& out) const {
    m_->laplace_beltrami_apply(*ws_, u, out);
    for (Index i = 0; i < out.size(); ++i) out[i] = u[i] - eps_ * eps_ * out[i];
  }

  // weighted symmetric form on raw vectors (CG operator)
  void apply_weighted(const std::vector<double>& u, std::vector<double>& out) const {
    const Shape& n = m_->grid();
    GridField uf(n);
    uf.a = u;
    if (m_->constant_psi()) {
      GridField of(n);
      ws_->const_helmholtz_apply(uf, c0_, c2_, of);
      out = std::move(of.a);
      return;
    }
    std::vector<GridField> grad;
    ws_->gradient(uf, grad);
    const GridField& g2 = m_->exp_nm2psi_field();
    for (int d = 0; d < m_->dim(); ++d)
      for (Index i = 0; i < g2.size(); ++i) grad[d][i] *= g2[i];
    GridField div(n);
    ws_->divergence(grad, div);
    const GridField& g0 = m_->sqrt_g_field();
    out.resize(u.size());
    for (Index i = 0; i < div.size(); ++i)
      out[static_cast<std::size_t>(i)] = -eps_ * eps_ * div[i] + g0[i] * u[static_cast<std::size_t>(i)];
  }

  void precondition(const std::vector<double>& r, std::vector<double>& z) const {
    const Shape& n = m_->grid();
    GridField rf(n);
    rf.a = r;
    GridField zf(n);
    ws_->const_helmholtz_solve(rf, c0_, c2_, zf);
    z = std::move(zf.a);
  }

  // Solve (-eps^2 Delta_g + id) u = f; the result is verified to satisfy the
  // plain-form equation to relative residual 1e-11 (L2).
  KrylovStats solve(const GridField& f, GridField& u, double verify_tol = 1e-11) const {
    const Shape& n = m_->grid();
    KrylovStats stats;
    if (m_->constant_psi()) {
      // exact Fourier inverse of e^{N c}(-eps^2 e^{-2c} Lap + id)
      if (u.size() != f.size()) u = GridField(n);
      ws_->const_helmholtz_solve(f, 1.0, c2_ / c0_, u);
      stats.converged = true;
    } else {
      std::vector<double> rhs(static_cast<std::size_t>(f.size()));
      const GridField& g0 = m_->sqrt_g_field();
      for (Index i = 0; i < f.size(); ++i) rhs[static_cast<std::size_t>(i)] = g0[i] * f[i];
      std::vector<double> x;
      if (u.size() == f.size()) x = u.a;  // warm start
      stats = pcg_solve([this](const std::vector<double>& a, std::vector<double>& b) { apply_weighted(a, b); },
                        [this](const std::vector<double>& a, std::vector<double>& b) { precondition(a, b); },
                        rhs, x, 1e-13, 600);
      u = GridField(n);
      u.a = std::move(x);
    }
    // independent plain-form verification
    GridField r(n);
    apply(u, r);
    double num = 0, den = 0;
    for (Index i = 0; i < r.size(); ++i) {
      double d = r[i] - f[i];
      num += d * d;
      den += f[i] * f[i];
    }
    double rel = den > 0 ? std::sqrt(num / den) : std::sqrt(num);
    stats.relative_residual = rel;
    if (rel > verify_tol)
      throw KrylovStall("helmholtz: verified residual " + std::to_string(rel) + " above tolerance");
    return stats;
  }

  double preconditioner_c0() const { return c0_; }
  double preconditioner_c2() const { return c2_; }

 private:
  const ConformalMetric* m_;
  SpectralWorkspace* ws_;
  double eps_;
  double c0_ = 1, c2_ = 0;
};

}  // namespace spikelab
