#pragma once

// Damped Newton solver for the coupled system on the torus:
//   -eps^2 Delta_g u + u = v^q,   -eps^2 Delta_g v + v = u^p.
// The linearized step is solved matrix-free with BiCGStab on the
// sqrt(g)-weighted form (diagonal coupling blocks are the symmetric
// divergence-form Helmholtz operator), preconditioned blockwise by the
// constant-coefficient inverse at the mean conformal factor. Inner tolerance
// follows the usual inexact-Newton rule, tightening as the residual falls.

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "spikelab/dual.hpp"
#include "spikelab/errors.hpp"
#include "spikelab/grid.hpp"
#include "spikelab/helmholtz.hpp"
#include "spikelab/krylov.hpp"
#include "spikelab/metric.hpp"
#include "spikelab/spectral.hpp"

namespace spikelab {

struct PerturbedOptions {
  double tol = 1e-10;  // Linf of the plain-form residual
  int max_newton = 40;
  int max_krylov = 500;
  bool require_positive = true;
};

struct PerturbedSolution {
  GridField u, v;
  double eps = 0;
  double residual_norm = 0;
  int newton_iterations = 0;
  std::vector<double> residual_history;
  double energy_J = 0, energy_I = 0;
  double duality_gap = 0;
  double dual_gradient_norm = 0;
  double sup_u = 0, sup_v = 0;
  std::vector<double> p_eps, q_eps;  // refined maxima of u and v
};

// Grid argmax refined per axis by quadratic interpolation through the
// periodic neighbors; ties broken toward the lowest linear index.
inline std::vector<double> spike_location(const ConformalMetric& m, const GridField& f) {
  Index best = 0;
  for (Index i = 1; i < f.size(); ++i)
    if (f[i] > f[best]) best = i;
  std::vector<int> idx = unravel(m.grid(), best);
  std::vector<double> x(m.dim());
  for (int d = 0; d < m.dim(); ++d) {
    std::vector<int> lo = idx, hi = idx;
    lo[d] = wrap_index(idx[d] - 1, m.grid()[d]);
    hi[d] = wrap_index(idx[d] + 1, m.grid()[d]);
    double fm = f[ravel(m.grid(), lo)], f0 = f[best], fp = f[ravel(m.grid(), hi)];
    double denom = fm - 2.0 * f0 + fp;
    double delta = (denom < 0) ? 0.5 * (fm - fp) / denom : 0.0;
    delta = std::clamp(delta, -0.5, 0.5);
    double hd = m.h(d);
    double xd = idx[d] * hd + delta * hd;
    if (xd < 0) xd += m.L();
    if (xd >= m.L()) xd -= m.L();
    x[d] = xd;
  }
  return x;
}

namespace detail {

struct PerturbedNewton {
  const ConformalMetric& m;
  SpectralWorkspace& ws;
  const ExponentPair& e;
  const HelmholtzSolver& T;
  Index n;

  // plain-form residual
  void residual(const GridField& u, const GridField& v, GridField& F1, GridField& F2) const {
    T.apply(u, F1);
    T.apply(v, F2);
    for (Index i = 0; i < n; ++i) {
      F1[i] -= sgn_pow(v[i], e.q);
      F2[i] -= sgn_pow(u[i], e.p);
    }
  }

  // weighted coupled Jacobian on [du; dv]
  void jacobian(const GridField& u, const GridField& v, const std::vector<double>& x,
                std::vector<double>& y) const {
    std::size_t ns = static_cast<std::size_t>(n);
    std::vector<double> du(x.begin(), x.begin() + ns), dv(x.begin() + ns, x.end());
    std::vector<double> Au, Av;
    T.apply_weighted(du, Au);
    T.apply_weighted(dv, Av);
    const GridField& g0 = m.sqrt_g_field();
    y.resize(2 * ns);
    for (Index i = 0; i < n; ++i) {
      std::size_t ii = static_cast<std::size_t>(i);
      double cu = e.q * std::pow(std::abs(v[i]), e.q - 1.0);
      double cv = e.p * std::pow(std::abs(u[i]), e.p - 1.0);
      y[ii] = Au[ii] - g0[i] * cu * dv[ii];
      y[ns + ii] = Av[ii] - g0[i] * cv * du[ii];
    }
  }

  void precondition(const std::vector<double>& r, std::vector<double>& z) const {
    std::size_t ns = static_cast<std::size_t>(n);
    std::vector<double> r1(r.begin(), r.begin() + ns), r2(r.begin() + ns, r.end());
    std::vector<double> z1, z2;
    T.precondition(r1, z1);
    T.precondition(r2, z2);
    z.resize(2 * ns);
    std::copy(z1.begin(), z1.end(), z.begin());
    std::copy(z2.begin(), z2.end(), z.begin() + ns);
  }
};

}  // namespace detail

inline PerturbedSolution solve_perturbed(const ConformalMetric& m, SpectralWorkspace& ws,
                                         const ExponentPair& e, double eps, GridField u, GridField v,
                                         const PerturbedOptions& opt = {}) {
  if (u.size() != shape_size(m.grid()) || v.size() != u.size())
    throw ConfigError("perturbed: initial fields do not match the metric grid");
  HelmholtzSolver T(m, ws, eps);
  Index n = u.size();
  detail::PerturbedNewton nt{m, ws, e, T, n};

  GridField F1(m.grid()), F2(m.grid());
  nt.residual(u, v, F1, F2);
  double res = std::max(linf(F1), linf(F2));
  std::vector<double> history{res};

  const GridField& g0 = m.sqrt_g_field();
  std::size_t ns = static_cast<std::size_t>(n);
  GridField Un(m.grid()), Vn(m.grid()), F1n(m.grid()), F2n(m.grid());

  int it = 0;
  for (; it < opt.max_newton && res >= opt.tol; ++it) {
    std::vector<double> rhs(2 * ns);
    for (Index i = 0; i < n; ++i) {
      rhs[static_cast<std::size_t>(i)] = -g0[i] * F1[i];
      rhs[ns + static_cast<std::size_t>(i)] = -g0[i] * F2[i];
    }
    double eta = std::clamp(0.01 * res, 1e-11, 1e-2);
    std::vector<double> d;
    KrylovStats ks = bicgstab_solve(
        [&](const std::vector<double>& x, std::vector<double>& y) { nt.jacobian(u, v, x, y); },
        [&](const std::vector<double>& x, std::vector<double>& y) { nt.precondition(x, y); }, rhs, d,
        eta, opt.max_krylov);
    if (!ks.converged && ks.relative_residual > 0.5)
      throw KrylovStall("perturbed: linearized step made no progress");

    double sup = std::max({1.0, linf(u), linf(v)});
    double lambda = 1.0;
    bool accepted = false;
    while (lambda >= std::pow(2.0, -20)) {
      for (Index i = 0; i < n; ++i) {
        Un[i] = u[i] + lambda * d[static_cast<std::size_t>(i)];
        Vn[i] = v[i] + lambda * d[ns + static_cast<std::size_t>(i)];
      }
      // Allow small negative excursions along the way: Krylov directions ring
      // slightly where the seed's tails are cut off, and at marginal
      // resolution even the converged state dips a little below zero.
      double mn = std::min(fmin_value(Un), fmin_value(Vn));
      if (opt.require_positive && mn < -1e-3 * sup) {
        lambda *= 0.5;
        continue;
      }
      nt.residual(Un, Vn, F1n, F2n);
      double rn = std::max(linf(F1n), linf(F2n));
      if (rn <= (1.0 - 0.25 * lambda) * res || rn < opt.tol) {
        u.a.swap(Un.a);
        v.a.swap(Vn.a);
        F1.a.swap(F1n.a);
        F2.a.swap(F2n.a);
        res = rn;
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) throw NonConvergence("perturbed: line search stalled at residual " + std::to_string(res));
    history.push_back(res);
  }
  if (res >= opt.tol) throw NonConvergence("perturbed: Newton cap reached at residual " + std::to_string(res));

  if (opt.require_positive) {
    // Strict positivity up to spectral tail ringing; anything below one
    // percent of the peak means the iteration left the positive branch.
    double floor = -1e-2 * std::max({1.0, fmax_value(u), fmax_value(v)});
    if (!(fmin_value(u) > floor) || !(fmin_value(v) > floor))
      throw PositivityLost("perturbed: converged pair left the positive branch");
  }

  PerturbedSolution sol;
  sol.eps = eps;
  sol.residual_norm = res;
  sol.newton_iterations = it;
  sol.residual_history = std::move(history);
  sol.sup_u = fmax_value(u);
  sol.sup_v = fmax_value(v);
  sol.p_eps = spike_location(m, u);
  sol.q_eps = spike_location(m, v);
  DualityReport rep = duality_check(m, ws, eps, u, v, e);
  sol.energy_I = rep.energy_I;
  sol.energy_J = rep.energy_J;
  sol.duality_gap = rep.energy_gap;
  sol.dual_gradient_norm = rep.gradient_norm;
  sol.u = std::move(u);
  sol.v = std::move(v);
  return sol;
}

}  // namespace spikelab
