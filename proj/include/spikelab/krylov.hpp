#pragma once

// Matrix-free Krylov solvers on std::vector<double>: preconditioned
// conjugate gradients for SPD operators and preconditioned BiCGStab for the
// unsymmetric coupled linearizations. Operators and preconditioners are
// callables (x, y) -> y = Op x.

#include <cmath>
#include <functional>
#include <vector>

#include "spikelab/errors.hpp"
#include "spikelab/grid.hpp"

namespace spikelab {

using LinearOp = std::function<void(const std::vector<double>&, std::vector<double>&)>;

struct KrylovStats {
  int iterations = 0;
  double relative_residual = 0;
  bool converged = false;
};

inline KrylovStats pcg_solve(const LinearOp& A, const LinearOp& Minv, const std::vector<double>& b,
                             std::vector<double>& x, double rel_tol, int max_iter) {
  std::size_t n = b.size();
  std::vector<double> r(n), z(n), p(n), Ap(n);
  double bnorm = nrm2(b);
  if (bnorm == 0) {
    x.assign(n, 0.0);
    return {0, 0.0, true};
  }
  if (x.size() != n) x.assign(n, 0.0);
  A(x, Ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
  Minv(r, z);
  p = z;
  double rz = dot(r, z);
  double rnorm = nrm2(r);
  int it = 0;
  while (rnorm > rel_tol * bnorm && it < max_iter) {
    A(p, Ap);
    double pAp = dot(p, Ap);
    if (!(pAp > 0)) throw KrylovStall("cg: operator lost positive definiteness");
    double alpha = rz / pAp;
    axpy(alpha, p, x);
    axpy(-alpha, Ap, r);
    Minv(r, z);
    double rz_new = dot(r, z);
    double beta = rz_new / rz;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    rz = rz_new;
    rnorm = nrm2(r);
    ++it;
  }
  return {it, rnorm / bnorm, rnorm <= rel_tol * bnorm};
}

inline KrylovStats bicgstab_solve(const LinearOp& A, const LinearOp& Minv, const std::vector<double>& b,
                                  std::vector<double>& x, double rel_tol, int max_iter) {
  std::size_t n = b.size();
  double bnorm = nrm2(b);
  if (bnorm == 0) {
    x.assign(n, 0.0);
    return {0, 0.0, true};
  }
  if (x.size() != n) x.assign(n, 0.0);
  std::vector<double> r(n), r0(n), p(n, 0.0), v(n, 0.0), s(n), t(n), ph(n), sh(n), tmp(n);
  A(x, tmp);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - tmp[i];
  r0 = r;
  double rho = 1, alpha = 1, omega = 1;
  double rnorm = nrm2(r);
  int it = 0;
  while (rnorm > rel_tol * bnorm && it < max_iter) {
    double rho_new = dot(r0, r);
    if (std::abs(rho_new) < 1e-300) throw KrylovStall("bicgstab: rho breakdown");
    double beta = (rho_new / rho) * (alpha / omega);
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    Minv(p, ph);
    A(ph, v);
    double r0v = dot(r0, v);
    if (std::abs(r0v) < 1e-300) throw KrylovStall("bicgstab: r0.v breakdown");
    alpha = rho_new / r0v;
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    if (nrm2(s) <= rel_tol * bnorm) {
      axpy(alpha, ph, x);
      rnorm = nrm2(s);
      ++it;
      break;
    }
    Minv(s, sh);
    A(sh, t);
    double tt = dot(t, t);
    if (tt == 0) throw KrylovStall("bicgstab: t.t breakdown");
    omega = dot(t, s) / tt;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * ph[i] + omega * sh[i];
      r[i] = s[i] - omega * t[i];
    }
    rho = rho_new;
    rnorm = nrm2(r);
    ++it;
  }
  return {it, rnorm / bnorm, rnorm <= rel_tol * bnorm};
}

}  // namespace spikelab
