// Independent shooting solver for the radial system on R^3, used only as a
// test oracle against the Newton boundary-value solver.
//
//   -U'' - (2/r) U' + U = V^q,   -V'' - (2/r) V' + V = U^p,   U,V -> 0.
//
// Substituting w = rU, z = rV removes the friction term exactly:
//
//   w'' = w - r (z/r)^q,   z'' = z - r (w/r)^p.
//
// Nested bisection: for a trial center value a = U(0), the inner loop tunes
// b = V(0) by watching U. A larger b feeds more source into w'' = w - r V^q,
// pulling U down until it crosses zero (b too large); too little source lets
// the growing mode e^{+r} carry U back up (b too small). Pure decay sits on
// the separatrix where w' + w = 0 at the far end. The outer loop applies the
// mirrored classification to V at the inner solution.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "spikelab/grid.hpp"

namespace shooting {

struct ShotResult {
  bool crossed = false;   // profile hit zero before r_far
  double sep = 0;         // w' + w (resp. z' + z) at r_far; >0 means growing mode
};

struct ShootingConfig {
  double p = 3, q = 3;
  double r0 = 1e-3;
  double h = 2e-3;
  double r_far = 14.0;
  double a_lo = 0.8, a_hi = 12.0;
  double b_lo = 0.3, b_hi = 12.0;
  double tol_outer = 1e-9;
  double tol_inner = 1e-11;
  int scan = 28;
};

namespace detail {

struct State {
  double w, wp, z, zp;
};

inline State rhs(const ShootingConfig& c, double r, const State& s) {
  double U = s.w / r, V = s.z / r;
  State d;
  d.w = s.wp;
  d.z = s.zp;
  d.wp = s.w - r * spikelab::sgn_pow(V, c.q);
  d.zp = s.z - r * spikelab::sgn_pow(U, c.p);
  return d;
}

// Integrate from the series start; report the event for U (watch_u) or V.
inline ShotResult integrate(const ShootingConfig& c, double a, double b, bool watch_u) {
  double r = c.r0;
  double cu = (a - spikelab::sgn_pow(b, c.q)) / 6.0;
  double cv = (b - spikelab::sgn_pow(a, c.p)) / 6.0;
  State s;
  s.w = r * (a + cu * r * r);
  s.wp = a + 3.0 * cu * r * r;
  s.z = r * (b + cv * r * r);
  s.zp = b + 3.0 * cv * r * r;
  ShotResult res;
  while (r < c.r_far) {
    double h = std::min(c.h, c.r_far - r);
    State k1 = rhs(c, r, s);
    State s2{s.w + 0.5 * h * k1.w, s.wp + 0.5 * h * k1.wp, s.z + 0.5 * h * k1.z, s.zp + 0.5 * h * k1.zp};
    State k2 = rhs(c, r + 0.5 * h, s2);
    State s3{s.w + 0.5 * h * k2.w, s.wp + 0.5 * h * k2.wp, s.z + 0.5 * h * k2.z, s.zp + 0.5 * h * k2.zp};
    State k3 = rhs(c, r + 0.5 * h, s3);
    State s4{s.w + h * k3.w, s.wp + h * k3.wp, s.z + h * k3.z, s.zp + h * k3.zp};
    State k4 = rhs(c, r + h, s4);
    s.w += h / 6.0 * (k1.w + 2 * k2.w + 2 * k3.w + k4.w);
    s.wp += h / 6.0 * (k1.wp + 2 * k2.wp + 2 * k3.wp + k4.wp);
    s.z += h / 6.0 * (k1.z + 2 * k2.z + 2 * k3.z + k4.z);
    s.zp += h / 6.0 * (k1.zp + 2 * k2.zp + 2 * k3.zp + k4.zp);
    r += h;
    double watched = watch_u ? s.w : s.z;
    if (watched < 0) {
      res.crossed = true;
      return res;
    }
  }
  res.sep = watch_u ? (s.wp + s.w) : (s.zp + s.z);
  return res;
}

// true  -> the tuned value is too large (overshoot: profile crossed zero)
// false -> too small (growing mode carries it back up)
inline bool too_big(const ShotResult& r) { return r.crossed || r.sep < 0; }

// The classification is monotone: small values undershoot, large overshoot.
// Walk the interval to bracket the flip, then bisect.
template <typename Classify>
double bisect(double lo, double hi, double tol, int scan, Classify&& big) {
  if (big(lo)) throw std::runtime_error("shooting: lower end already overshoots");
  double prev = lo, top = hi;
  bool found = false;
  for (int i = 1; i <= scan; ++i) {
    double t = lo + (hi - lo) * i / scan;
    if (big(t)) {
      lo = prev;
      top = t;
      found = true;
      break;
    }
    prev = t;
  }
  if (!found) throw std::runtime_error("shooting: no bracket in scan interval");
  hi = top;
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    if (big(mid))
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Returns the center values {U(0), V(0)} of the decaying solution.
inline std::pair<double, double> center_values(const ShootingConfig& c) {
  auto inner_b = [&](double a) {
    return detail::bisect(c.b_lo, c.b_hi, c.tol_inner, c.scan,
                          [&](double b) { return detail::too_big(detail::integrate(c, a, b, true)); });
  };
  double a_star = detail::bisect(c.a_lo, c.a_hi, c.tol_outer, c.scan, [&](double a) {
    double b = inner_b(a);
    return detail::too_big(detail::integrate(c, a, b, false));
  });
  double b_star = inner_b(a_star);
  return {a_star, b_star};
}

}  // namespace shooting
