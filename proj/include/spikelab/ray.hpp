#pragma once

// Scalar ray analysis for the dual functional. Along the ray t -> t*w the
// functional reduces to
//   h(t) = p/(p+1) t^{(p+1)/p} a + q/(q+1) t^{(q+1)/q} b - t^2/2 c
// with fractional masses a, b > 0 and cross term c. Then
//   h'(t) = t^{1/p} a + t^{1/q} b - t c,
// and h'(t)/t is strictly decreasing on (0, inf), so h has a unique positive
// maximizer iff c > 0.

#include <cmath>

#include "spikelab/errors.hpp"

namespace spikelab {

inline double ray_value(double t, double a, double b, double c, double p, double q) {
  return p / (p + 1.0) * std::pow(t, (p + 1.0) / p) * a +
         q / (q + 1.0) * std::pow(t, (q + 1.0) / q) * b - 0.5 * t * t * c;
}

inline double ray_slope(double t, double a, double b, double c, double p, double q) {
  return std::pow(t, 1.0 / p) * a + std::pow(t, 1.0 / q) * b - t * c;
}

inline double ray_maximizer(double a, double b, double c, double p, double q) {
  if (!(a > 0) || !(b > 0)) throw NoPositiveMax("ray: fractional masses must be positive");
  if (!(c > 0)) throw NoPositiveMax("ray: cross term is not positive, no positive maximizer");

  // g(t) = h'(t)/t is strictly decreasing with g(0+) = +inf, g(inf) = -c.
  auto g = [&](double t) { return std::pow(t, 1.0 / p - 1.0) * a + std::pow(t, 1.0 / q - 1.0) * b - c; };
  double lo = 1.0, hi = 1.0;
  while (g(hi) > 0) hi *= 2.0;
  while (g(lo) < 0) lo *= 0.5;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (g(mid) > 0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-15 * hi) break;
  }
  double t = 0.5 * (lo + hi);
  // polish with Newton on h'(t) = 0
  for (int it = 0; it < 8; ++it) {
    double f = ray_slope(t, a, b, c, p, q);
    double df = std::pow(t, 1.0 / p - 1.0) * a / p + std::pow(t, 1.0 / q - 1.0) * b / q - c;
    if (df == 0) break;
    double tn = t - f / df;
    if (!(tn > lo * 0.5) || !(tn < hi * 2.0)) break;
    t = tn;
  }
  return t;
}

}  // namespace spikelab
