#pragma once

// Periodic N-dimensional grid container and small vector helpers shared by
// the spectral and solver layers. Fields are stored row-major; axis d has
// n[d] equispaced nodes on [0, L) with spacing h = L / n[d].

#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace spikelab {

using Index = std::int64_t;
using Shape = std::vector<int>;

inline Index shape_size(const Shape& n) {
  Index s = 1;
  for (int d : n) s *= d;
  return s;
}

inline void check_shape(const Shape& n) {
  if (n.empty()) throw std::invalid_argument("grid: empty shape");
  for (int d : n) {
    if (d < 8 || d % 2 != 0)
      throw std::invalid_argument("grid: axis sizes must be even and >= 8");
  }
}

// Row-major strides: last axis is contiguous.
inline std::vector<Index> shape_strides(const Shape& n) {
  std::vector<Index> s(n.size());
  Index acc = 1;
  for (int d = static_cast<int>(n.size()) - 1; d >= 0; --d) {
    s[d] = acc;
    acc *= n[d];
  }
  return s;
}

inline Index ravel(const Shape& n, const std::vector<int>& idx) {
  Index lin = 0;
  for (std::size_t d = 0; d < n.size(); ++d) lin = lin * n[d] + idx[d];
  return lin;
}

inline std::vector<int> unravel(const Shape& n, Index lin) {
  std::vector<int> idx(n.size());
  for (int d = static_cast<int>(n.size()) - 1; d >= 0; --d) {
    idx[d] = static_cast<int>(lin % n[d]);
    lin /= n[d];
  }
  return idx;
}

inline int wrap_index(int i, int n) {
  int r = i % n;
  return r < 0 ? r + n : r;
}

// Minimal-image displacement on the torus [0,L)^N.
inline double min_image(double dx, double L) {
  dx = std::remainder(dx, L);
  return dx;
}

inline double min_image_dist2(const std::vector<double>& a, const std::vector<double>& b, double L) {
  double s = 0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    double dx = min_image(a[d] - b[d], L);
    s += dx * dx;
  }
  return s;
}

struct GridField {
  Shape shape;
  std::vector<double> a;

  GridField() = default;
  GridField(const Shape& n, double fill = 0.0) : shape(n), a(static_cast<std::size_t>(shape_size(n)), fill) {}

  Index size() const { return static_cast<Index>(a.size()); }
  double& operator[](Index i) { return a[static_cast<std::size_t>(i)]; }
  double operator[](Index i) const { return a[static_cast<std::size_t>(i)]; }
  double* data() { return a.data(); }
  const double* data() const { return a.data(); }
};

inline double linf(const GridField& f) {
  double m = 0;
  for (double x : f.a) m = std::max(m, std::abs(x));
  return m;
}

inline double fmin_value(const GridField& f) {
  double m = f.a.empty() ? 0.0 : f.a[0];
  for (double x : f.a) m = std::min(m, x);
  return m;
}

inline double fmax_value(const GridField& f) {
  double m = f.a.empty() ? 0.0 : f.a[0];
  for (double x : f.a) m = std::max(m, x);
  return m;
}

// Plain lattice sum (unweighted); callers multiply by cell volume.
inline double lattice_sum(const GridField& f) {
  double s = 0;
  for (double x : f.a) s += x;
  return s;
}

inline double dot(const std::vector<double>& x, const std::vector<double>& y) {
  assert(x.size() == y.size());
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double nrm2(const std::vector<double>& x) { return std::sqrt(dot(x, x)); }

inline void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline double vec_linf(const std::vector<double>& x) {
  double m = 0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

// Odd-power with sign, continuous through 0: s(x) = sign(x)|x|^p.
inline double sgn_pow(double x, double p) {
  if (x == 0.0) return 0.0;
  return x > 0 ? std::pow(x, p) : -std::pow(-x, p);
}

}  // namespace spikelab
