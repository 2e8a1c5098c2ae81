#pragma once

// Geodesic distance on the conformal torus. Constant-psi metrics are exact:
// d = e^psi * (minimal-image chart distance). Otherwise a Dijkstra pass on
// the {-1,0,1}^N neighbor graph (edge weights: chart length times averaged
// e^psi) seeds a fast-sweeping refinement of the upwind eikonal equation
// |grad d| = e^psi, which removes the lattice direction bias of the graph
// metric. Short chart separations (< 3 grid spacings) bypass the grid and
// use a straight-segment Simpson length, so near-coincident points resolve
// below one grid spacing.

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "spikelab/grid.hpp"
#include "spikelab/metric.hpp"

namespace spikelab {

inline double chart_min_image_dist(const ConformalMetric& m, const std::vector<double>& a,
                                   const std::vector<double>& b) {
  return std::sqrt(min_image_dist2(a, b, m.L()));
}

// Simpson along the minimal-image straight chart segment from a to b.
inline double local_segment_length(const ConformalMetric& m, const std::vector<double>& a,
                                   const std::vector<double>& b) {
  int N = m.dim();
  std::vector<double> mid(N);
  double len2 = 0;
  for (int d = 0; d < N; ++d) {
    double dx = min_image(b[d] - a[d], m.L());
    mid[d] = a[d] + 0.5 * dx;
    len2 += dx * dx;
  }
  double len = std::sqrt(len2);
  if (m.constant_psi()) return len * std::exp(m.psi(a));
  return len * (std::exp(m.psi(a)) + 4.0 * std::exp(m.psi(mid)) + std::exp(m.psi(b))) / 6.0;
}

namespace detail {

inline std::vector<std::pair<std::vector<int>, double>> neighbor_offsets(const ConformalMetric& m) {
  int N = m.dim();
  std::vector<std::pair<std::vector<int>, double>> offs;
  std::vector<int> o(N, -1);
  while (true) {
    bool zero = true;
    double len2 = 0;
    for (int d = 0; d < N; ++d) {
      if (o[d] != 0) zero = false;
      double dx = o[d] * m.h(d);
      len2 += dx * dx;
    }
    if (!zero) offs.push_back({o, std::sqrt(len2)});
    int d = N - 1;
    while (d >= 0 && ++o[d] > 1) o[d--] = -1;
    if (d < 0) break;
  }
  return offs;
}

// One fast-sweeping pass; returns the largest decrease. frozen nodes are the
// Dijkstra seeds near the source and are never updated.
inline double fsm_sweep(const ConformalMetric& m, GridField& dist, const std::vector<char>& frozen,
                        int sweep_id) {
  const Shape& n = m.grid();
  int N = m.dim();
  const GridField& psi = m.psi_field();
  Index total = shape_size(n);
  double max_drop = 0;

  std::vector<int> idx(N);
  for (Index c = 0; c < total; ++c) {
    // lexicographic counter, axis d reversed when bit d of sweep_id is set
    Index rem = c;
    for (int d = N - 1; d >= 0; --d) {
      int i = static_cast<int>(rem % n[d]);
      rem /= n[d];
      idx[d] = (sweep_id >> d) & 1 ? n[d] - 1 - i : i;
    }
    Index lin = ravel(n, idx);
    if (frozen[static_cast<std::size_t>(lin)]) continue;

    // gather upwind neighbor minima per axis
    std::vector<std::pair<double, double>> terms;  // (a_d, h_d)
    for (int d = 0; d < N; ++d) {
      std::vector<int> jm = idx, jp = idx;
      jm[d] = wrap_index(idx[d] - 1, n[d]);
      jp[d] = wrap_index(idx[d] + 1, n[d]);
      double a = std::min(dist[ravel(n, jm)], dist[ravel(n, jp)]);
      if (a < std::numeric_limits<double>::max()) terms.push_back({a, m.h(d)});
    }
    if (terms.empty()) continue;
    std::sort(terms.begin(), terms.end());

    double f = std::exp(psi[lin]);
    double t = terms[0].first + terms[0].second * f;
    double A = 0, B = 0, C = 0;
    for (std::size_t j = 0; j < terms.size(); ++j) {
      double a = terms[j].first, hd = terms[j].second;
      if (j > 0 && t <= a) break;
      A += 1.0 / (hd * hd);
      B += a / (hd * hd);
      C += a * a / (hd * hd);
      double disc = B * B - A * (C - f * f);
      if (disc < 0) break;
      double tj = (B + std::sqrt(disc)) / A;
      if (j + 1 == terms.size() || tj <= terms[j + 1].first) {
        t = tj;
        break;
      }
      t = tj;
    }
    double cur = dist[lin];
    if (t < cur) {
      dist[lin] = t;
      double drop = (cur == std::numeric_limits<double>::max()) ? t : cur - t;
      max_drop = std::max(max_drop, drop);
    }
  }
  return max_drop;
}

}  // namespace detail

// Distance field from an arbitrary (possibly off-grid) source point.
inline GridField geodesic_field(const ConformalMetric& m, const std::vector<double>& source) {
  const Shape& n = m.grid();
  int N = m.dim();
  Index total = shape_size(n);
  GridField dist(n, std::numeric_limits<double>::max());

  if (m.constant_psi()) {
    double e = std::exp(m.psi(source));
    for (Index i = 0; i < total; ++i)
      dist[i] = e * chart_min_image_dist(m, m.node_point(i), source);
    return dist;
  }

  const GridField& psi = m.psi_field();
  std::vector<char> frozen(static_cast<std::size_t>(total), 0);
  double hmax = 0;
  for (int d = 0; d < N; ++d) hmax = std::max(hmax, m.h(d));

  using QE = std::pair<double, Index>;
  std::priority_queue<QE, std::vector<QE>, std::greater<QE>> pq;

  // seed every node within 3 spacings of the source with a straight-segment length
  std::vector<int> lo(N), span(N);
  for (int d = 0; d < N; ++d) {
    lo[d] = static_cast<int>(std::floor(source[d] / m.h(d))) - 3;
    span[d] = 7;
  }
  std::vector<int> it(N, 0);
  while (true) {
    std::vector<int> idx(N);
    for (int d = 0; d < N; ++d) idx[d] = wrap_index(lo[d] + it[d], n[d]);
    std::vector<double> x = m.node_point(idx);
    if (chart_min_image_dist(m, x, source) <= 3.0 * hmax + 1e-12) {
      Index lin = ravel(n, idx);
      double v = local_segment_length(m, source, x);
      if (v < dist[lin]) {
        dist[lin] = v;
        frozen[static_cast<std::size_t>(lin)] = 1;
        pq.push({v, lin});
      }
    }
    int d = N - 1;
    while (d >= 0 && ++it[d] >= span[d]) it[d--] = 0;
    if (d < 0) break;
  }
  if (pq.empty()) throw std::runtime_error("geodesic: no seed nodes");

  auto offs = detail::neighbor_offsets(m);
  std::vector<char> done(static_cast<std::size_t>(total), 0);
  while (!pq.empty()) {
    auto [dv, v] = pq.top();
    pq.pop();
    if (done[static_cast<std::size_t>(v)]) continue;
    done[static_cast<std::size_t>(v)] = 1;
    std::vector<int> iv = unravel(n, v);
    double ev = std::exp(psi[v]);
    for (const auto& [o, len] : offs) {
      std::vector<int> iw(N);
      for (int d = 0; d < N; ++d) iw[d] = wrap_index(iv[d] + o[d], n[d]);
      Index w = ravel(n, iw);
      if (done[static_cast<std::size_t>(w)]) continue;
      double cand = dv + len * 0.5 * (ev + std::exp(psi[w]));
      if (cand < dist[w]) {
        dist[w] = cand;
        pq.push({cand, w});
      }
    }
  }

  // fast-sweeping refinement
  int orders = 1 << N;
  for (int round = 0; round < 10; ++round) {
    double drop = 0;
    for (int s = 0; s < orders; ++s) drop = std::max(drop, detail::fsm_sweep(m, dist, frozen, s));
    if (drop < 1e-10 * m.L()) break;
  }
  return dist;
}

inline double geodesic_distance(const ConformalMetric& m, const std::vector<double>& a,
                                const std::vector<double>& b) {
  if (m.constant_psi()) return std::exp(m.psi(a)) * chart_min_image_dist(m, a, b);
  double hmax = 0;
  for (int d = 0; d < m.dim(); ++d) hmax = std::max(hmax, m.h(d));
  double chart = chart_min_image_dist(m, a, b);
  if (chart <= 3.0 * hmax) return local_segment_length(m, a, b);

  GridField dist = geodesic_field(m, a);
  const Shape& n = m.grid();
  int N = m.dim();
  // endpoint correction: best cell corner around b plus a straight local leg
  std::vector<int> base(N);
  for (int d = 0; d < N; ++d) base[d] = static_cast<int>(std::floor(b[d] / m.h(d)));
  double best = std::numeric_limits<double>::max();
  std::vector<int> c(N, 0);
  while (true) {
    std::vector<int> idx(N);
    for (int d = 0; d < N; ++d) idx[d] = wrap_index(base[d] + c[d], n[d]);
    double v = dist[ravel(n, idx)] + local_segment_length(m, m.node_point(idx), b);
    best = std::min(best, v);
    int d = N - 1;
    while (d >= 0 && ++c[d] > 1) c[d--] = 0;
    if (d < 0) break;
  }
  return best;
}

}  // namespace spikelab
