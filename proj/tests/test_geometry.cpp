#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "spikelab/geodesic.hpp"
#include "spikelab/metric.hpp"
#include "spikelab/spectral.hpp"

using namespace spikelab;
using Catch::Approx;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<ConformalMetric> sample_metrics(const Shape& grid, double L) {
  std::vector<double> c(3, L / 2.0);
  return {
      ConformalMetric::flat(3, L, grid),
      ConformalMetric::constant(3, L, grid, 0.3),
      ConformalMetric::cosine(3, L, grid, 0.05, {1, 1, 1}),
      ConformalMetric::bump(3, L, grid, 0.1, 6.0 / (L * L), c),
  };
}

std::vector<std::vector<double>> sample_points(double L, unsigned seed, int count) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> pos(0.0, L);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < count; ++i) pts.push_back({pos(rng), pos(rng), pos(rng)});
  return pts;
}

// Richardson-extrapolated central difference of f along axis d.
template <typename F>
double fd_deriv(F&& f, std::vector<double> x, int d, double h) {
  auto central = [&](double hh) {
    double save = x[d];
    x[d] = save + hh;
    double fp = f(x);
    x[d] = save - hh;
    double fm = f(x);
    x[d] = save;
    return (fp - fm) / (2.0 * hh);
  };
  double D1 = central(h), D2 = central(h / 2.0);
  return (4.0 * D2 - D1) / 3.0;
}

}  // namespace

TEST_CASE("volume element matches the metric determinant") {
  double L = 2.0 * kPi;
  for (const auto& m : sample_metrics(Shape{16, 16, 16}, L)) {
    for (const auto& x : sample_points(L, 101, 10)) {
      auto g = m.metric_tensor(x);
      Eigen::Map<Eigen::Matrix3d> G(g.data());
      double det = G.determinant();
      CHECK(m.sqrt_g(x) == Approx(std::sqrt(det)).epsilon(1e-12));
    }
  }
}

TEST_CASE("Christoffel symbols agree with finite differences of the metric") {
  double L = 2.0 * kPi;
  double h = L / 128.0;
  for (const auto& m : sample_metrics(Shape{16, 16, 16}, L)) {
    for (const auto& x : sample_points(L, 77, 6)) {
      auto G = m.christoffel(x);
      // symmetry in the two lower slots is structural
      for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            CHECK(G[(k * 3 + i) * 3 + j] == G[(k * 3 + j) * 3 + i]);

      auto gij = [&](const std::vector<double>& y, int i, int j) { return m.metric_tensor(y)[i * 3 + j]; };
      auto ginv = m.metric_tensor(x);
      Eigen::Map<Eigen::Matrix3d> Gm(ginv.data());
      Eigen::Matrix3d Gi = Gm.inverse();
      for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) {
            double v = 0;
            for (int l = 0; l < 3; ++l) {
              double d_i = fd_deriv([&](const std::vector<double>& y) { return gij(y, j, l); }, x, i, h);
              double d_j = fd_deriv([&](const std::vector<double>& y) { return gij(y, i, l); }, x, j, h);
              double d_l = fd_deriv([&](const std::vector<double>& y) { return gij(y, i, j); }, x, l, h);
              v += 0.5 * Gi(k, l) * (d_i + d_j - d_l);
            }
            CHECK(G[(k * 3 + i) * 3 + j] == Approx(v).margin(1e-6));
          }
    }
  }
}

TEST_CASE("scalar curvature vanishes when the conformal factor is constant") {
  double L = 5.0;
  auto flat = ConformalMetric::flat(3, L, Shape{16, 16, 16});
  auto cst = ConformalMetric::constant(3, L, Shape{16, 16, 16}, -0.4);
  for (const auto& x : sample_points(L, 9, 8)) {
    CHECK(std::abs(flat.scalar_curvature(x)) < 1e-12);
    CHECK(std::abs(cst.scalar_curvature(x)) < 1e-12);
  }
}

TEST_CASE("scalar curvature equals the trace of the Ricci tensor") {
  double L = 2.0 * kPi;
  double h = L / 128.0;
  std::vector<double> c(3, L / 2.0);
  std::vector<ConformalMetric> ms = {
      ConformalMetric::bump(3, L, Shape{16, 16, 16}, 0.1, 6.0 / (L * L), c),
      ConformalMetric::cosine(3, L, Shape{16, 16, 16}, 0.04, {1, 0, 1}),
  };
  for (const auto& m : ms) {
    for (const auto& x : sample_points(L, 31, 5)) {
      auto gamma_at = [&](const std::vector<double>& y) { return m.christoffel(y); };
      auto G = gamma_at(x);
      auto gam = [&](const std::vector<double>& v, int k, int i, int j) { return v[(k * 3 + i) * 3 + j]; };
      // Ric_ij = d_k G^k_ij - d_i G^k_kj + G^k_kl G^l_ij - G^k_il G^l_kj
      double S = 0;
      auto ginv = m.metric_tensor(x);
      Eigen::Map<Eigen::Matrix3d> Gm(ginv.data());
      Eigen::Matrix3d Gi = Gm.inverse();
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          double ric = 0;
          for (int k = 0; k < 3; ++k) {
            ric += fd_deriv([&](const std::vector<double>& y) { return gam(gamma_at(y), k, i, j); }, x, k, h);
            ric -= fd_deriv([&](const std::vector<double>& y) { return gam(gamma_at(y), k, k, j); }, x, i, h);
            for (int l = 0; l < 3; ++l)
              ric += gam(G, k, k, l) * gam(G, l, i, j) - gam(G, k, i, l) * gam(G, l, k, j);
          }
          S += Gi(i, j) * ric;
        }
      double expect = m.scalar_curvature(x);
      INFO(metric_kind_name(m.kind()) << " at (" << x[0] << "," << x[1] << "," << x[2] << ")");
      CHECK(S == Approx(expect).epsilon(1e-4).margin(1e-7));
    }
  }
}

TEST_CASE("Laplace-Beltrami on constant-factor metrics") {
  double L = 2.0;
  Shape n{24, 24, 24};
  SpectralWorkspace ws(n, L);
  double cval = 0.25;
  auto cst = ConformalMetric::constant(3, L, n, cval);
  GridField u(n), out(n);
  double k0 = 2.0 * kPi / L;
  std::vector<int> idx(3);
  for (Index lin = 0; lin < u.size(); ++lin) {
    idx = unravel(n, lin);
    u[lin] = std::sin(k0 * L * idx[1] / n[1]);
  }
  cst.laplace_beltrami_apply(ws, u, out);
  double worst = 0;
  for (Index i = 0; i < u.size(); ++i)
    worst = std::max(worst, std::abs(out[i] + std::exp(-2.0 * cval) * k0 * k0 * u[i]));
  CHECK(worst < 1e-11);

  GridField one(n, 1.0);
  cst.laplace_beltrami_apply(ws, one, out);
  CHECK(linf(out) < 1e-12);
}

TEST_CASE("Laplace-Beltrami matches second-order finite differences") {
  double L = 2.0 * kPi;
  std::vector<double> c(3, L / 2.0);
  auto u_fun = [&](const std::vector<double>& x) {
    return std::cos(x[0]) * std::cos(x[1]) + 0.5 * std::sin(x[2]);
  };
  auto fd_lap_g = [&](const ConformalMetric& m, int n_axis) {
    // plain 7-point FD of Delta u + (N-2) grad psi . grad u, times e^{-2 psi},
    // evaluated off the spectral path entirely
    double h = L / n_axis;
    std::vector<double> x{1.1, 2.3, 0.7};
    double lap = 0, adv = 0;
    std::vector<double> gp = m.grad_psi(x);
    for (int d = 0; d < 3; ++d) {
      std::vector<double> xp = x, xm = x;
      xp[d] += h;
      xm[d] -= h;
      lap += (u_fun(xp) - 2.0 * u_fun(x) + u_fun(xm)) / (h * h);
      adv += gp[d] * (u_fun(xp) - u_fun(xm)) / (2.0 * h);
    }
    return std::exp(-2.0 * m.psi(x)) * (lap + 1.0 * adv);
  };
  // spectral reference on a fine grid, evaluated at the same off-node point
  Shape n{64, 64, 64};
  SpectralWorkspace ws(n, L);
  auto m = ConformalMetric::bump(3, L, n, 0.1, 6.0 / (L * L), c);
  GridField u(n), out(n);
  for (Index lin = 0; lin < u.size(); ++lin) u[lin] = u_fun(m.node_point(lin));
  m.laplace_beltrami_apply(ws, u, out);
  auto S = ws.full_spectrum(out);
  double ref = ws.point_eval(S, {1.1, 2.3, 0.7});

  double e1 = std::abs(fd_lap_g(m, 32) - ref);
  double e2 = std::abs(fd_lap_g(m, 64) - ref);
  INFO("fd errors " << e1 << " -> " << e2);
  CHECK(e2 < e1);
  CHECK(e1 / e2 > 3.5);  // second-order halving
}

TEST_CASE("Laplace-Beltrami is symmetric and integrates to zero") {
  double L = 4.0;
  Shape n{32, 32, 32};
  SpectralWorkspace ws(n, L);
  std::vector<double> c(3, L / 2.0);
  auto m = ConformalMetric::bump(3, L, n, 0.12, 6.0 / (L * L), c);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  GridField u(n), v(n), Lu(n), Lv(n);
  for (Index lin = 0; lin < u.size(); ++lin) {
    auto x = m.node_point(lin);
    double s1 = 0, s2 = 0;
    for (int d = 0; d < 3; ++d) {
      s1 += std::cos(2.0 * kPi * x[d] / L + 0.3 * d);
      s2 += std::sin(4.0 * kPi * x[d] / L - 0.1 * d);
    }
    u[lin] = s1 + 0.2 * s1 * s2;
    v[lin] = s2 - 0.5 * s1;
  }
  (void)amp;
  m.laplace_beltrami_apply(ws, u, Lu);
  m.laplace_beltrami_apply(ws, v, Lv);

  // <Delta_g u, v>_g = <u, Delta_g v>_g with the volume weight sqrt(g)
  GridField uLv(n), vLu(n);
  for (Index i = 0; i < u.size(); ++i) {
    uLv[i] = u[i] * Lv[i];
    vLu[i] = v[i] * Lu[i];
  }
  double a = m.integrate(vLu), b = m.integrate(uLv);
  double scale = std::max({1.0, std::abs(a), std::abs(b)});
  CHECK(std::abs(a - b) / scale < 1e-10);

  // divergence theorem: integral of Delta_g u over the closed manifold is 0
  CHECK(std::abs(m.integrate(Lu)) / std::max(1.0, std::abs(m.integrate(u))) < 1e-10);
}

TEST_CASE("geodesic distances: flat and constant factors are exact") {
  double L = 6.0;
  Shape n{48, 48, 48};
  auto flat = ConformalMetric::flat(3, L, n);
  std::vector<double> a{0, 0, 0}, b{L / 2.0, 0, 0};
  double d_flat = geodesic_distance(flat, a, b);
  CHECK(d_flat == Approx(L / 2.0).epsilon(1e-9));

  double cval = 0.3;
  auto cst = ConformalMetric::constant(3, L, n, cval);
  CHECK(geodesic_distance(cst, a, b) == Approx(std::exp(cval) * d_flat).epsilon(1e-9));
}

TEST_CASE("geodesic distances converge under grid refinement") {
  double L = 6.0;
  std::vector<double> c(3, L / 2.0);
  std::vector<double> a{0.5, 0.5, 0.5}, b{L / 2.0 + 0.8, L / 2.0, L / 2.0 - 0.4};
  auto coarse = ConformalMetric::bump(3, L, Shape{40, 40, 40}, 0.1, 6.0 / (L * L), c);
  auto fine = ConformalMetric::bump(3, L, Shape{80, 80, 80}, 0.1, 6.0 / (L * L), c);
  double dc = geodesic_distance(coarse, a, b);
  double df = geodesic_distance(fine, a, b);
  INFO("coarse " << dc << " fine " << df);
  CHECK(std::abs(dc - df) / df < 0.02);
}

TEST_CASE("geodesic distances are symmetric and satisfy the triangle inequality") {
  double L = 6.0;
  Shape n{40, 40, 40};
  std::vector<double> c(3, L / 2.0);
  auto m = ConformalMetric::bump(3, L, n, 0.1, 6.0 / (L * L), c);
  auto pts = sample_points(L, 55, 6);
  for (int t = 0; t + 2 < static_cast<int>(pts.size()); t += 3) {
    const auto &A = pts[t], &B = pts[t + 1], &C = pts[t + 2];
    double ab = geodesic_distance(m, A, B);
    double ba = geodesic_distance(m, B, A);
    double bc = geodesic_distance(m, B, C);
    double ac = geodesic_distance(m, A, C);
    CHECK(ab == Approx(ba).epsilon(0.02));
    CHECK(ac <= ab + bc + 0.02 * (ab + bc));
  }
}
