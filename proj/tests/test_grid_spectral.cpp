#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "spikelab/grid.hpp"
#include "spikelab/spectral.hpp"

using namespace spikelab;
using Catch::Approx;

namespace {

constexpr double kPi = 3.14159265358979323846;

// random band-limited field: a handful of low Fourier modes
GridField random_trig(const Shape& n, double L, unsigned seed, int kmax = 3) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> amp(-1.0, 1.0);
  std::vector<std::vector<int>> waves;
  if (n.size() == 3) {
    for (int k0 = 0; k0 <= kmax; ++k0)
      for (int k1 = -kmax; k1 <= kmax; ++k1)
        for (int k2 = -kmax; k2 <= kmax; ++k2)
          if (k0 || k1 || k2) waves.push_back({k0, k1, k2});
  } else {
    for (int k0 = 1; k0 <= kmax; ++k0) waves.push_back({k0});
  }
  std::vector<double> coeff(waves.size()), phase(waves.size());
  for (std::size_t i = 0; i < waves.size(); ++i) {
    coeff[i] = amp(rng) / (1.0 + 4.0 * std::sqrt(double(i)));
    phase[i] = kPi * amp(rng);
  }
  GridField f(n, 0.0);
  std::vector<int> idx(n.size());
  for (Index lin = 0; lin < f.size(); ++lin) {
    idx = unravel(n, lin);
    double v = 0;
    for (std::size_t i = 0; i < waves.size(); ++i) {
      double arg = phase[i];
      for (std::size_t d = 0; d < n.size(); ++d) arg += 2.0 * kPi * waves[i][d] * idx[d] / n[d];
      v += coeff[i] * std::cos(arg);
    }
    f[lin] = v;
  }
  return f;
}

}  // namespace

TEST_CASE("shape bookkeeping round-trips") {
  Shape n{8, 12, 10};
  CHECK(shape_size(n) == 960);
  auto s = shape_strides(n);
  CHECK(s == std::vector<Index>{120, 10, 1});
  for (Index lin : {0L, 1L, 119L, 500L, 959L}) {
    auto idx = unravel(n, lin);
    CHECK(ravel(n, idx) == lin);
  }
  CHECK_THROWS_AS(check_shape(Shape{8, 7, 8}), std::invalid_argument);
  CHECK_THROWS_AS(check_shape(Shape{6}), std::invalid_argument);
  CHECK_THROWS_AS(check_shape(Shape{}), std::invalid_argument);
}

TEST_CASE("minimal image distance on the torus") {
  double L = 10.0;
  CHECK(min_image(9.0, L) == Approx(-1.0));
  CHECK(min_image(-9.0, L) == Approx(1.0));
  CHECK(std::abs(min_image(5.0, L)) == Approx(5.0));  // half period maps to +-L/2
  CHECK(min_image_dist2({0.0, 0.0}, {9.0, 1.0}, L) == Approx(2.0));
}

TEST_CASE("spectral derivatives are exact on Fourier modes") {
  Shape n{16, 16, 16};
  double L = 2.5;
  SpectralWorkspace ws(n, L);
  GridField u(n), lap(n), d0(n);
  std::vector<int> idx(3);
  double k0 = 2.0 * kPi / L, k1 = 2.0 * 2.0 * kPi / L;
  for (Index lin = 0; lin < u.size(); ++lin) {
    idx = unravel(n, lin);
    double x = L * idx[0] / n[0], y = L * idx[1] / n[1];
    u[lin] = std::cos(k0 * x) * std::sin(k1 * y);
  }
  ws.laplacian(u, lap);
  ws.derivative(u, 0, d0);
  double worst_lap = 0, worst_d0 = 0;
  for (Index lin = 0; lin < u.size(); ++lin) {
    idx = unravel(n, lin);
    double x = L * idx[0] / n[0], y = L * idx[1] / n[1];
    worst_lap = std::max(worst_lap, std::abs(lap[lin] + (k0 * k0 + k1 * k1) * u[lin]));
    worst_d0 = std::max(worst_d0, std::abs(d0[lin] + k0 * std::sin(k0 * x) * std::sin(k1 * y)));
  }
  CHECK(worst_lap < 1e-11);
  CHECK(worst_d0 < 1e-12);
}

TEST_CASE("gradient/divergence are adjoint and consistent") {
  Shape n{16, 16, 16};
  double L = 3.0;
  SpectralWorkspace ws(n, L);
  GridField u = random_trig(n, L, 11), w = random_trig(n, L, 12);
  std::vector<GridField> gu, gw;
  ws.gradient(u, gu);
  ws.gradient(w, gw);
  GridField div(n);
  ws.divergence(gw, div);

  // sum u * div(grad w) == -sum grad u . grad w  (exact adjointness)
  double lhs = 0, rhs = 0, scale = 0;
  for (Index i = 0; i < u.size(); ++i) {
    lhs += u[i] * div[i];
    for (int d = 0; d < 3; ++d) rhs -= gu[d][i] * gw[d][i];
    scale += std::abs(u[i] * div[i]);
  }
  CHECK(std::abs(lhs - rhs) < 1e-10 * std::max(1.0, scale));

  // divergence of gradient equals laplacian
  GridField lap(n);
  ws.laplacian(w, lap);
  double worst = 0;
  for (Index i = 0; i < w.size(); ++i) worst = std::max(worst, std::abs(div[i] - lap[i]));
  CHECK(worst < 1e-11);

  // lap_and_gradient returns the same pair
  GridField lap2(n);
  std::vector<GridField> gw2;
  ws.lap_and_gradient(w, lap2, gw2);
  for (Index i = 0; i < w.size(); ++i) {
    CHECK(lap2[i] == Approx(lap[i]).margin(1e-12));
    for (int d = 0; d < 3; ++d) CHECK(gw2[d][i] == Approx(gw[d][i]).margin(1e-12));
  }
}

TEST_CASE("constant-coefficient Helmholtz solve/apply round-trip") {
  Shape n{16, 16, 16};
  double L = 2.0;
  SpectralWorkspace ws(n, L);
  GridField u0 = random_trig(n, L, 21);
  GridField f(n), u(n);
  double c0 = 1.7, c2 = 0.05;
  ws.const_helmholtz_apply(u0, c0, c2, f);
  ws.const_helmholtz_solve(f, c0, c2, u);
  double worst = 0;
  for (Index i = 0; i < u.size(); ++i) worst = std::max(worst, std::abs(u[i] - u0[i]));
  CHECK(worst < 1e-12);
}

TEST_CASE("off-grid evaluation reproduces trigonometric polynomials") {
  Shape n{16, 16, 16};
  double L = 2.0 * kPi;
  SpectralWorkspace ws(n, L);
  GridField u(n);
  std::vector<int> idx(3);
  for (Index lin = 0; lin < u.size(); ++lin) {
    idx = unravel(n, lin);
    double x = L * idx[0] / n[0], y = L * idx[1] / n[1], z = L * idx[2] / n[2];
    u[lin] = 0.3 + std::cos(x) * std::cos(2 * y) + 0.5 * std::sin(3 * z - 1.0);
  }
  auto S = ws.full_spectrum(u);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> pos(0.0, L);
  for (int t = 0; t < 12; ++t) {
    std::vector<double> x{pos(rng), pos(rng), pos(rng)};
    double expect = 0.3 + std::cos(x[0]) * std::cos(2 * x[1]) + 0.5 * std::sin(3 * x[2] - 1.0);
    CHECK(ws.point_eval(S, x) == Approx(expect).margin(1e-10));
    // line evaluation through x along each axis agrees with point evaluation
    for (int d = 0; d < 3; ++d) {
      auto C = ws.line_coefficients(S, d, x);
      std::vector<double> y = x;
      y[d] = pos(rng);
      CHECK(ws.line_eval(C, d, y[d]) == Approx(ws.point_eval(S, y)).margin(1e-10));
    }
  }
}

TEST_CASE("helper reductions") {
  GridField f(Shape{8, 8}, 0.0);
  f[3] = -2.5;
  f[10] = 1.5;
  CHECK(linf(f) == Approx(2.5));
  CHECK(fmin_value(f) == Approx(-2.5));
  CHECK(fmax_value(f) == Approx(1.5));
  CHECK(lattice_sum(f) == Approx(-1.0));
  CHECK(sgn_pow(-4.0, 0.5) == Approx(-2.0));
  CHECK(sgn_pow(0.0, 0.5) == 0.0);
  CHECK(sgn_pow(2.0, 3.0) == Approx(8.0));
}
