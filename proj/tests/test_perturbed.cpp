#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <sstream>

#include "spikelab/perturbed.hpp"
#include "spikelab/transplant.hpp"

using namespace spikelab;
using Catch::Approx;

namespace {

const RadialGroundState& state_for(double p, double q) {
  static std::map<std::pair<double, double>, RadialGroundState> cache;
  auto key = std::make_pair(p, q);
  auto it = cache.find(key);
  if (it == cache.end()) {
    EntireOptions opt;
    opt.R_max = 20.0;
    opt.M = 2000;
    it = cache.emplace(key, solve_entire_ground_state(ExponentPair(p, q, 3), opt)).first;
  }
  return it->second;
}

}  // namespace

TEST_CASE("symmetric exponents keep the two components identical on the torus") {
  double L = 8.0;
  Shape n{32, 32, 32};
  SpectralWorkspace ws(n, L);
  auto m = ConformalMetric::flat(3, L, n);
  ExponentPair e(3, 3, 3);
  double eps = 0.8, R = 3.2;
  std::vector<double> center(3, L / 2.0);
  auto [u0, v0] = transplant_pair(m, state_for(3, 3), eps, center, R);
  auto sol = solve_perturbed(m, ws, e, eps, u0, v0);
  CHECK(sol.residual_norm < 1e-10);
  double worst = 0;
  for (Index i = 0; i < sol.u.size(); ++i) worst = std::max(worst, std::abs(sol.u[i] - sol.v[i]));
  CHECK(worst < 1e-9);

  auto rep = duality_check(m, ws, eps, sol.u, sol.v, e);
  CHECK(rep.energy_gap < 1e-8 * std::abs(rep.energy_J));
  CHECK(rep.gradient_norm < 1e-8 * std::max(1.0, sol.sup_u));
  CHECK(rep.reconstruction_u < 1e-8);
  CHECK(rep.reconstruction_v < 1e-8);
}

TEST_CASE("Newton iteration contracts quadratically near the solution") {
  double L = 8.0;
  Shape n{32, 32, 32};
  SpectralWorkspace ws(n, L);
  auto m = ConformalMetric::flat(3, L, n);
  ExponentPair e(3, 3, 3);
  double eps = 0.8, R = 3.2;
  std::vector<double> center(3, L / 2.0);
  auto [u0, v0] = transplant_pair(m, state_for(3, 3), eps, center, R);
  auto sol = solve_perturbed(m, ws, e, eps, u0, v0);
  std::ostringstream hist;
  for (double r : sol.residual_history) hist << r << " ";
  INFO("residual history: " << hist.str());
  bool seen = false;
  for (std::size_t k = 0; k + 1 < sol.residual_history.size(); ++k) {
    double r0 = sol.residual_history[k], r1 = sol.residual_history[k + 1];
    if (r0 >= 1e-8 && r0 <= 1e-3) {
      CHECK(r1 <= 20.0 * r0 * r0);
      seen = true;
    }
  }
  CHECK(seen);
}

TEST_CASE("argmax refinement localizes a planted off-node peak") {
  double L = 8.0;
  Shape n{32, 32, 32};
  auto m = ConformalMetric::flat(3, L, n);
  double h = m.h();
  std::vector<double> c{L / 2.0 + 0.3 * h, L / 2.0 - 0.2 * h, L / 2.0 + 0.45 * h};
  double sigma = 3.0 * h;
  GridField f(n);
  for (Index i = 0; i < f.size(); ++i)
    f[i] = std::exp(-min_image_dist2(m.node_point(i), c, L) / (2.0 * sigma * sigma));
  auto x = spike_location(m, f);
  for (int d = 0; d < 3; ++d) {
    INFO("axis " << d << " got " << x[d] << " want " << c[d]);
    CHECK(std::abs(min_image(x[d] - c[d], L)) < 0.1 * h);
  }
}

TEST_CASE("asymmetric exponents solve to a positive localized pair") {
  double L = 8.0;
  Shape n{32, 32, 32};
  SpectralWorkspace ws(n, L);
  auto m = ConformalMetric::flat(3, L, n);
  ExponentPair e(2, 3, 3);
  double eps = 0.8, R = 3.2;
  std::vector<double> center(3, L / 2.0);
  const auto& st = state_for(2, 3);
  auto [u0, v0] = transplant_pair(m, st, eps, center, R);
  auto sol = solve_perturbed(m, ws, e, eps, u0, v0);
  CHECK(sol.residual_norm < 1e-10);
  CHECK(fmin_value(sol.u) > 0.0);
  CHECK(fmin_value(sol.v) > 0.0);
  // the discrete spike stays close to the whole-space amplitude at moderate eps
  CHECK(sol.sup_u == Approx(st.sup_U()).epsilon(0.2));
  CHECK(sol.sup_v == Approx(st.sup_V()).epsilon(0.2));
  for (int d = 0; d < 3; ++d) {
    CHECK(std::abs(min_image(sol.p_eps[d] - center[d], L)) < 0.5 * m.h());
    CHECK(std::abs(min_image(sol.q_eps[d] - center[d], L)) < 0.5 * m.h());
  }
}
