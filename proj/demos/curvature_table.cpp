// Prints scalar-curvature statistics for the built-in conformal metrics.

#include <cstdio>

#include "spikelab/geodesic.hpp"
#include "spikelab/metric.hpp"

using namespace spikelab;

static void row(const char* name, const ConformalMetric& m) {
  const GridField& S = m.scalar_curvature_field();
  double lo = fmin_value(S), hi = fmax_value(S);
  std::vector<double> p = m.node_point(m.argmax_curvature_node());
  double vol = m.integrate(GridField(m.grid(), 1.0));
  std::printf("%-10s  S in [%+.4f, %+.4f]  argmax=(%.3f, %.3f, %.3f)  vol_g=%.4f\n", name, lo, hi,
              p[0], p[1], p[2], vol);
}

int main() {
  Shape g{48, 48, 48};
  double L = 6.283185307179586;
  std::printf("conformal metrics on a %dx%dx%d torus, L=2*pi\n\n", g[0], g[1], g[2]);
  row("flat", ConformalMetric::flat(3, L, g));
  row("constant", ConformalMetric::constant(3, L, g, 0.3));
  row("cosine", ConformalMetric::cosine(3, L, g, 0.05, {1, 1, 1}));
  row("bump", ConformalMetric::bump(3, L, g, 0.1, 6.0 / (L * L), {L / 2, L / 2, L / 2}));

  ConformalMetric b = ConformalMetric::bump(3, L, g, 0.1, 6.0 / (L * L), {L / 2, L / 2, L / 2});
  std::vector<double> c{L / 2, L / 2, L / 2};
  std::printf("\ngeodesic distances from the bump center:\n");
  for (double t : {0.5, 1.0, 2.0, 3.0}) {
    std::vector<double> x{L / 2 + t, L / 2, L / 2};
    std::printf("  chart offset %.1f: d_g = %.6f\n", t, geodesic_distance(b, c, x));
  }
  return 0;
}
