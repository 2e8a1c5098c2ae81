// Solves the whole-space radial system for a few exponent pairs and prints
// profile values, decay rates, and the limiting energy constant.

#include <cstdio>

#include "spikelab/entire.hpp"

using namespace spikelab;

static void run(double p, double q, int N) {
  EntireOptions opt;
  opt.R_max = 20.0;
  opt.M = 1200;
  RadialGroundState s = solve_entire_ground_state(ExponentPair(p, q, N), opt);
  std::printf("p=%.1f q=%.1f N=%d: U(0)=%.8f V(0)=%.8f, decay (%.4f, %.4f), C_inf=%.8f\n", p, q, N,
              s.sup_U(), s.sup_V(), s.decay_U.rate, s.decay_V.rate, s.C_inf);
  std::printf("  r:      ");
  for (double r : {0.0, 1.0, 2.0, 4.0, 8.0}) std::printf("%10.3f", r);
  std::printf("\n  U(r):   ");
  auto su = s.spline_U();
  auto sv = s.spline_V();
  for (double r : {0.0, 1.0, 2.0, 4.0, 8.0}) std::printf("%10.6f", s.eval_U(r, su));
  std::printf("\n  V(r):   ");
  for (double r : {0.0, 1.0, 2.0, 4.0, 8.0}) std::printf("%10.6f", s.eval_V(r, sv));
  std::printf("\n\n");
}

int main() {
  run(3, 3, 1);  // closed form sqrt(2)/cosh(r)
  run(3, 3, 3);
  run(2, 3, 3);
  return 0;
}
