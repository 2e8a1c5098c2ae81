#pragma once

// Concentration experiments: eps-continuation with warm starts, spike
// tracking, rescaled-profile comparison against the whole-space ground
// state, annulus decay fits, the quadratic energy-expansion fit
// J/eps^N = C0 + C2 eps^2 (with the curvature prediction under both printed
// sign conventions of eta), and the seeded concentration comparison.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "spikelab/entire.hpp"
#include "spikelab/errors.hpp"
#include "spikelab/geodesic.hpp"
#include "spikelab/grid.hpp"
#include "spikelab/metric.hpp"
#include "spikelab/perturbed.hpp"
#include "spikelab/spectral.hpp"
#include "spikelab/transplant.hpp"

namespace spikelab {

struct DecayCheck {
  double theta_u = std::numeric_limits<double>::quiet_NaN();
  double theta_v = std::numeric_limits<double>::quiet_NaN();
  double residual_u = 0, residual_v = 0;
  int samples = 0;
};

// Log-linear fit of the field against d_g(., p_eps)/eps on the annulus
// 3 eps <= d <= min(R/2, L/4).
inline DecayCheck decay_check(const ConformalMetric& m, const PerturbedSolution& sol, double R) {
  GridField dist = geodesic_field(m, sol.p_eps);
  double lo = 3.0 * sol.eps;
  double hi = std::min(0.5 * R, 0.25 * m.L());
  std::vector<double> xs, yu, yv;
  for (Index i = 0; i < dist.size(); ++i) {
    if (dist[i] < lo || dist[i] > hi) continue;
    if (!(sol.u[i] > 0) || !(sol.v[i] > 0)) continue;
    xs.push_back(dist[i] / sol.eps);
    yu.push_back(std::log(sol.u[i]));
    yv.push_back(std::log(sol.v[i]));
  }
  if (xs.size() < 8) throw AnnulusEmpty("decay check: annulus holds fewer than 8 nodes");
  auto fit = [&](const std::vector<double>& ys, double& theta, double& res) {
    double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double inter = (sy - slope * sx) / n;
    theta = -slope;
    res = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
      res = std::max(res, std::abs(ys[i] - (inter + slope * xs[i])));
  };
  DecayCheck c;
  c.samples = static_cast<int>(xs.size());
  fit(yu, c.theta_u, c.residual_u);
  fit(yv, c.theta_v, c.residual_v);
  return c;
}

// ---------------------------------------------------------------------------
struct SeriesEntry {
  double eps = 0;
  double energy_J = 0, energy_I = 0;
  double duality_gap = 0, dual_gradient_norm = 0;
  double sup_u = 0, sup_v = 0;
  std::vector<double> p_eps, q_eps;
  double dist_over_eps = 0;
  double S_at_p_eps = 0;
  DecayCheck decay;
  bool decay_available = false;
  double residual_norm = 0;
  int newton_iterations = 0;
};

struct ContinuationSeries {
  ExponentPair exponents{2.0, 2.0, 1};
  std::vector<double> seed_center;
  double cutoff_R = 0;
  std::vector<SeriesEntry> entries;
  bool aborted = false;
  double abort_eps = 0;
  std::string abort_reason;
  std::shared_ptr<PerturbedSolution> last_solution;  // smallest converged eps
};

struct ContinuationOptions {
  double cutoff_R = 0;  // <= 0: 0.45 L
  PerturbedOptions solver;
  bool run_decay_check = true;
  // called after each converged entry (artifact writing)
  std::function<void(const SeriesEntry&, const PerturbedSolution&)> on_entry;
};

inline SeriesEntry summarize_entry(const ConformalMetric& m, const PerturbedSolution& sol,
                                   double cutoff_R, bool with_decay) {
  SeriesEntry en;
  en.eps = sol.eps;
  en.energy_J = sol.energy_J;
  en.energy_I = sol.energy_I;
  en.duality_gap = sol.duality_gap;
  en.dual_gradient_norm = sol.dual_gradient_norm;
  en.sup_u = sol.sup_u;
  en.sup_v = sol.sup_v;
  en.p_eps = sol.p_eps;
  en.q_eps = sol.q_eps;
  en.dist_over_eps = geodesic_distance(m, sol.p_eps, sol.q_eps) / sol.eps;
  en.S_at_p_eps = m.scalar_curvature(sol.p_eps);
  en.residual_norm = sol.residual_norm;
  en.newton_iterations = sol.newton_iterations;
  if (with_decay) {
    try {
      en.decay = decay_check(m, sol, cutoff_R);
      en.decay_available = true;
    } catch (const AnnulusEmpty&) {
      en.decay_available = false;  // coarse grid / large eps; recorded as NaN
    }
  }
  return en;
}

namespace detail {

// Bisect the eps interval geometrically, warm-starting across the substeps.
// This is the fallback when a direct warm start leaves the Newton basin and
// the target eps is too small for a resolvable fresh transplant.
inline PerturbedSolution substep_continuation(const ConformalMetric& m, SpectralWorkspace& ws,
                                              const ExponentPair& e, const PerturbedSolution& from,
                                              double eps, const PerturbedOptions& opt) {
  PerturbedSolution cur = from;
  double lo = from.eps;
  int failures = 0;
  std::vector<double> pending{eps};
  while (!pending.empty()) {
    double tgt = pending.back();
    try {
      cur = solve_perturbed(m, ws, e, tgt, cur.u, cur.v, opt);
      lo = tgt;
      pending.pop_back();
    } catch (const SolverError&) {
      double mid = std::sqrt(lo * tgt);
      if (++failures > 16 || !(tgt < mid && mid < lo) || lo - tgt < 1e-3 * tgt) throw;
      pending.push_back(mid);
    }
  }
  return cur;
}

}  // namespace detail

// Warm-started continuation: first entry from the ray-normalized transplant,
// later entries from the previous solution. A failed warm start is retried
// from a fresh transplant, then by bisecting the eps step; if everything
// fails the series aborts with the partial results preserved.
inline ContinuationSeries run_continuation(const ConformalMetric& m, SpectralWorkspace& ws,
                                           const RadialGroundState& state,
                                           const std::vector<double>& eps_list,
                                           const std::vector<double>& seed_center,
                                           const ContinuationOptions& opt = {}) {
  if (eps_list.empty()) throw ConfigError("continuation: empty eps list");
  for (std::size_t k = 1; k < eps_list.size(); ++k)
    if (!(eps_list[k] < eps_list[k - 1]))
      throw ConfigError("continuation: eps list must be strictly decreasing");

  ContinuationSeries series;
  series.exponents = state.exponents;
  series.seed_center = seed_center;
  series.cutoff_R = opt.cutoff_R > 0 ? opt.cutoff_R : 0.45 * m.L();

  std::shared_ptr<PerturbedSolution> prev;
  for (double eps : eps_list) {
    PerturbedSolution sol;
    try {
      if (!prev) {
        TransplantResult tr = ray_normalized_transplant(m, ws, state, eps, seed_center, series.cutoff_R);
        sol = solve_perturbed(m, ws, state.exponents, eps, std::move(tr.u), std::move(tr.v), opt.solver);
      } else {
        try {
          sol = solve_perturbed(m, ws, state.exponents, eps, prev->u, prev->v, opt.solver);
        } catch (const SolverError&) {
          try {
            TransplantResult tr =
                ray_normalized_transplant(m, ws, state, eps, seed_center, series.cutoff_R);
            sol = solve_perturbed(m, ws, state.exponents, eps, std::move(tr.u), std::move(tr.v), opt.solver);
          } catch (const SolverError&) {
            sol = detail::substep_continuation(m, ws, state.exponents, *prev, eps, opt.solver);
          }
        }
      }
    } catch (const SolverError& err) {
      series.aborted = true;
      series.abort_eps = eps;
      series.abort_reason = err.what();
      break;
    }
    SeriesEntry en = summarize_entry(m, sol, series.cutoff_R, opt.run_decay_check);
    prev = std::make_shared<PerturbedSolution>(std::move(sol));
    if (opt.on_entry) opt.on_entry(en, *prev);
    series.entries.push_back(std::move(en));
  }
  series.last_solution = prev;
  return series;
}

inline std::vector<std::pair<double, double>> track_maxima(const ContinuationSeries& s) {
  if (s.entries.empty()) throw ConfigError("track_maxima: empty series");
  std::vector<std::pair<double, double>> out;
  for (const auto& en : s.entries) out.push_back({en.eps, en.dist_over_eps});
  return out;
}

// ---------------------------------------------------------------------------
struct ProfileReport {
  double z_max = 0;          // half-width of the sampled window in units of eps
  double max_dev_u = 0;      // max |u(p+eps z e_d) - U(|z|)| over axes/samples
  double max_dev_v = 0;
  double center_u = 0;       // u at the refined maximum
  double center_v = 0;
};

inline ProfileReport rescaled_profile(const ConformalMetric& m, SpectralWorkspace& ws,
                                      const PerturbedSolution& sol, const RadialGroundState& state) {
  check_spike_width(sol.eps, m.h());
  ProfileReport rep;
  rep.z_max = std::min(8.0, 0.45 * m.L() / sol.eps);
  CubicSpline su = state.spline_U();
  CubicSpline sv = state.spline_V();

  SpectralWorkspace::FullSpectrum Su = ws.full_spectrum(sol.u);
  SpectralWorkspace::FullSpectrum Sv = ws.full_spectrum(sol.v);
  rep.center_u = ws.point_eval(Su, sol.p_eps);
  rep.center_v = ws.point_eval(Sv, sol.p_eps);

  const int K = 64;  // samples per side per axis
  for (int d = 0; d < m.dim(); ++d) {
    std::vector<std::complex<double>> Cu = ws.line_coefficients(Su, d, sol.p_eps);
    std::vector<std::complex<double>> Cv = ws.line_coefficients(Sv, d, sol.p_eps);
    for (int k = -K; k <= K; ++k) {
      double z = rep.z_max * k / K;
      double x = sol.p_eps[d] + sol.eps * z;
      double uu = ws.line_eval(Cu, d, x);
      double vv = ws.line_eval(Cv, d, x);
      rep.max_dev_u = std::max(rep.max_dev_u, std::abs(uu - state.eval_U(std::abs(z), su)));
      rep.max_dev_v = std::max(rep.max_dev_v, std::abs(vv - state.eval_V(std::abs(z), sv)));
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
enum class EtaMatch { Minus, Plus, Unmatched };

inline std::string eta_match_name(EtaMatch m) {
  switch (m) {
    case EtaMatch::Minus: return "minus";
    case EtaMatch::Plus: return "plus";
    case EtaMatch::Unmatched: return "unmatched";
  }
  return "?";
}

struct ExpansionFit {
  double C0 = 0, C2 = 0;
  double residual = 0;       // max |y - model| over the fitted points
  double predicted_C0 = 0;   // C_inf
  double predicted_C2_minus = 0, predicted_C2_plus = 0;
  double rel_err_minus = 0, rel_err_plus = 0;
  EtaMatch matched_convention = EtaMatch::Unmatched;
  double eps_min = 0, eps_max = 0;
  int points = 0;
};

// Least squares of energy_J/eps^N = C0 + C2 eps^2 over the series entries;
// predictions C2 = -S(p0) eta / (6N) under both eta sign conventions.
inline ExpansionFit expansion_fit(const ContinuationSeries& s, const RadialGroundState& state,
                                  double S_at_p0) {
  const auto& es = s.entries;
  if (static_cast<int>(es.size()) < 4)
    throw InsufficientSpan("expansion fit: need at least 4 converged entries");
  double emin = es.front().eps, emax = es.front().eps;
  for (const auto& en : es) {
    emin = std::min(emin, en.eps);
    emax = std::max(emax, en.eps);
  }
  if (emax < 4.0 * emin * (1.0 - 1e-12))
    throw InsufficientSpan("expansion fit: eps range must span a factor of 4");

  int N = state.exponents.N;
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& en : es) {
    double x = en.eps * en.eps;
    double y = en.energy_J / std::pow(en.eps, N);
    n += 1;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  ExpansionFit f;
  f.C2 = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.C0 = (sy - f.C2 * sx) / n;
  for (const auto& en : es) {
    double x = en.eps * en.eps;
    double y = en.energy_J / std::pow(en.eps, N);
    f.residual = std::max(f.residual, std::abs(y - (f.C0 + f.C2 * x)));
  }
  f.eps_min = emin;
  f.eps_max = emax;
  f.points = static_cast<int>(es.size());
  f.predicted_C0 = state.C_inf;
  f.predicted_C2_minus = -S_at_p0 * eta(state, EtaConvention::Minus) / (6.0 * N);
  f.predicted_C2_plus = -S_at_p0 * eta(state, EtaConvention::Plus) / (6.0 * N);
  auto rel = [&](double pred) {
    if (std::abs(pred) < 1e-300) return std::abs(f.C2) < 1e-12 ? 0.0 : 1e300;
    return std::abs(f.C2 - pred) / std::abs(pred);
  };
  f.rel_err_minus = rel(f.predicted_C2_minus);
  f.rel_err_plus = rel(f.predicted_C2_plus);
  bool okm = f.rel_err_minus < 0.15, okp = f.rel_err_plus < 0.15;
  if (okm && okp)
    f.matched_convention = f.rel_err_minus <= f.rel_err_plus ? EtaMatch::Minus : EtaMatch::Plus;
  else if (okm)
    f.matched_convention = EtaMatch::Minus;
  else if (okp)
    f.matched_convention = EtaMatch::Plus;
  else
    f.matched_convention = EtaMatch::Unmatched;
  return f;
}

// ---------------------------------------------------------------------------
struct ConcentrationReport {
  std::vector<double> dist_to_p0;   // per entry of the argmax-seeded series
  std::vector<double> S_trajectory;
  bool distance_monotone = false;
  bool ends_within_two_cells = false;
  bool energy_ordered = false;      // argmax-seeded strictly below every control
  bool curvature_close = false;     // S(p_eps) within 2% of max S at smallest eps
  double final_distance = 0;
  double max_S = 0;
};

inline ConcentrationReport concentration_check(const ConformalMetric& m,
                                               const ContinuationSeries& seeded,
                                               const std::vector<ContinuationSeries>& controls,
                                               const std::vector<double>& p0) {
  ConcentrationReport rep;
  rep.max_S = m.scalar_curvature(p0);
  rep.distance_monotone = true;
  for (const auto& en : seeded.entries) {
    rep.dist_to_p0.push_back(geodesic_distance(m, en.p_eps, p0));
    rep.S_trajectory.push_back(en.S_at_p_eps);
  }
  for (std::size_t k = 1; k < rep.dist_to_p0.size(); ++k)
    if (rep.dist_to_p0[k] > rep.dist_to_p0[k - 1] + 1e-9 * m.L()) rep.distance_monotone = false;
  if (!rep.dist_to_p0.empty()) {
    rep.final_distance = rep.dist_to_p0.back();
    rep.ends_within_two_cells = rep.final_distance < 2.0 * m.h();
  }
  rep.energy_ordered = true;
  for (const auto& ctrl : controls) {
    for (const auto& en : seeded.entries) {
      const SeriesEntry* match = nullptr;
      for (const auto& ce : ctrl.entries)
        if (std::abs(ce.eps - en.eps) < 1e-12 * en.eps) match = &ce;
      if (match && !(en.energy_J < match->energy_J)) rep.energy_ordered = false;
    }
  }
  if (!seeded.entries.empty() && rep.max_S != 0.0) {
    double Send = seeded.entries.back().S_at_p_eps;
    rep.curvature_close = std::abs(Send - rep.max_S) <= 0.02 * std::abs(rep.max_S);
  }
  return rep;
}

// Energy certificates: delta(eps) = J/eps^N - C_inf must shrink as eps does,
// ending within tol relative.
struct EnergyCertificate {
  std::vector<double> deviation;  // per entry, signed
  bool shrinking = false;
  bool final_within = false;
};

inline EnergyCertificate energy_certificate(const ContinuationSeries& s, double C_inf,
                                            double tol = 0.02) {
  EnergyCertificate c;
  int N = s.exponents.N;
  for (const auto& en : s.entries)
    c.deviation.push_back(en.energy_J / std::pow(en.eps, N) - C_inf);
  c.shrinking = true;
  for (std::size_t k = 1; k < c.deviation.size(); ++k)
    if (std::abs(c.deviation[k]) > std::abs(c.deviation[k - 1]) + 1e-12 * std::abs(C_inf))
      c.shrinking = false;
  if (!c.deviation.empty())
    c.final_within = std::abs(c.deviation.back()) < tol * std::abs(C_inf);
  return c;
}

}  // namespace spikelab
