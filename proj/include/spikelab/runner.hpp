#pragma once

// Experiment orchestration: ground-state caching, seeded continuation series
// (optionally in parallel across seeds), enabled assertions, and artifact
// emission. Exit policy: 0 all assertions pass, 1 assertion failures,
// 2 configuration errors, 3 solver failures (partial artifacts kept).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "spikelab/config.hpp"
#include "spikelab/dual.hpp"
#include "spikelab/entire.hpp"
#include "spikelab/errors.hpp"
#include "spikelab/io.hpp"
#include "spikelab/metric.hpp"
#include "spikelab/spike.hpp"

namespace spikelab {

inline int worker_count() {
  const char* env = std::getenv("SPIKELAB_WORKERS");
  if (!env) return 1;
  int n = std::atoi(env);
  return n >= 1 ? n : 1;
}

// Ground-state cache: results are keyed by (p, q, N, R_max, M, tol) and
// stored as JSON next to the run directories so every metric experiment with
// the same exponents reuses the same solve.
inline RadialGroundState cached_ground_state(const RunConfig& cfg, std::ostream* log = nullptr) {
  ExponentPair e = cfg.exponents();
  EntireOptions opt;
  opt.R_max = cfg.entire_R_max;
  opt.M = cfg.entire_M;
  opt.tol = cfg.entire_tol;
  std::string key = state_cache_key(e, opt);
  std::uint64_t h = fnv1a(key);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  std::filesystem::path cache_dir = std::filesystem::path(cfg.out_dir) / "cache";
  std::filesystem::path file = cache_dir / ("gs-" + std::string(buf) + ".json");
  if (std::filesystem::exists(file)) {
    std::ifstream in(file);
    nlohmann::json j;
    in >> j;
    if (j.value("cache_key", "") == key) {
      if (log) *log << "ground state: cache hit " << file.string() << "\n";
      return ground_state_from_json(j);
    }
  }
  RadialGroundState s = solve_entire_ground_state(e, opt);
  std::filesystem::create_directories(cache_dir);
  nlohmann::json j = ground_state_to_json(s);
  j["cache_key"] = key;
  write_text_file(file, j.dump(2) + "\n");
  if (log) *log << "ground state: solved and cached " << file.string() << "\n";
  return s;
}

struct SeriesJob {
  std::string label;
  std::vector<double> center;
  ContinuationSeries series;
};

struct RunOutcome {
  int exit_code = 0;
  std::vector<std::string> failures;   // failed assertions
  std::vector<std::string> notes;
  std::filesystem::path run_dir;
};

namespace detail {

inline std::vector<double> opposite_point(const ConformalMetric& m, const std::vector<double>& x) {
  std::vector<double> y(x.size());
  for (std::size_t d = 0; d < x.size(); ++d) {
    y[d] = x[d] + 0.5 * m.L();
    if (y[d] >= m.L()) y[d] -= m.L();
  }
  return y;
}

}  // namespace detail

inline RunOutcome run_experiment(const RunConfig& cfg, std::ostream& log) {
  RunOutcome out;
  ValidationReport vr = validate_config(cfg);
  if (!vr.ok) {
    std::string msg = "invalid configuration";
    for (const auto& m : vr.messages) msg += "\n  " + m;
    throw ConfigError(msg);
  }

  std::string run_id = effective_run_id(cfg);
  std::string cfg_hash = config_hash(cfg);
  out.run_dir = std::filesystem::path(cfg.out_dir) / run_id;
  std::filesystem::create_directories(out.run_dir);
  write_text_file(out.run_dir / "config.canonical", serialize_config(cfg));

  RadialGroundState state = cached_ground_state(cfg, &log);
  log << "C_inf = " << state.C_inf << ", decay rates (" << state.decay_U.rate << ", "
      << state.decay_V.rate << ")\n";

  ConformalMetric metric = cfg.make_metric();
  // warm the lazy caches before any threading
  metric.psi_field();
  metric.sqrt_g_field();
  metric.exp_m2psi_field();
  metric.exp_nm2psi_field();
  metric.scalar_curvature_field();
  metric.grad_psi_fields();

  std::vector<double> p0 = metric.node_point(metric.argmax_curvature_node());

  std::vector<SeriesJob> jobs;
  if (cfg.seeds_mode == "argmax") {
    jobs.push_back({"seed-argmax", p0, {}});
  } else if (cfg.seeds_mode == "argmax_opposite") {
    jobs.push_back({"seed-argmax", p0, {}});
    jobs.push_back({"seed-opposite", detail::opposite_point(metric, p0), {}});
  } else {
    int k = 0;
    for (const auto& pt : cfg.seed_points) jobs.push_back({"seed-" + std::to_string(k++), pt, {}});
  }

  std::vector<double> eps = cfg.epsilons();

  auto run_job = [&](SeriesJob& job, int job_index) {
    SpectralWorkspace ws(metric.grid(), metric.L());
    ContinuationOptions copt;
    copt.cutoff_R = cfg.cutoff();
    copt.solver.tol = cfg.solver_tol;
    copt.solver.max_newton = cfg.max_newton;
    copt.solver.max_krylov = cfg.max_krylov;
    copt.run_decay_check = cfg.check_decay;
    std::ofstream csv(out.run_dir / ("series-" + std::to_string(job_index) + ".csv"),
                      std::ios::binary);
    csv << series_csv_header(metric.dim(), run_id, cfg_hash);
    int entry_index = 0;
    copt.on_entry = [&](const SeriesEntry& en, const PerturbedSolution& sol) {
      csv << series_csv_row(en);
      csv.flush();
      write_fields_binary(out.run_dir / ("series-" + std::to_string(job_index) + "-entry-" +
                                         std::to_string(entry_index) + ".fields"),
                          metric.grid(), metric.L(), sol.eps, sol.u, sol.v);
      ++entry_index;
    };
    job.series = run_continuation(metric, ws, state, eps, job.center, copt);
  };

  int workers = std::min<int>(worker_count(), static_cast<int>(jobs.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) run_job(jobs[i], static_cast<int>(i));
  } else {
    std::vector<std::thread> pool;
    std::size_t next = 0;
    for (int w = 0; w < workers; ++w) pool.emplace_back([&, w]() {
      for (std::size_t i = static_cast<std::size_t>(w); i < jobs.size(); i += static_cast<std::size_t>(workers))
        run_job(jobs[i], static_cast<int>(i));
    });
    for (auto& t : pool) t.join();
    (void)next;
  }

  // ---- per-series artifacts and assertions --------------------------------
  nlohmann::json summary;
  summary["run_id"] = run_id;
  summary["config"] = cfg_hash;
  summary["artifact_version"] = 1;
  summary["C_inf"] = state.C_inf;
  summary["eta_minus"] = eta(state, EtaConvention::Minus);
  summary["eta_plus"] = eta(state, EtaConvention::Plus);
  summary["max_S"] = metric.scalar_curvature(p0);
  summary["p0"] = p0;
  summary["series"] = nlohmann::json::array();

  bool solver_failed = false;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const ContinuationSeries& s = jobs[i].series;
    nlohmann::json js = series_to_json(s);
    js["label"] = jobs[i].label;
    summary["series"].push_back(js);
    write_text_file(out.run_dir / ("series-" + std::to_string(i) + ".json"), js.dump(2) + "\n");
    if (s.aborted) {
      solver_failed = true;
      out.notes.push_back(jobs[i].label + ": aborted at eps=" + csv_num(s.abort_eps) + ": " + s.abort_reason);
    }
  }

  auto fail = [&](const std::string& what) { out.failures.push_back(what); };

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const ContinuationSeries& s = jobs[i].series;
    const std::string& lbl = jobs[i].label;
    if (cfg.check_duality) {
      for (const auto& en : s.entries) {
        if (!(std::abs(en.duality_gap) < cfg.duality_tol * std::abs(en.energy_J)))
          fail(lbl + ": duality gap " + csv_num(en.duality_gap) + " at eps=" + csv_num(en.eps));
        if (!(en.dual_gradient_norm < cfg.duality_tol * std::max(1.0, en.sup_u)))
          fail(lbl + ": dual gradient norm " + csv_num(en.dual_gradient_norm) + " at eps=" + csv_num(en.eps));
      }
    }
    if (cfg.check_decay) {
      for (const auto& en : s.entries) {
        if (!en.decay_available) continue;  // annulus empty on coarse grids
        if (!(en.decay.theta_u > 0) || !(en.decay.theta_v > 0))
          fail(lbl + ": nonpositive decay rate at eps=" + csv_num(en.eps));
        else if (en.decay.residual_u > 0.15 || en.decay.residual_v > 0.15)
          fail(lbl + ": decay fit residual above 0.15 at eps=" + csv_num(en.eps));
      }
      double K = 1.5 * std::max(state.sup_U(), state.sup_V());
      for (const auto& en : s.entries)
        if (en.sup_u > K || en.sup_v > K)
          fail(lbl + ": sup-norm exceeds the uniform bound at eps=" + csv_num(en.eps));
    }
  }

  if (cfg.check_energy_limit && !jobs.empty() && !jobs[0].series.entries.empty()) {
    EnergyCertificate cert = energy_certificate(jobs[0].series, state.C_inf, cfg.energy_limit_tol);
    summary["energy_certificate"] = {{"deviation", cert.deviation},
                                     {"shrinking", cert.shrinking},
                                     {"final_within", cert.final_within}};
    if (!cert.final_within)
      fail("energy limit: final deviation exceeds " + csv_num(cfg.energy_limit_tol) + " of C_inf");
    if (!cert.shrinking) fail("energy limit: deviation is not decreasing in eps");
  }

  if (cfg.check_expansion && !jobs.empty()) {
    try {
      ExpansionFit fit = expansion_fit(jobs[0].series, state, metric.scalar_curvature(p0));
      summary["expansion"] = expansion_to_json(fit);
      write_text_file(out.run_dir / "expansion.json", expansion_to_json(fit).dump(2) + "\n");
      if (metric.constant_psi()) {
        if (!(std::abs(fit.C2) * fit.eps_max * fit.eps_max < 0.02 * std::abs(fit.C0)))
          fail("expansion: flat-metric C2 is distinguishable from 0");
      } else {
        if (fit.matched_convention == EtaMatch::Unmatched)
          fail("expansion: fitted C2 matches neither sign convention");
        if (!(fit.residual < 0.05 * std::abs(fit.C2) * fit.eps_max * fit.eps_max))
          fail("expansion: quadratic-model residual above 5% of the eps^2 term");
      }
    } catch (const InsufficientSpan& e) {
      fail(std::string("expansion: ") + e.what());
    }
  }

  if (cfg.check_concentration) {
    if (jobs.size() < 2) {
      fail("concentration: needs at least two seeded series (seeds.mode=argmax_opposite)");
    } else {
      std::vector<ContinuationSeries> controls;
      for (std::size_t i = 1; i < jobs.size(); ++i) controls.push_back(jobs[i].series);
      ConcentrationReport rep = concentration_check(metric, jobs[0].series, controls, p0);
      summary["concentration"] = {{"dist_to_p0", rep.dist_to_p0},
                                  {"S_trajectory", rep.S_trajectory},
                                  {"distance_monotone", rep.distance_monotone},
                                  {"ends_within_two_cells", rep.ends_within_two_cells},
                                  {"energy_ordered", rep.energy_ordered},
                                  {"curvature_close", rep.curvature_close},
                                  {"final_distance", rep.final_distance},
                                  {"max_S", rep.max_S}};
      // endpoint trend: final distance no larger than the initial one
      if (!rep.dist_to_p0.empty() && rep.dist_to_p0.back() > rep.dist_to_p0.front() + 1e-9 * metric.L())
        fail("concentration: spike distance to argmax S grew along the series");
      if (!rep.ends_within_two_cells) fail("concentration: final spike is not within 2 cells of argmax S");
      if (!rep.energy_ordered) fail("concentration: argmax-seeded series is not energy-minimal");
      if (!metric.constant_psi() && !rep.curvature_close)
        fail("concentration: S(p_eps) not within 2% of max S at the smallest eps");
    }
  }

  summary["failures"] = out.failures;
  summary["notes"] = out.notes;
  write_text_file(out.run_dir / "summary.json", summary.dump(2) + "\n");

  // human-readable summary
  std::ostringstream hs;
  hs << "run " << run_id << " (config " << cfg_hash << ")\n";
  hs << "metric " << metric_kind_name(metric.kind()) << " N=" << metric.dim() << " L=" << metric.L()
     << " grid=" << cfg.grid << "\n";
  hs << "exponents p=" << cfg.p << " q=" << cfg.q << "\n";
  hs << "C_inf=" << state.C_inf << " eta(-)=" << eta(state, EtaConvention::Minus)
     << " eta(+)=" << eta(state, EtaConvention::Plus) << "\n";
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& s = jobs[i].series;
    hs << jobs[i].label << ": " << s.entries.size() << " entries";
    if (s.aborted) hs << " (aborted at eps=" << s.abort_eps << ")";
    hs << "\n";
    for (const auto& en : s.entries)
      hs << "  eps=" << csv_num(en.eps) << " J/eps^N="
         << csv_num(en.energy_J / std::pow(en.eps, metric.dim())) << " sup_u=" << csv_num(en.sup_u)
         << " dist/eps=" << csv_num(en.dist_over_eps) << "\n";
  }
  if (out.failures.empty())
    hs << "all enabled assertions passed\n";
  else {
    hs << "FAILED assertions:\n";
    for (const auto& f : out.failures) hs << "  " << f << "\n";
  }
  write_text_file(out.run_dir / "summary.txt", hs.str());
  log << hs.str();

  if (solver_failed)
    out.exit_code = 3;
  else if (!out.failures.empty())
    out.exit_code = 1;
  else
    out.exit_code = 0;
  return out;
}

}  // namespace spikelab
