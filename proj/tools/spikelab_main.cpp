// spikelab command line. Verbs:
//   validate <config>   parse + report exponent diagnostics, exit 2 if invalid
//   entire <config>     solve (or load cached) whole-space ground state
//   run <config>        full seeded continuation experiment with artifacts
//   report <run-dir>    re-print the human-readable summary of a finished run

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "spikelab/config.hpp"
#include "spikelab/entire.hpp"
#include "spikelab/errors.hpp"
#include "spikelab/exponents.hpp"
#include "spikelab/runner.hpp"

namespace {

int do_validate(const std::string& path) {
  spikelab::RunConfig cfg = spikelab::load_config(path);
  spikelab::ValidationReport r = spikelab::validate_config(cfg);
  std::cout << "config " << spikelab::config_hash(cfg) << " (" << path << ")\n";
  std::cout << "p=" << cfg.p << " q=" << cfg.q << " N=" << cfg.N << "\n";
  std::cout << "alpha=" << r.alpha << " beta=" << r.beta << "\n";
  std::cout << "beta*=" << r.beta_star << " alpha*=" << r.alpha_star << "\n";
  std::cout << "subcriticality (N/(N-2) type): " << (r.hc_holds ? "holds" : "fails") << "\n";
  std::cout << "bootstrap: " << spikelab::bootstrap_tag_name(r.bootstrap_tag);
  if (r.bootstrap_tag != spikelab::BootstrapTag::Unbounded)
    std::cout << " (q_limit=" << r.q_limit << ")";
  std::cout << "\n";
  for (const auto& m : r.messages) std::cout << "note: " << m << "\n";
  if (!r.ok) {
    std::cout << "INVALID\n";
    return 2;
  }
  std::cout << "OK\n";
  return 0;
}

int do_entire(const std::string& path) {
  spikelab::RunConfig cfg = spikelab::load_config(path);
  spikelab::ValidationReport r = spikelab::validate_config(cfg);
  if (!r.ok) {
    for (const auto& m : r.messages) std::cerr << "error: " << m << "\n";
    return 2;
  }
  spikelab::RadialGroundState s = spikelab::cached_ground_state(cfg, &std::cout);
  std::cout << "U(0)=" << s.sup_U() << " V(0)=" << s.sup_V() << "\n";
  std::cout << "residual=" << s.residual_norm << " newton_iterations=" << s.newton_iterations << "\n";
  std::cout << "decay: c_U=" << s.decay_U.rate << " c_V=" << s.decay_V.rate << "\n";
  std::cout << "A0=" << s.A0 << " B0=" << s.B0 << " M2U=" << s.M2U << " M2V=" << s.M2V << "\n";
  std::cout << "C_inf=" << s.C_inf << "\n";
  std::cout << "eta(-)=" << spikelab::eta(s, spikelab::EtaConvention::Minus)
            << " eta(+)=" << spikelab::eta(s, spikelab::EtaConvention::Plus) << "\n";
  return 0;
}

int do_run(const std::string& path) {
  spikelab::RunConfig cfg = spikelab::load_config(path);
  spikelab::RunOutcome out = spikelab::run_experiment(cfg, std::cout);
  return out.exit_code;
}

int do_report(const std::string& dir) {
  std::filesystem::path p = std::filesystem::path(dir) / "summary.txt";
  std::ifstream in(p);
  if (!in) {
    std::cerr << "error: no summary.txt under " << dir << "\n";
    return 2;
  }
  std::cout << in.rdbuf();
  std::filesystem::path js = std::filesystem::path(dir) / "summary.json";
  std::ifstream jin(js);
  if (jin) {
    nlohmann::json j;
    jin >> j;
    if (j.contains("expansion")) {
      const auto& e = j["expansion"];
      std::cout << "expansion fit: C0=" << e["C0"].get<double>() << " C2=" << e["C2"].get<double>()
                << " matched=" << e["matched_convention"].get<std::string>() << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spike concentration laboratory"};
  app.require_subcommand(1);

  std::string cfg_path, run_dir;
  auto* v = app.add_subcommand("validate", "check a config and print exponent diagnostics");
  v->add_option("config", cfg_path, "config file")->required();
  auto* e = app.add_subcommand("entire", "solve the whole-space radial ground state");
  e->add_option("config", cfg_path, "config file")->required();
  auto* r = app.add_subcommand("run", "run the seeded continuation experiment");
  r->add_option("config", cfg_path, "config file")->required();
  auto* rep = app.add_subcommand("report", "print the summary of a finished run");
  rep->add_option("dir", run_dir, "run output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (v->parsed()) return do_validate(cfg_path);
    if (e->parsed()) return do_entire(cfg_path);
    if (r->parsed()) return do_run(cfg_path);
    if (rep->parsed()) return do_report(run_dir);
  } catch (const spikelab::ConfigError& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return 2;
  } catch (const spikelab::SolverError& ex) {
    std::cerr << "solver error: " << ex.what() << "\n";
    return 3;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
