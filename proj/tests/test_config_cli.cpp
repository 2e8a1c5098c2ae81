#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "spikelab/config.hpp"
#include "spikelab/io.hpp"

using namespace spikelab;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir() {
  fs::path d = fs::temp_directory_path() / "spikelab-cli-test";
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(SPIKELAB_BIN) + " " + args + " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string cli_output(const std::string& args, const fs::path& dir) {
  fs::path tmp = dir / "cli-out.txt";
  std::string cmd = std::string(SPIKELAB_BIN) + " " + args + " > " + tmp.string() + " 2>&1";
  int rc = std::system(cmd.c_str());
  (void)rc;  // output is checked, not the status
  return slurp(tmp);
}

const char* kSmokeConfig = R"(# smoke run
exponents.p = 3
exponents.q = 3
exponents.N = 3
metric.kind = flat
metric.L = 8
metric.grid = 32
eps.list = 0.8, 0.7, 0.6
checks.duality = true
checks.decay = true
run.id = smoke
)";

}  // namespace

TEST_CASE("canonical serialization is a fixed point of parsing") {
  std::string text = R"(
exponents.p = 2.5
exponents.q = 3
exponents.N = 3
metric.kind = bump
metric.L = 6.2831853
metric.grid = 48
metric.amplitude = 0.1
metric.sharpness = 0.152
metric.center = 3.14, 3.14, 3.14
eps.list = 0.5, 0.35, 0.25
seeds.mode = explicit
seeds.points = 3.14, 3.14, 3.14; 0.0, 0.0, 0.0
transplant.R = 2.5
checks.expansion = true
output.dir = /tmp/x
)";
  RunConfig c1 = parse_config_text(text);
  std::string s1 = serialize_config(c1);
  RunConfig c2 = parse_config_text(s1);
  std::string s2 = serialize_config(c2);
  CHECK(s1 == s2);
  CHECK(c2.p == 2.5);
  CHECK(c2.seed_points.size() == 2);
  CHECK(c2.eps_list.size() == 3);
  CHECK(c2.cutoff_R == 2.5);
}

TEST_CASE("malformed configuration text is rejected") {
  CHECK_THROWS_AS(parse_config_text("bogus.key = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("exponents.p = 3\nexponents.p = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("exponents.p = banana\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("exponents.N = 3\nmetric.N = 4\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("just some words\n"), ConfigError);
  CHECK_NOTHROW(parse_config_text("# only a comment\n"));
}

TEST_CASE("config hash ignores the run id but tracks content") {
  RunConfig a = parse_config_text("exponents.p = 3\n");
  RunConfig b = a;
  b.run_id = "zzz";
  CHECK(config_hash(a) == config_hash(b));
  CHECK(effective_run_id(b) == "zzz");
  CHECK(effective_run_id(a).substr(0, 4) == "run-");
  RunConfig c = a;
  c.L = 9.0;
  CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("structural validation separates good and bad exponent pairs") {
  RunConfig ok = parse_config_text("exponents.p = 3\nexponents.q = 3\nexponents.N = 3\n");
  auto r = validate_config(ok);
  CHECK(r.ok);
  CHECK(r.hc_holds);
  CHECK(r.beta_star == Approx(12.0));

  for (const char* bad : {"exponents.p = 3\nexponents.q = 3\nexponents.N = 6\n",
                          "exponents.p = 5\nexponents.q = 5\nexponents.N = 5\n"}) {
    auto rb = validate_config(parse_config_text(bad));
    CHECK(!rb.ok);
    bool cited = false;
    for (const auto& msg : rb.messages)
      if (msg.find("subcriticality") != std::string::npos) cited = true;
    CHECK(cited);
  }

  RunConfig coarse = parse_config_text("metric.grid = 16\nmetric.L = 8\neps.list = 0.3\n");
  auto rc = validate_config(coarse);
  CHECK(!rc.ok);
  CHECK(!rc.nyquist_ok);
}

TEST_CASE("field snapshots round-trip through the binary format") {
  fs::path dir = scratch_dir();
  Shape n{8, 8, 8};
  GridField u(n), v(n);
  for (Index i = 0; i < u.size(); ++i) {
    u[i] = std::sin(0.1 * static_cast<double>(i)) * 1e3;
    v[i] = 1.0 / (1.0 + static_cast<double>(i));
  }
  fs::path f = dir / "x.fields";
  write_fields_binary(f, n, 8.0, 0.45, u, v);
  auto back = read_fields_binary(f);
  CHECK(back.shape == n);
  CHECK(back.L == 8.0);
  CHECK(back.eps == 0.45);
  for (Index i = 0; i < u.size(); ++i) {
    CHECK(back.u[i] == u[i]);  // exact: raw doubles
    CHECK(back.v[i] == v[i]);
  }
}

TEST_CASE("command line: validation verb and exit codes") {
  fs::path dir = scratch_dir();
  fs::path bad = dir / "bad.cfg";
  std::ofstream(bad) << "exponents.p = 5\nexponents.q = 5\nexponents.N = 5\n";
  CHECK(run_cli("validate " + bad.string()) == 2);

  fs::path good = dir / "good.cfg";
  std::ofstream(good) << kSmokeConfig;
  std::string out = cli_output("validate " + good.string(), dir);
  CHECK(run_cli("validate " + good.string()) == 0);
  CHECK(out.find("config") != std::string::npos);
  CHECK(out.find("holds") != std::string::npos);

  CHECK(run_cli("validate " + (dir / "missing.cfg").string()) == 2);
}

TEST_CASE("command line: smoke run, determinism, and reporting") {
  fs::path dir = scratch_dir();
  fs::path cfg = dir / "smoke.cfg";
  {
    std::ofstream o(cfg);
    o << kSmokeConfig;
    o << "output.dir = " << (dir / "out").string() << "\n";
  }
  REQUIRE(run_cli("run " + cfg.string()) == 0);
  fs::path run_dir = dir / "out" / "smoke";
  REQUIRE(fs::exists(run_dir / "summary.json"));
  REQUIRE(fs::exists(run_dir / "series-0.csv"));
  REQUIRE(fs::exists(run_dir / "config.canonical"));

  std::string csv1 = slurp(run_dir / "series-0.csv");
  CHECK(csv1.find("run_id=smoke") != std::string::npos);

  auto sj = nlohmann::json::parse(slurp(run_dir / "summary.json"));
  CHECK(sj["run_id"] == "smoke");
  CHECK(sj["artifact_version"] == 1);
  CHECK(sj["config"].get<std::string>().size() == 16);
  CHECK(sj["series"].size() == 1);
  CHECK(sj["series"][0]["entries"].size() == 3);

  // a fresh identical run reproduces the series byte for byte
  REQUIRE(run_cli("run " + cfg.string()) == 0);
  std::string csv2 = slurp(run_dir / "series-0.csv");
  CHECK(csv1 == csv2);

  std::string rep = cli_output("report " + run_dir.string(), dir);
  CHECK(rep.find("smoke") != std::string::npos);

  // saved field snapshots parse back with the advertised geometry
  auto fields = read_fields_binary(run_dir / "series-0-entry-0.fields");
  CHECK(fields.shape == Shape{32, 32, 32});
  CHECK(fields.eps == 0.8);
}

TEST_CASE("command line: whole-space profile verb") {
  fs::path dir = scratch_dir();
  fs::path cfg = dir / "entire.cfg";
  std::ofstream(cfg) << "exponents.p = 3\nexponents.q = 3\nexponents.N = 3\n";
  std::string out = cli_output("entire " + cfg.string(), dir);
  CHECK(out.find("C_inf") != std::string::npos);
  CHECK(run_cli("entire " + cfg.string()) == 0);
}
