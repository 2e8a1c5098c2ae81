#pragma once

// Artifact writers: per-series CSV, compact binary field dumps, and JSON
// summaries. All floating-point text uses shortest round-trip formatting so
// reruns with identical configs produce byte-identical files.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spikelab/errors.hpp"
#include "spikelab/grid.hpp"
#include "spikelab/spike.hpp"

namespace spikelab {

inline std::string csv_num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("io: cannot write " + path.string());
  out << text;
}

inline std::string series_csv_header(int N, const std::string& run_id, const std::string& cfg_hash) {
  std::string s;
  s += "# run_id=" + run_id + "\n";
  s += "# config=" + cfg_hash + "\n";
  s += "# artifact_version=1\n";
  s += "eps,energy_J,energy_I,sup_u,sup_v";
  for (int d = 0; d < N; ++d) s += ",p_eps_" + std::to_string(d);
  for (int d = 0; d < N; ++d) s += ",q_eps_" + std::to_string(d);
  s += ",dist_over_eps,S_at_p_eps,theta_u,theta_v\n";
  return s;
}

inline std::string series_csv_row(const SeriesEntry& en) {
  std::string s = csv_num(en.eps);
  s += "," + csv_num(en.energy_J);
  s += "," + csv_num(en.energy_I);
  s += "," + csv_num(en.sup_u);
  s += "," + csv_num(en.sup_v);
  for (double x : en.p_eps) s += "," + csv_num(x);
  for (double x : en.q_eps) s += "," + csv_num(x);
  s += "," + csv_num(en.dist_over_eps);
  s += "," + csv_num(en.S_at_p_eps);
  if (en.decay_available) {
    s += "," + csv_num(en.decay.theta_u);
    s += "," + csv_num(en.decay.theta_v);
  } else {
    s += ",nan,nan";
  }
  return s + "\n";
}

// Binary pair dump. Layout (little-endian):
//   u32 magic 0x53504B46 ("SPKF"), u32 version = 1,
//   i32 N, i32 shape[N], f64 L, f64 eps,
//   f64 u[prod(shape)] row-major, f64 v[prod(shape)].
inline void write_fields_binary(const std::filesystem::path& path, const Shape& shape, double L,
                                double eps, const GridField& u, const GridField& v) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("io: cannot write " + path.string());
  std::uint32_t magic = 0x53504B46u, version = 1;
  std::int32_t N = static_cast<std::int32_t>(shape.size());
  out.write(reinterpret_cast<const char*>(&magic), 4);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&N), 4);
  for (int d : shape) {
    std::int32_t v32 = d;
    out.write(reinterpret_cast<const char*>(&v32), 4);
  }
  out.write(reinterpret_cast<const char*>(&L), 8);
  out.write(reinterpret_cast<const char*>(&eps), 8);
  out.write(reinterpret_cast<const char*>(u.data()), static_cast<std::streamsize>(sizeof(double)) * u.size());
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(sizeof(double)) * v.size());
}

struct BinaryFields {
  Shape shape;
  double L = 0, eps = 0;
  GridField u, v;
};

inline BinaryFields read_fields_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("io: cannot read " + path.string());
  std::uint32_t magic = 0, version = 0;
  std::int32_t N = 0;
  in.read(reinterpret_cast<char*>(&magic), 4);
  in.read(reinterpret_cast<char*>(&version), 4);
  if (magic != 0x53504B46u || version != 1) throw ConfigError("io: bad field dump header");
  in.read(reinterpret_cast<char*>(&N), 4);
  BinaryFields b;
  b.shape.resize(N);
  for (int d = 0; d < N; ++d) {
    std::int32_t v32 = 0;
    in.read(reinterpret_cast<char*>(&v32), 4);
    b.shape[d] = v32;
  }
  in.read(reinterpret_cast<char*>(&b.L), 8);
  in.read(reinterpret_cast<char*>(&b.eps), 8);
  b.u = GridField(b.shape);
  b.v = GridField(b.shape);
  in.read(reinterpret_cast<char*>(b.u.data()), static_cast<std::streamsize>(sizeof(double)) * b.u.size());
  in.read(reinterpret_cast<char*>(b.v.data()), static_cast<std::streamsize>(sizeof(double)) * b.v.size());
  if (!in) throw ConfigError("io: truncated field dump " + path.string());
  return b;
}

inline nlohmann::json series_to_json(const ContinuationSeries& s) {
  nlohmann::json j;
  j["p"] = s.exponents.p;
  j["q"] = s.exponents.q;
  j["N"] = s.exponents.N;
  j["seed_center"] = s.seed_center;
  j["cutoff_R"] = s.cutoff_R;
  j["aborted"] = s.aborted;
  if (s.aborted) {
    j["abort_eps"] = s.abort_eps;
    j["abort_reason"] = s.abort_reason;
  }
  j["entries"] = nlohmann::json::array();
  for (const auto& en : s.entries) {
    nlohmann::json e;
    e["eps"] = en.eps;
    e["energy_J"] = en.energy_J;
    e["energy_I"] = en.energy_I;
    e["duality_gap"] = en.duality_gap;
    e["dual_gradient_norm"] = en.dual_gradient_norm;
    e["sup_u"] = en.sup_u;
    e["sup_v"] = en.sup_v;
    e["p_eps"] = en.p_eps;
    e["q_eps"] = en.q_eps;
    e["dist_over_eps"] = en.dist_over_eps;
    e["S_at_p_eps"] = en.S_at_p_eps;
    e["residual_norm"] = en.residual_norm;
    e["newton_iterations"] = en.newton_iterations;
    if (en.decay_available) {
      e["theta_u"] = en.decay.theta_u;
      e["theta_v"] = en.decay.theta_v;
      e["decay_residual_u"] = en.decay.residual_u;
      e["decay_residual_v"] = en.decay.residual_v;
      e["decay_samples"] = en.decay.samples;
    }
    j["entries"].push_back(std::move(e));
  }
  return j;
}

inline nlohmann::json expansion_to_json(const ExpansionFit& f) {
  nlohmann::json j;
  j["C0"] = f.C0;
  j["C2"] = f.C2;
  j["residual"] = f.residual;
  j["predicted_C0"] = f.predicted_C0;
  j["predicted_C2_minus"] = f.predicted_C2_minus;
  j["predicted_C2_plus"] = f.predicted_C2_plus;
  j["rel_err_minus"] = f.rel_err_minus;
  j["rel_err_plus"] = f.rel_err_plus;
  j["matched_convention"] = eta_match_name(f.matched_convention);
  j["eps_min"] = f.eps_min;
  j["eps_max"] = f.eps_max;
  j["points"] = f.points;
  return j;
}

}  // namespace spikelab
