#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpns/dof_map.hpp"
#include "mpns/material.hpp"
#include "mpns/mesh.hpp"
#include "mpns/mms.hpp"
#include "mpns/pump.hpp"
#include "mpns/schemes.hpp"
#include "mpns/sparse.hpp"

namespace mpns {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Everything a run needs, fed from a flat key=value file and/or CLI flags
/// (flags win). Module invariants are re-validated at parse time.
struct RunConfig {
  std::string subcommand = "run";  // converge | pump | run
  std::string problem = "mms";     // run subcommand: mms | pump

  SchemeKind scheme = SchemeKind::FirstOrder;
  MaterialParams params{};

  // single-run mesh/time
  int nx = 32, ny = 32;
  double length_x = 1.0, length_y = 1.0;
  double tau = 0.02;
  double final_time = 1.0;

  // converge
  StudyKind kind = StudyKind::H1Pressure;
  int level_lo = 2, level_hi = 5;
  bool assert_orders = false;

  // pump
  int profile = 0;  // 0 = all
  double amplitude = 1.0;
  double channel_length = 1.0;
  int cells_per_unit = 40;

  std::string out_dir = ".";
  bool vtk = false;

  void validate() const {
    params.validate();
    MeshConfig mc{nx, ny, length_x, length_y};
    mc.validate();
    if (!(tau > 0.0)) throw ConfigError("tau must be positive");
    if (!(final_time > 0.0)) throw ConfigError("T must be positive");
    if (level_lo < 2 || level_hi > 6 || level_lo > level_hi)
      throw ConfigError("levels must satisfy 2 <= lo <= hi <= 6");
    if (profile < 0 || profile > 7) throw ConfigError("profile must be 1..7 or 0 (all)");
    if (!(amplitude >= 0.0)) throw ConfigError("amplitude must be >= 0");
    if (!(channel_length >= 1.0)) throw ConfigError("L must be >= 1");
    if (cells_per_unit < 1) throw ConfigError("n must be >= 1");
    if (scheme != SchemeKind::FirstOrder && scheme != SchemeKind::Bdf2)
      throw ConfigError("scheme must be first_order or bdf2");
  }

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline double parse_double(const std::string& key, const std::string& v, int line) {
  size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size())
    throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                      "' expects a number, got '" + v + "'");
  return out;
}

inline int parse_int(const std::string& key, const std::string& v, int line) {
  size_t used = 0;
  int out = 0;
  try {
    out = std::stoi(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size())
    throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                      "' expects an integer, got '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v, int line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                    "' expects true/false, got '" + v + "'");
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Applies one key=value pair onto the config. `line` is for error messages.
inline void apply_config_key(RunConfig& cfg, const std::string& key, const std::string& value,
                             int line = 0) {
  using detail::parse_bool;
  using detail::parse_double;
  using detail::parse_int;
  if (key == "problem") {
    if (value != "mms" && value != "pump")
      throw ConfigError("line " + std::to_string(line) + ": problem must be mms or pump");
    cfg.problem = value;
  } else if (key == "scheme") {
    if (value == "first_order") cfg.scheme = SchemeKind::FirstOrder;
    else if (value == "bdf2") cfg.scheme = SchemeKind::Bdf2;
    else
      throw ConfigError("line " + std::to_string(line) +
                        ": scheme must be first_order or bdf2, got '" + value + "'");
  } else if (key == "nu") cfg.params.nu = parse_double(key, value, line);
  else if (key == "nu_r") cfg.params.nu_r = parse_double(key, value, line);
  else if (key == "c_a") cfg.params.c_a = parse_double(key, value, line);
  else if (key == "c_d") cfg.params.c_d = parse_double(key, value, line);
  else if (key == "c_0") cfg.params.c_0 = parse_double(key, value, line);
  else if (key == "j") cfg.params.j = parse_double(key, value, line);
  else if (key == "nx") cfg.nx = parse_int(key, value, line);
  else if (key == "ny") cfg.ny = parse_int(key, value, line);
  else if (key == "length_x") cfg.length_x = parse_double(key, value, line);
  else if (key == "length_y") cfg.length_y = parse_double(key, value, line);
  else if (key == "tau") cfg.tau = parse_double(key, value, line);
  else if (key == "T") cfg.final_time = parse_double(key, value, line);
  else if (key == "kind") {
    if (value == "h1_pressure") cfg.kind = StudyKind::H1Pressure;
    else if (value == "linf_l2") cfg.kind = StudyKind::LinfL2;
    else
      throw ConfigError("line " + std::to_string(line) +
                        ": kind must be h1_pressure or linf_l2, got '" + value + "'");
  } else if (key == "levels") {
    const auto dots = value.find("..");
    if (dots == std::string::npos)
      throw ConfigError("line " + std::to_string(line) + ": levels expects 'a..b'");
    cfg.level_lo = parse_int(key, value.substr(0, dots), line);
    cfg.level_hi = parse_int(key, value.substr(dots + 2), line);
  } else if (key == "assert_orders") cfg.assert_orders = parse_bool(key, value, line);
  else if (key == "profile") {
    if (value == "all") cfg.profile = 0;
    else cfg.profile = parse_int(key, value, line);
  } else if (key == "amplitude") cfg.amplitude = parse_double(key, value, line);
  else if (key == "L") cfg.channel_length = parse_double(key, value, line);
  else if (key == "n") cfg.cells_per_unit = parse_int(key, value, line);
  else if (key == "out_dir") cfg.out_dir = value;
  else if (key == "vtk") cfg.vtk = parse_bool(key, value, line);
  else
    throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "'");
}

/// Parses a flat key=value file ('#' comments, blank lines allowed) on top of
/// the defaults; does not validate (flag overrides may come later).
inline RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  RunConfig cfg;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    const auto hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = detail::trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line) + ": expected 'key = value', got '" +
                        raw + "'");
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string value = detail::trim(s.substr(eq + 1));
    apply_config_key(cfg, key, value, line);
  }
  return cfg;
}

/// Writes every key so that parse_config_file reproduces the config exactly.
inline void write_config_file(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "problem = " << cfg.problem << "\n";
  out << "scheme = " << (cfg.scheme == SchemeKind::Bdf2 ? "bdf2" : "first_order") << "\n";
  out << "nu = " << num(cfg.params.nu) << "\n";
  out << "nu_r = " << num(cfg.params.nu_r) << "\n";
  out << "c_a = " << num(cfg.params.c_a) << "\n";
  out << "c_d = " << num(cfg.params.c_d) << "\n";
  out << "c_0 = " << num(cfg.params.c_0) << "\n";
  out << "j = " << num(cfg.params.j) << "\n";
  out << "nx = " << cfg.nx << "\n";
  out << "ny = " << cfg.ny << "\n";
  out << "length_x = " << num(cfg.length_x) << "\n";
  out << "length_y = " << num(cfg.length_y) << "\n";
  out << "tau = " << num(cfg.tau) << "\n";
  out << "T = " << num(cfg.final_time) << "\n";
  out << "kind = " << (cfg.kind == StudyKind::LinfL2 ? "linf_l2" : "h1_pressure") << "\n";
  out << "levels = " << cfg.level_lo << ".." << cfg.level_hi << "\n";
  out << "assert_orders = " << (cfg.assert_orders ? "true" : "false") << "\n";
  out << "profile = " << (cfg.profile == 0 ? std::string("all") : std::to_string(cfg.profile))
      << "\n";
  out << "amplitude = " << num(cfg.amplitude) << "\n";
  out << "L = " << num(cfg.channel_length) << "\n";
  out << "n = " << cfg.cells_per_unit << "\n";
  out << "out_dir = " << cfg.out_dir << "\n";
  out << "vtk = " << (cfg.vtk ? "true" : "false") << "\n";
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// RFC-4180-style CSV with '.' decimal separator and 17 significant digits.
inline void write_csv(const std::string& path, const std::string& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  out << header << "\r\n";
  char buf[64];
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", row[i]);
      out << (i ? "," : "") << buf;
    }
    out << "\r\n";
  }
}

/// Error table and observed-order table as the two study CSVs.
inline void write_eoc_csv(const EocTable& table, const std::string& errors_path,
                          const std::string& orders_path) {
  std::vector<std::vector<double>> rows;
  for (size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    const double level = table.levels.size() == table.rows.size()
                             ? static_cast<double>(table.levels[i])
                             : static_cast<double>(i);
    rows.push_back({level, r.h, r.tau, r.linf_l2_u, r.linf_l2_w, r.l2_h1_u, r.l2_h1_w,
                    r.l2_l2_p});
  }
  write_csv(errors_path, "level,h,tau,linf_l2_u,linf_l2_w,l2_h1_u,l2_h1_w,l2_l2_p", rows);

  std::vector<std::vector<double>> orows;
  for (const auto& o : table.orders)
    orows.push_back({o.h_coarse, o.h_fine, o.linf_l2_u, o.linf_l2_w, o.l2_h1_u, o.l2_h1_w,
                     o.l2_l2_p});
  write_csv(orders_path,
            "h_coarse,h_fine,ord_linf_l2_u,ord_linf_l2_w,ord_l2_h1_u,ord_l2_h1_w,ord_l2_l2_p",
            orows);
}

inline void write_outlet_csv(const OutletProfile& profile, const std::string& path) {
  std::vector<std::vector<double>> rows;
  for (size_t i = 0; i < profile.y.size(); ++i)
    rows.push_back({profile.y[i], profile.u_x[i]});
  write_csv(path, "y,u_x", rows);
}

// ---------------------------------------------------------------------------
// VTK (legacy ASCII unstructured grid, quad cells)
// ---------------------------------------------------------------------------

/// Fields are written as vertex data: Q2 fields are downsampled to the mesh
/// vertices, pressure (Q1) is vertex-valued already. Pass empty vectors to
/// write the bare mesh.
inline void write_vtk(const Mesh& mesh, const Vector& velocity, const Vector& spin,
                      const Vector& pressure, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_vtk: cannot open " + path);
  out.precision(17);

  const size_t n_pts = mesh.vertices.size();
  out << "# vtk DataFile Version 3.0\n";
  out << "mpns fields\n";
  out << "ASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << n_pts << " double\n";
  for (const auto& v : mesh.vertices) out << v[0] << " " << v[1] << " 0\n";
  out << "CELLS " << mesh.n_cells() << " " << mesh.n_cells() * 5 << "\n";
  for (const auto& c : mesh.cells)
    out << "4 " << c[0] << " " << c[1] << " " << c[2] << " " << c[3] << "\n";
  out << "CELL_TYPES " << mesh.n_cells() << "\n";
  for (int c = 0; c < mesh.n_cells(); ++c) out << "9\n";

  const bool any = !velocity.empty() || !spin.empty() || !pressure.empty();
  if (!any) return;
  out << "POINT_DATA " << n_pts << "\n";

  // Q2 scalar-node lattice is (2nx+1) wide; vertex (i,j) sits at Q2 node (2i,2j).
  const int q2_row = 2 * mesh.nx() + 1;
  auto q2_node = [&](size_t vertex) {
    const int i = static_cast<int>(vertex) % (mesh.nx() + 1);
    const int j = static_cast<int>(vertex) / (mesh.nx() + 1);
    return 2 * j * q2_row + 2 * i;
  };

  if (!velocity.empty()) {
    out << "VECTORS velocity double\n";
    for (size_t v = 0; v < n_pts; ++v) {
      const int node = q2_node(v);
      out << velocity[2 * node] << " " << velocity[2 * node + 1] << " 0\n";
    }
  }
  if (!spin.empty()) {
    out << "SCALARS spin double 1\n";
    out << "LOOKUP_TABLE default\n";
    for (size_t v = 0; v < n_pts; ++v) out << spin[q2_node(v)] << "\n";
  }
  if (!pressure.empty()) {
    out << "SCALARS pressure double 1\n";
    out << "LOOKUP_TABLE default\n";
    for (size_t v = 0; v < n_pts; ++v) out << pressure[v] << "\n";
  }
}

inline void write_vtk_mesh(const Mesh& mesh, const std::string& path) {
  write_vtk(mesh, {}, {}, {}, path);
}

}  // namespace mpns
