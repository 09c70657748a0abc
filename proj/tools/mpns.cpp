// Command-line driver: convergence studies, the channel pumping experiment,
// and single simulations from a key=value config file.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mpns/io.hpp"
#include "mpns/mms.hpp"
#include "mpns/pump.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitThreshold = 4;

void parse_levels(const std::string& spec, mpns::RunConfig& cfg) {
  mpns::apply_config_key(cfg, "levels", spec);
}

std::string join_path(const std::string& dir, const std::string& name) {
  if (dir.empty() || dir == ".") return name;
  return dir + "/" + name;
}

void print_eoc(const mpns::EocTable& table) {
  std::printf("%6s %10s %12s %12s %12s %12s %12s %12s\n", "level", "h", "tau", "linf_l2_u",
              "linf_l2_w", "l2_h1_u", "l2_h1_w", "l2_l2_p");
  for (size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    const int level = table.levels.size() == table.rows.size() ? table.levels[i]
                                                               : static_cast<int>(i);
    std::printf("%6d %10.4g %12.4g %12.4e %12.4e %12.4e %12.4e %12.4e\n", level, r.h, r.tau,
                r.linf_l2_u, r.linf_l2_w, r.l2_h1_u, r.l2_h1_w, r.l2_l2_p);
  }
  for (const auto& o : table.orders)
    std::printf("order  h %.4g -> %.4g : linf_l2_u=%.2f linf_l2_w=%.2f l2_h1_u=%.2f "
                "l2_h1_w=%.2f l2_l2_p=%.2f\n",
                o.h_coarse, o.h_fine, o.linf_l2_u, o.linf_l2_w, o.l2_h1_u, o.l2_h1_w,
                o.l2_l2_p);
}

int run_converge(const mpns::RunConfig& cfg) {
  std::vector<int> levels;
  for (int lv = cfg.level_lo; lv <= cfg.level_hi; ++lv) levels.push_back(lv);
  const mpns::EocTable table =
      mpns::converge_study(cfg.kind, levels, cfg.params, cfg.final_time);

  const std::string tag =
      cfg.kind == mpns::StudyKind::H1Pressure ? "h1_pressure" : "linf_l2";
  mpns::write_eoc_csv(table, join_path(cfg.out_dir, "mpns_errors_" + tag + ".csv"),
                      join_path(cfg.out_dir, "mpns_orders_" + tag + ".csv"));
  print_eoc(table);

  if (cfg.assert_orders) {
    if (table.orders.empty()) {
      std::cerr << "error: --assert-orders needs at least two levels\n";
      return kExitThreshold;
    }
    const auto& o = table.orders.back();
    bool ok = true;
    auto check = [&ok](const char* name, double value, double lo, double hi) {
      const bool pass = value >= lo && value <= hi;
      std::printf("%s observed order %s = %.3f (window [%.1f, %.1f])\n",
                  pass ? "PASS" : "FAIL", name, value, lo, hi);
      ok = ok && pass;
    };
    if (cfg.kind == mpns::StudyKind::H1Pressure) {
      check("l2_h1_u", o.l2_h1_u, 1.8, 2.3);
      check("l2_h1_w", o.l2_h1_w, 1.8, 2.3);
      check("l2_l2_p", o.l2_l2_p, 1.8, 2.3);
    } else {
      check("linf_l2_u", o.linf_l2_u, 2.7, 3.3);
      check("linf_l2_w", o.linf_l2_w, 2.7, 3.3);
    }
    if (!ok) return kExitThreshold;
  }
  return kExitOk;
}

int run_pump_cmd(const mpns::RunConfig& cfg) {
  std::vector<int> profiles;
  if (cfg.profile == 0)
    profiles = {1, 2, 3, 4, 5, 6, 7};
  else
    profiles = {cfg.profile};

  std::vector<std::vector<double>> summary;
  for (int i : profiles) {
    mpns::PumpConfig pc;
    pc.length = cfg.channel_length;
    pc.cells_per_unit = cfg.cells_per_unit;
    pc.amplitude = cfg.amplitude;
    pc.profile = i;
    pc.final_time = cfg.final_time;
    pc.tau = cfg.tau;
    pc.params = cfg.params;

    const mpns::PumpResult result = mpns::run_pump(pc);
    std::printf("profile %d: mean outlet flux = %.6e\n", i, result.outlet.mean_flux);
    mpns::write_outlet_csv(result.outlet,
                           join_path(cfg.out_dir, "pump_profile_" + std::to_string(i) + ".csv"));
    if (cfg.vtk)
      mpns::write_vtk(result.mesh, result.state.U, result.state.W, result.state.P,
                      join_path(cfg.out_dir, "pump_profile_" + std::to_string(i) + ".vtk"));
    summary.push_back({static_cast<double>(i), result.outlet.mean_flux});
  }
  mpns::write_csv(join_path(cfg.out_dir, "pump_summary.csv"), "profile,mean_flux", summary);
  return kExitOk;
}

int run_single(const mpns::RunConfig& cfg) {
  if (cfg.problem == "pump") return run_pump_cmd(cfg);

  const mpns::Mesh mesh =
      mpns::generate_rect_mesh({cfg.nx, cfg.ny, cfg.length_x, cfg.length_y});
  const mpns::OperatorSet ops = mpns::OperatorSet::build(mesh, cfg.params);
  const mpns::ManufacturedSolution ms = mpns::trig_solution();
  const mpns::ExactFields exact = ms.exact();

  mpns::ErrorAccumulator acc(ops, ms);
  mpns::SimulationSetup setup;
  setup.scheme = cfg.scheme;
  setup.tau = cfg.tau;
  setup.steps = static_cast<int>(std::lround(cfg.final_time / cfg.tau));
  setup.f = mpns::mms_forcing_f(cfg.params, ms);
  setup.g = mpns::mms_forcing_g(cfg.params, ms);
  setup.boundary = ms.dirichlet_boundary();
  setup.exact = &exact;
  setup.snapshot = [&acc](int, double t, const mpns::TimeState& s) { acc.add(t, s); };

  const mpns::RunResult run = mpns::run_simulation(ops, setup);
  const mpns::ErrorReport report = acc.finalize(cfg.tau);
  std::printf("mms run nx=%d tau=%g T=%g: linf_l2_u=%.4e linf_l2_w=%.4e l2_h1_u=%.4e "
              "l2_h1_w=%.4e l2_l2_p=%.4e\n",
              cfg.nx, cfg.tau, cfg.final_time, report.linf_l2_u, report.linf_l2_w,
              report.l2_h1_u, report.l2_h1_w, report.l2_l2_p);
  mpns::write_eoc_csv(mpns::eoc({report}), join_path(cfg.out_dir, "mpns_errors_run.csv"),
                      join_path(cfg.out_dir, "mpns_orders_run.csv"));
  if (cfg.vtk)
    mpns::write_vtk(mesh, run.state.U, run.state.W, run.state.P,
                    join_path(cfg.out_dir, "mpns_run.vtk"));
  return kExitOk;
}

void warn_bdf2_bound(const mpns::RunConfig& cfg) {
  if (cfg.scheme != mpns::SchemeKind::Bdf2) return;
  const auto check = mpns::check_bdf2_timestep(cfg.params, cfg.tau);
  if (!check.ok)
    std::cerr << "warning: tau = " << cfg.tau
              << " violates the BDF2 stability bound tau <= j*nu/(8*nu_r^2) = " << check.bound
              << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-element solver for the planar micropolar Navier-Stokes equations"};
  app.require_subcommand(1);

  mpns::RunConfig cfg;
  std::string kind_str, levels_str, profile_str, config_path;

  auto* conv = app.add_subcommand("converge", "Manufactured-solution convergence study");
  conv->add_option("--kind", kind_str, "h1_pressure (tau=h^2) or linf_l2 (tau=h^3)")
      ->required();
  conv->add_option("--levels", levels_str, "mesh levels a..b, h = 2^-level (default 2..5)");
  conv->add_option("--T", cfg.final_time, "final time (default 0.5 for studies)");
  conv->add_flag("--assert-orders", cfg.assert_orders,
                 "exit 4 unless the finest-pair observed orders meet their windows");
  conv->add_option("--out", cfg.out_dir, "output directory for the CSV tables");

  auto* pump = app.add_subcommand("pump", "Channel pumping driven by the spin forcing");
  pump->add_option("--profile", profile_str, "angle profile 1..7 or 'all' (default all)");
  pump->add_option("--n", cfg.cells_per_unit, "cells per unit length (default 40)");
  pump->add_option("--tau", cfg.tau, "time step (default 0.02)");
  pump->add_option("--T", cfg.final_time, "final time (default 1)");
  pump->add_option("--amplitude", cfg.amplitude, "torque scale (default 1)");
  pump->add_option("--L", cfg.channel_length, "channel length (default 1)");
  pump->add_option("--out", cfg.out_dir, "output directory");
  pump->add_flag("--vtk", cfg.vtk, "write final-state VTK snapshots");

  auto* runc = app.add_subcommand("run", "Single simulation from a config file");
  runc->add_option("--config", config_path, "key=value config file")->required();
  std::vector<std::string> overrides;
  runc->add_option("--set", overrides, "override keys as key=value (flags win)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (conv->parsed()) {
      cfg.subcommand = "converge";
      cfg.final_time = conv->count("--T") ? cfg.final_time : 0.5;
      mpns::apply_config_key(cfg, "kind", kind_str);
      if (!levels_str.empty()) parse_levels(levels_str, cfg);
      cfg.validate();
      return run_converge(cfg);
    }
    if (pump->parsed()) {
      cfg.subcommand = "pump";
      if (!profile_str.empty()) mpns::apply_config_key(cfg, "profile", profile_str);
      cfg.validate();
      return run_pump_cmd(cfg);
    }
    // run
    cfg = mpns::parse_config_file(config_path);
    cfg.subcommand = "run";
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw mpns::ConfigError("--set expects key=value, got '" + kv + "'");
      mpns::apply_config_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
    warn_bdf2_bound(cfg);
    return run_single(cfg);
  } catch (const mpns::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const mpns::SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
}
