#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpns/assembly.hpp"
#include "mpns/schemes.hpp"

namespace mpns {

/// Channel-pumping experiment: flow in [0,L] x [0,1] driven purely by the
/// angular-momentum forcing derived from a prescribed magnetization angle
/// profile; no-slip walls, open (do-nothing) inlet and outlet.
struct PumpConfig {
  double length = 1.0;    ///< channel length L >= 1
  int cells_per_unit = 40;
  double amplitude = 1.0; ///< torque scale mu0*m0*h0
  int profile = 1;        ///< angle profile index, 1..7
  double final_time = 1.0;
  double tau = 1.0 / 50.0;
  MaterialParams params{};  // all constants default to 1

  void validate() const {
    if (!(length >= 1.0)) throw std::invalid_argument("PumpConfig: length must be >= 1");
    if (cells_per_unit < 1) throw std::invalid_argument("PumpConfig: cells_per_unit >= 1");
    if (!(amplitude >= 0.0)) throw std::invalid_argument("PumpConfig: amplitude >= 0");
    if (profile < 1 || profile > 7)
      throw std::invalid_argument("PumpConfig: profile index must be in 1..7");
    if (!(final_time > 0.0) || !(tau > 0.0))
      throw std::invalid_argument("PumpConfig: final_time and tau must be positive");
    params.validate();
  }
};

/// Magnetization angle profiles across the channel height. theta_1 is the
/// linear interpolation between (0, pi/2) and (1, -pi/2); theta_i for i >= 2
/// is a quintic perturbation of it. All satisfy theta_i(0) = pi/2,
/// theta_i(1/2) = 0, theta_i(1) = -pi/2.
inline double theta_profile(int i, double y) {
  if (i < 1 || i > 7) throw std::invalid_argument("theta_profile: index must be in 1..7");
  if (i == 1) return -M_PI * (y - 0.5);
  const double ii = static_cast<double>(i);
  const double y2 = y * y, y3 = y2 * y, y4 = y3 * y, y5 = y4 * y;
  const double numerator = 480.0 * y5 - 1200.0 * y4 - 4.0 * y3 * (ii * ii + 10.0 * ii - 275.0) +
                           6.0 * y2 * (ii * ii + 10.0 * ii - 75.0) - ii * ii -
                           5.0 * (2.0 * ii - 7.0);
  return -M_PI * numerator / (2.0 * (ii * ii + 10.0 * ii - 35.0));
}

/// Torque density g(t, y) = -amplitude * (t/T) * sin(theta_i(y)): a uniform
/// horizontal magnetizing field ramped linearly in time acting on the frozen
/// magnetization profile. The momentum forcing f vanishes.
inline double pump_forcing(const PumpConfig& config, double t, double y) {
  return -config.amplitude * (t / config.final_time) * std::sin(theta_profile(config.profile, y));
}

/// Horizontal velocity trace along the outlet x = L at the final time,
/// sampled at the velocity nodes, plus its integral over the height.
struct OutletProfile {
  std::vector<double> y;
  std::vector<double> u_x;
  double mean_flux = 0.0;
};

struct PumpResult {
  OutletProfile outlet;
  Mesh mesh;
  TimeState state;
  EnergyLog energy;
};

namespace detail {

/// Composite Simpson over the outlet edge; exact for the Q2 trace.
inline double outlet_flux(const std::vector<double>& u_x, int ny, double hy) {
  double s = 0.0;
  for (int c = 0; c < ny; ++c)
    s += hy / 6.0 * (u_x[2 * c] + 4.0 * u_x[2 * c + 1] + u_x[2 * c + 2]);
  return s;
}

}  // namespace detail

inline PumpResult run_pump(
    const PumpConfig& config,
    const std::function<void(int, double, const TimeState&)>& snapshot = {}) {
  config.validate();
  MeshConfig mc;
  mc.nx = static_cast<int>(std::lround(config.cells_per_unit * config.length));
  mc.ny = config.cells_per_unit;
  mc.length_x = config.length;
  mc.length_y = 1.0;
  const Mesh mesh = generate_rect_mesh(mc);
  const OperatorSet ops = OperatorSet::build(mesh, config.params);

  // No slip on the walls for velocity and spin; open left/right.
  BoundaryData bd;
  auto zero_vec = [](double, double, double) { return std::array<double, 2>{0.0, 0.0}; };
  auto zero_scal = [](double, double, double) { return 0.0; };
  bd.velocity[static_cast<int>(BoundaryMarker::Bottom)] = zero_vec;
  bd.velocity[static_cast<int>(BoundaryMarker::Top)] = zero_vec;
  bd.spin[static_cast<int>(BoundaryMarker::Bottom)] = zero_scal;
  bd.spin[static_cast<int>(BoundaryMarker::Top)] = zero_scal;

  SimulationSetup setup;
  setup.scheme = SchemeKind::FirstOrder;
  setup.tau = config.tau;
  setup.steps = static_cast<int>(std::lround(config.final_time / config.tau));
  setup.g = [config](double, double y, double t) { return pump_forcing(config, t, y); };
  setup.boundary = bd;
  setup.snapshot = snapshot;

  RunResult run = run_simulation(ops, setup);

  PumpResult result;
  result.mesh = mesh;
  result.energy = std::move(run.energy);

  const auto& right =
      ops.velocity.boundary_nodes[static_cast<int>(BoundaryMarker::Right)];
  result.outlet.y.reserve(right.size());
  result.outlet.u_x.reserve(right.size());
  for (int node : right) {
    result.outlet.y.push_back(ops.velocity.node_coords[node][1]);
    result.outlet.u_x.push_back(run.state.U[ops.velocity.dof(node, 0)]);
  }
  result.outlet.mean_flux =
      detail::outlet_flux(result.outlet.u_x, mesh.ny(), mesh.hy());
  result.state = std::move(run.state);
  return result;
}

}  // namespace mpns
