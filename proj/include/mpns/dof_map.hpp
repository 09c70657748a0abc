#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "mpns/mesh.hpp"
#include "mpns/shapes.hpp"

namespace mpns {

/// Discrete fields of the scheme. Velocity is a 2-component Q2 field, the
/// angular velocity (spin) is scalar Q2, pressure is scalar Q1.
enum class Field { Velocity, Spin, Pressure };

/// Global numbering for one field on a structured mesh.
///
/// Scalar nodes live on a (nodes_x x nodes_y) lattice; node (I,J) has id
/// J*nodes_x + I. Vector fields interleave components: dof = node*components + c.
struct DofMap {
  Field field = Field::Pressure;
  ElementOrder order = ElementOrder::Q1;
  int components = 1;
  int nodes_x = 0, nodes_y = 0;
  int n_scalar_nodes = 0;
  int n_dofs = 0;
  int nodes_per_cell = 0;

  std::vector<int> cell_nodes;                      // n_cells * nodes_per_cell
  std::vector<std::array<double, 2>> node_coords;   // per scalar node
  std::array<std::vector<int>, 4> boundary_nodes;   // per marker, scalar node ids

  int dof(int scalar_node, int comp) const { return scalar_node * components + comp; }

  const int* cell_node_ids(int cell) const { return &cell_nodes[cell * nodes_per_cell]; }

  /// All dofs (both components for vector fields) on the given side.
  std::vector<int> boundary_dofs(BoundaryMarker m) const {
    std::vector<int> dofs;
    const auto& nodes = boundary_nodes[static_cast<int>(m)];
    dofs.reserve(nodes.size() * components);
    for (int n : nodes)
      for (int c = 0; c < components; ++c) dofs.push_back(dof(n, c));
    return dofs;
  }
};

inline DofMap build_dof_map(const Mesh& mesh, Field field) {
  DofMap map;
  map.field = field;
  map.order = (field == Field::Pressure) ? ElementOrder::Q1 : ElementOrder::Q2;
  map.components = (field == Field::Velocity) ? 2 : 1;

  const int nx = mesh.nx(), ny = mesh.ny();
  const int r = (map.order == ElementOrder::Q2) ? 2 : 1;  // nodes per cell edge
  map.nodes_x = r * nx + 1;
  map.nodes_y = r * ny + 1;
  map.n_scalar_nodes = map.nodes_x * map.nodes_y;
  map.n_dofs = map.components * map.n_scalar_nodes;
  map.nodes_per_cell = (r + 1) * (r + 1);

  auto node_id = [&](int I, int J) { return J * map.nodes_x + I; };

  map.node_coords.reserve(static_cast<size_t>(map.n_scalar_nodes));
  const double dx = mesh.hx() / r, dy = mesh.hy() / r;
  for (int J = 0; J < map.nodes_y; ++J)
    for (int I = 0; I < map.nodes_x; ++I)
      map.node_coords.push_back({I * dx, J * dy});

  map.cell_nodes.reserve(static_cast<size_t>(mesh.n_cells()) * map.nodes_per_cell);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      for (int b = 0; b <= r; ++b)
        for (int a = 0; a <= r; ++a)
          map.cell_nodes.push_back(node_id(r * i + a, r * j + b));

  for (int J = 0; J < map.nodes_y; ++J) {
    map.boundary_nodes[static_cast<int>(BoundaryMarker::Left)].push_back(node_id(0, J));
    map.boundary_nodes[static_cast<int>(BoundaryMarker::Right)].push_back(
        node_id(map.nodes_x - 1, J));
  }
  for (int I = 0; I < map.nodes_x; ++I) {
    map.boundary_nodes[static_cast<int>(BoundaryMarker::Bottom)].push_back(node_id(I, 0));
    map.boundary_nodes[static_cast<int>(BoundaryMarker::Top)].push_back(
        node_id(I, map.nodes_y - 1));
  }
  return map;
}

using VectorFn = std::function<std::array<double, 2>(double x, double y, double t)>;
using ScalarFn = std::function<double(double x, double y, double t)>;

/// Per-side boundary prescriptions for velocity and spin. An empty optional
/// means the natural (do-nothing) condition on that side. Pressure carries no
/// boundary condition.
struct BoundaryData {
  std::array<std::optional<VectorFn>, 4> velocity;
  std::array<std::optional<ScalarFn>, 4> spin;

  static BoundaryData homogeneous_dirichlet() {
    BoundaryData bd;
    for (auto m : all_markers) {
      bd.velocity[static_cast<int>(m)] = [](double, double, double) {
        return std::array<double, 2>{0.0, 0.0};
      };
      bd.spin[static_cast<int>(m)] = [](double, double, double) { return 0.0; };
    }
    return bd;
  }

  /// Dirichlet on every side from the given exact fields.
  static BoundaryData dirichlet_everywhere(VectorFn u, ScalarFn w) {
    BoundaryData bd;
    for (auto m : all_markers) {
      bd.velocity[static_cast<int>(m)] = u;
      bd.spin[static_cast<int>(m)] = w;
    }
    return bd;
  }

  bool velocity_fully_dirichlet() const {
    for (const auto& v : velocity)
      if (!v) return false;
    return true;
  }
};

/// Nodal interpolation of the Dirichlet data at time t, as (dof, value) pairs
/// sorted by dof. Corner nodes shared by two sides are emitted once.
inline std::vector<std::pair<int, double>> interpolate_boundary(const DofMap& map,
                                                                const BoundaryData& bd,
                                                                double t) {
  std::map<int, double> values;
  for (auto m : all_markers) {
    const int mi = static_cast<int>(m);
    if (map.field == Field::Velocity) {
      if (!bd.velocity[mi]) continue;
      for (int n : map.boundary_nodes[mi]) {
        const auto [x, y] = map.node_coords[n];
        const auto v = (*bd.velocity[mi])(x, y, t);
        values[map.dof(n, 0)] = v[0];
        values[map.dof(n, 1)] = v[1];
      }
    } else if (map.field == Field::Spin) {
      if (!bd.spin[mi]) continue;
      for (int n : map.boundary_nodes[mi]) {
        const auto [x, y] = map.node_coords[n];
        values[map.dof(n, 0)] = (*bd.spin[mi])(x, y, t);
      }
    }
  }
  return {values.begin(), values.end()};
}

}  // namespace mpns
