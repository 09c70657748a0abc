#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpns {

/// The four sides of the rectangular domain, used to tag boundary edges and
/// to attach boundary conditions.
enum class BoundaryMarker : int { Left = 0, Right = 1, Bottom = 2, Top = 3 };

inline constexpr std::array<BoundaryMarker, 4> all_markers = {
    BoundaryMarker::Left, BoundaryMarker::Right, BoundaryMarker::Bottom,
    BoundaryMarker::Top};

inline const char* to_string(BoundaryMarker m) {
  switch (m) {
    case BoundaryMarker::Left: return "Left";
    case BoundaryMarker::Right: return "Right";
    case BoundaryMarker::Bottom: return "Bottom";
    case BoundaryMarker::Top: return "Top";
  }
  return "?";
}

struct MeshConfig {
  int nx = 1;            ///< cells in x
  int ny = 1;            ///< cells in y
  double length_x = 1.0; ///< domain width
  double length_y = 1.0; ///< domain height

  void validate() const {
    if (nx < 1 || ny < 1)
      throw std::invalid_argument("MeshConfig: cell counts must be >= 1, got nx=" +
                                  std::to_string(nx) + " ny=" + std::to_string(ny));
    if (!(length_x > 0.0) || !(length_y > 0.0))
      throw std::invalid_argument("MeshConfig: side lengths must be positive");
  }
};

/// Boundary edge of a cell. Local edges are numbered counterclockwise:
/// 0 = bottom (v0-v1), 1 = right (v1-v2), 2 = top (v2-v3), 3 = left (v3-v0).
struct BoundaryEdge {
  int cell;
  int local_edge;
  BoundaryMarker marker;
};

/// Structured quadrilateral mesh of an axis-aligned rectangle.
///
/// Cell (i,j) spans [i*hx,(i+1)*hx] x [j*hy,(j+1)*hy] and has linear index
/// j*nx + i; vertex (i,j) has index j*(nx+1) + i. Cells list their corner
/// vertices counterclockwise starting at the lower-left corner.
struct Mesh {
  MeshConfig config;
  std::vector<std::array<double, 2>> vertices;
  std::vector<std::array<int, 4>> cells;
  std::vector<BoundaryEdge> boundary_edges;

  int nx() const { return config.nx; }
  int ny() const { return config.ny; }
  double hx() const { return config.length_x / config.nx; }
  double hy() const { return config.length_y / config.ny; }
  int n_cells() const { return static_cast<int>(cells.size()); }

  int cell_index(int i, int j) const { return j * config.nx + i; }

  /// Lower-left corner of cell (i,j).
  std::array<double, 2> cell_origin(int cell) const {
    const int i = cell % config.nx;
    const int j = cell / config.nx;
    return {i * hx(), j * hy()};
  }
};

/// Builds the uniform nx-by-ny mesh with side markers assigned by coordinate.
inline Mesh generate_rect_mesh(const MeshConfig& config) {
  config.validate();
  Mesh mesh;
  mesh.config = config;

  const int nx = config.nx, ny = config.ny;
  const double hx = config.length_x / nx;
  const double hy = config.length_y / ny;

  mesh.vertices.reserve(static_cast<size_t>((nx + 1) * (ny + 1)));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      mesh.vertices.push_back({i * hx, j * hy});

  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };

  mesh.cells.reserve(static_cast<size_t>(nx * ny));
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      mesh.cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)});

  for (int i = 0; i < nx; ++i) {
    mesh.boundary_edges.push_back({mesh.cell_index(i, 0), 0, BoundaryMarker::Bottom});
    mesh.boundary_edges.push_back({mesh.cell_index(i, ny - 1), 2, BoundaryMarker::Top});
  }
  for (int j = 0; j < ny; ++j) {
    mesh.boundary_edges.push_back({mesh.cell_index(0, j), 3, BoundaryMarker::Left});
    mesh.boundary_edges.push_back({mesh.cell_index(nx - 1, j), 1, BoundaryMarker::Right});
  }
  return mesh;
}

}  // namespace mpns
