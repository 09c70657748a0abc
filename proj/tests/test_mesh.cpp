#include <gtest/gtest.h>

#include <map>

#include "mpns/mesh.hpp"

using namespace mpns;

TEST(Mesh, UnitSquareCounts) {
  const Mesh mesh = generate_rect_mesh({2, 2, 1.0, 1.0});
  EXPECT_EQ(mesh.n_cells(), 4);
  EXPECT_EQ(mesh.vertices.size(), 9u);
  EXPECT_EQ(mesh.boundary_edges.size(), 8u);
}

TEST(Mesh, PumpChannelCounts) {
  const Mesh mesh = generate_rect_mesh({40, 40, 1.0, 1.0});
  EXPECT_EQ(mesh.n_cells(), 1600);
  EXPECT_EQ(mesh.boundary_edges.size(), 2u * (40 + 40));
}

TEST(Mesh, DyadicSizes) {
  for (int i = 2; i <= 6; ++i) {
    const int n = 1 << i;
    const Mesh mesh = generate_rect_mesh({n, n, 1.0, 1.0});
    EXPECT_DOUBLE_EQ(mesh.hx(), 1.0 / n);
    EXPECT_DOUBLE_EQ(mesh.hy(), 1.0 / n);
  }
}

TEST(Mesh, AreaSumAndOrientation) {
  for (const auto& [nx, ny] : std::vector<std::pair<int, int>>{
           {1, 1}, {3, 5}, {17, 9}, {64, 64}, {256, 256}}) {
    const double lx = 2.5, ly = 0.75;
    const Mesh mesh = generate_rect_mesh({nx, ny, lx, ly});
    double area = 0.0;
    for (const auto& c : mesh.cells) {
      const auto& a = mesh.vertices[c[0]];
      const auto& b = mesh.vertices[c[1]];
      const auto& d = mesh.vertices[c[3]];
      // cross product of the two edge vectors: positive iff counterclockwise
      const double cross = (b[0] - a[0]) * (d[1] - a[1]) - (b[1] - a[1]) * (d[0] - a[0]);
      EXPECT_GT(cross, 0.0);
      area += cross;  // rectangle area equals the corner cross product
    }
    EXPECT_NEAR(area, lx * ly, 1e-12 * lx * ly);
  }
}

TEST(Mesh, InteriorVertexSharedByFourCells) {
  const Mesh mesh = generate_rect_mesh({5, 4, 1.0, 1.0});
  std::map<int, int> uses;
  for (const auto& c : mesh.cells)
    for (int v : c) uses[v]++;
  for (int j = 1; j < 4; ++j)
    for (int i = 1; i < 5; ++i) EXPECT_EQ(uses[j * 6 + i], 4);
}

TEST(Mesh, MarkersMatchCoordinates) {
  const Mesh mesh = generate_rect_mesh({4, 3, 2.0, 1.5});
  for (const auto& e : mesh.boundary_edges) {
    const auto& cell = mesh.cells[e.cell];
    // endpoints of the local edge
    static const int ends[4][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
    const auto& a = mesh.vertices[cell[ends[e.local_edge][0]]];
    const auto& b = mesh.vertices[cell[ends[e.local_edge][1]]];
    switch (e.marker) {
      case BoundaryMarker::Left:
        EXPECT_DOUBLE_EQ(a[0], 0.0);
        EXPECT_DOUBLE_EQ(b[0], 0.0);
        break;
      case BoundaryMarker::Right:
        EXPECT_DOUBLE_EQ(a[0], 2.0);
        EXPECT_DOUBLE_EQ(b[0], 2.0);
        break;
      case BoundaryMarker::Bottom:
        EXPECT_DOUBLE_EQ(a[1], 0.0);
        EXPECT_DOUBLE_EQ(b[1], 0.0);
        break;
      case BoundaryMarker::Top:
        EXPECT_DOUBLE_EQ(a[1], 1.5);
        EXPECT_DOUBLE_EQ(b[1], 1.5);
        break;
    }
  }
}

TEST(Mesh, RejectsBadConfig) {
  EXPECT_THROW(generate_rect_mesh({0, 2, 1.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(generate_rect_mesh({2, -1, 1.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(generate_rect_mesh({2, 2, 0.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(generate_rect_mesh({2, 2, 1.0, -3.0}), std::invalid_argument);
}
