#pragma once

#include <array>
#include <vector>

#include "mpns/quadrature.hpp"

namespace mpns {

/// Polynomial order of the tensor-product Lagrange elements.
enum class ElementOrder { Q1, Q2 };

inline int basis_count(ElementOrder order) { return order == ElementOrder::Q2 ? 9 : 4; }

/// Values and reference-coordinate gradients of all basis functions at one point.
/// Local numbering is tensor order, x fastest: node (a,b) -> index b*width + a,
/// with 1D nodes {-1,0,1} for Q2 and {-1,1} for Q1.
struct ShapeEval {
  int n = 0;
  std::array<double, 9> value{};
  std::array<double, 9> d_xi{};
  std::array<double, 9> d_eta{};
};

namespace detail {

inline void lagrange_q2(double t, std::array<double, 3>& v, std::array<double, 3>& d) {
  v = {0.5 * t * (t - 1.0), 1.0 - t * t, 0.5 * t * (t + 1.0)};
  d = {t - 0.5, -2.0 * t, t + 0.5};
}

inline void lagrange_q1(double t, std::array<double, 2>& v, std::array<double, 2>& d) {
  v = {0.5 * (1.0 - t), 0.5 * (1.0 + t)};
  d = {-0.5, 0.5};
}

}  // namespace detail

inline ShapeEval shape_eval(ElementOrder order, double xi, double eta) {
  ShapeEval s;
  if (order == ElementOrder::Q2) {
    std::array<double, 3> vx, dx, vy, dy;
    detail::lagrange_q2(xi, vx, dx);
    detail::lagrange_q2(eta, vy, dy);
    s.n = 9;
    for (int b = 0; b < 3; ++b)
      for (int a = 0; a < 3; ++a) {
        const int k = b * 3 + a;
        s.value[k] = vx[a] * vy[b];
        s.d_xi[k] = dx[a] * vy[b];
        s.d_eta[k] = vx[a] * dy[b];
      }
  } else {
    std::array<double, 2> vx, dx, vy, dy;
    detail::lagrange_q1(xi, vx, dx);
    detail::lagrange_q1(eta, vy, dy);
    s.n = 4;
    for (int b = 0; b < 2; ++b)
      for (int a = 0; a < 2; ++a) {
        const int k = b * 2 + a;
        s.value[k] = vx[a] * vy[b];
        s.d_xi[k] = dx[a] * vy[b];
        s.d_eta[k] = vx[a] * dy[b];
      }
  }
  return s;
}

/// Basis values/gradients tabulated at every point of a quadrature rule.
struct ShapeTable {
  ElementOrder order;
  int n_basis = 0;
  int n_points = 0;
  std::vector<ShapeEval> at;  // one entry per quadrature point

  const ShapeEval& operator[](int qp) const { return at[qp]; }
};

inline ShapeTable tabulate(ElementOrder order, const QuadratureRule& rule) {
  ShapeTable tab;
  tab.order = order;
  tab.n_basis = basis_count(order);
  tab.n_points = rule.size();
  tab.at.reserve(rule.points.size());
  for (const auto& p : rule.points) tab.at.push_back(shape_eval(order, p[0], p[1]));
  return tab;
}

}  // namespace mpns
