#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace mpns {

/// Tensor-product Gauss-Legendre rule on the reference square [-1,1]^2.
struct QuadratureRule {
  std::vector<std::array<double, 2>> points;
  std::vector<double> weights;

  int size() const { return static_cast<int>(points.size()); }
};

namespace detail {

struct Gauss1d {
  std::vector<double> x, w;
};

inline Gauss1d gauss_1d(int q) {
  // Nodes/weights to full double precision.
  switch (q) {
    case 2:
      return {{-0.57735026918962576451, 0.57735026918962576451}, {1.0, 1.0}};
    case 3:
      return {{-0.77459666924148337704, 0.0, 0.77459666924148337704},
              {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0}};
    case 4:
      return {{-0.86113631159405257522, -0.33998104358485626480,
               0.33998104358485626480, 0.86113631159405257522},
              {0.34785484513745385737, 0.65214515486254614263,
               0.65214515486254614263, 0.34785484513745385737}};
    case 5:
      return {{-0.90617984593866399280, -0.53846931010568309104, 0.0,
               0.53846931010568309104, 0.90617984593866399280},
              {0.23692688505618908751, 0.47862867049936646804,
               128.0 / 225.0, 0.47862867049936646804, 0.23692688505618908751}};
    default:
      throw std::invalid_argument("gauss_rule: unsupported points-per-direction q=" +
                                  std::to_string(q) + " (supported: 2..5)");
  }
}

}  // namespace detail

/// q-by-q tensor rule, exact for polynomials of degree <= 2q-1 per variable.
inline QuadratureRule gauss_rule(int q) {
  const auto g = detail::gauss_1d(q);
  QuadratureRule rule;
  rule.points.reserve(static_cast<size_t>(q) * q);
  rule.weights.reserve(static_cast<size_t>(q) * q);
  for (int b = 0; b < q; ++b)
    for (int a = 0; a < q; ++a) {
      rule.points.push_back({g.x[a], g.x[b]});
      rule.weights.push_back(g.w[a] * g.w[b]);
    }
  return rule;
}

}  // namespace mpns
