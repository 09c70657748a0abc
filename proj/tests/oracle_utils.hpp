// Test-only reference implementations: dense factorizations, independently
// written element integrals, and finite-difference derivatives. These stay
// separate from the library code paths they are used to check.
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mpns/sparse.hpp"

namespace oracle {

struct DenseMatrix {
  int n_rows = 0, n_cols = 0;
  std::vector<double> a;

  DenseMatrix() = default;
  DenseMatrix(int r, int c) : n_rows(r), n_cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return a[static_cast<size_t>(r) * n_cols + c]; }
  double at(int r, int c) const { return a[static_cast<size_t>(r) * n_cols + c]; }
};

inline DenseMatrix dense_from_csr(const mpns::CsrMatrix& m) {
  DenseMatrix d(m.rows(), m.cols());
  const auto& off = m.row_offsets();
  const auto& col = m.col_indices();
  const auto& vals = m.values();
  for (int r = 0; r < m.rows(); ++r)
    for (int k = off[r]; k < off[r + 1]; ++k) d.at(r, col[k]) += vals[k];
  return d;
}

inline std::vector<double> dense_multiply(const DenseMatrix& m, const std::vector<double>& x) {
  std::vector<double> y(static_cast<size_t>(m.n_rows), 0.0);
  for (int r = 0; r < m.n_rows; ++r) {
    double s = 0.0;
    for (int c = 0; c < m.n_cols; ++c) s += m.at(r, c) * x[c];
    y[r] = s;
  }
  return y;
}

/// Partial-pivoting LU solve; throws on a (numerically) singular matrix.
inline std::vector<double> dense_solve(DenseMatrix m, std::vector<double> b) {
  const int n = m.n_rows;
  if (m.n_cols != n || static_cast<int>(b.size()) != n)
    throw std::invalid_argument("dense_solve: shape mismatch");
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int r = k + 1; r < n; ++r)
      if (std::abs(m.at(r, k)) > std::abs(m.at(piv, k))) piv = r;
    if (std::abs(m.at(piv, k)) < 1e-300) throw std::runtime_error("dense_solve: singular");
    if (piv != k) {
      for (int c = 0; c < n; ++c) std::swap(m.at(piv, c), m.at(k, c));
      std::swap(b[piv], b[k]);
    }
    for (int r = k + 1; r < n; ++r) {
      const double f = m.at(r, k) / m.at(k, k);
      if (f == 0.0) continue;
      for (int c = k; c < n; ++c) m.at(r, c) -= f * m.at(k, c);
      b[r] -= f * b[k];
    }
  }
  std::vector<double> x(static_cast<size_t>(n), 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < n; ++c) s -= m.at(r, c) * x[c];
    x[r] = s / m.at(r, r);
  }
  return x;
}

/// Solves [[A, r^T], [r, 0]] [x; lambda] = [b; 0] densely.
inline std::pair<std::vector<double>, double> dense_solve_bordered(
    const DenseMatrix& m, const std::vector<double>& b, const std::vector<double>& r) {
  const int n = m.n_rows;
  DenseMatrix big(n + 1, n + 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) big.at(i, j) = m.at(i, j);
  for (int i = 0; i < n; ++i) {
    big.at(i, n) = r[i];
    big.at(n, i) = r[i];
  }
  std::vector<double> rhs(b);
  rhs.push_back(0.0);
  auto x = dense_solve(big, rhs);
  const double lambda = x.back();
  x.pop_back();
  return {std::move(x), lambda};
}

/// Cholesky as an SPD oracle: returns the smallest pivot (positive iff SPD).
inline double dense_cholesky_min_pivot(DenseMatrix m) {
  const int n = m.n_rows;
  double min_pivot = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) {
    double d = m.at(k, k);
    for (int j = 0; j < k; ++j) d -= m.at(k, j) * m.at(k, j);
    if (d <= 0.0) return d;
    min_pivot = std::min(min_pivot, d);
    m.at(k, k) = std::sqrt(d);
    for (int r = k + 1; r < n; ++r) {
      double s = m.at(r, k);
      for (int j = 0; j < k; ++j) s -= m.at(r, j) * m.at(k, j);
      m.at(r, k) = s / m.at(k, k);
    }
  }
  return min_pivot;
}

// ---------------------------------------------------------------------------
// Independent reference-element evaluation (explicit formulas, own tables)
// ---------------------------------------------------------------------------

struct Shape {
  std::array<double, 9> v{}, dx{}, dy{};  // reference-coordinate derivatives
  int n = 0;
};

inline Shape q2_shape(double xi, double eta) {
  auto l = [](int k, double t) {
    switch (k) {
      case 0: return 0.5 * t * (t - 1.0);
      case 1: return (1.0 - t) * (1.0 + t);
      default: return 0.5 * t * (t + 1.0);
    }
  };
  auto dl = [](int k, double t) {
    switch (k) {
      case 0: return t - 0.5;
      case 1: return -2.0 * t;
      default: return t + 0.5;
    }
  };
  Shape s;
  s.n = 9;
  for (int b = 0; b < 3; ++b)
    for (int a = 0; a < 3; ++a) {
      s.v[b * 3 + a] = l(a, xi) * l(b, eta);
      s.dx[b * 3 + a] = dl(a, xi) * l(b, eta);
      s.dy[b * 3 + a] = l(a, xi) * dl(b, eta);
    }
  return s;
}

inline Shape q1_shape(double xi, double eta) {
  auto l = [](int k, double t) { return k == 0 ? 0.5 * (1.0 - t) : 0.5 * (1.0 + t); };
  auto dl = [](int k, double) { return k == 0 ? -0.5 : 0.5; };
  Shape s;
  s.n = 4;
  for (int b = 0; b < 2; ++b)
    for (int a = 0; a < 2; ++a) {
      s.v[b * 2 + a] = l(a, xi) * l(b, eta);
      s.dx[b * 2 + a] = dl(a, xi) * l(b, eta);
      s.dy[b * 2 + a] = l(a, xi) * dl(b, eta);
    }
  return s;
}

struct GaussPoint {
  double xi, eta, w;
};

/// Own tensor Gauss tables (3- and 4-point 1D rules written out directly).
inline std::vector<GaussPoint> gauss_points(int q) {
  std::vector<double> x, w;
  if (q == 3) {
    const double a = std::sqrt(3.0 / 5.0);
    x = {-a, 0.0, a};
    w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  } else if (q == 4) {
    const double a = std::sqrt((3.0 - 2.0 * std::sqrt(6.0 / 5.0)) / 7.0);
    const double b = std::sqrt((3.0 + 2.0 * std::sqrt(6.0 / 5.0)) / 7.0);
    const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
    const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
    x = {-b, -a, a, b};
    w = {wb, wa, wa, wb};
  } else {
    throw std::invalid_argument("oracle gauss_points: q must be 3 or 4");
  }
  std::vector<GaussPoint> pts;
  for (size_t j = 0; j < x.size(); ++j)
    for (size_t i = 0; i < x.size(); ++i) pts.push_back({x[i], x[j], w[i] * w[j]});
  return pts;
}

/// Element integrals on a hx-by-hy cell, by direct quadrature loops.
struct ElementOracle {
  double hx, hy;
  int q;

  ElementOracle(double hx_, double hy_, int q_) : hx(hx_), hy(hy_), q(q_) {}

  double det_j() const { return 0.25 * hx * hy; }

  DenseMatrix mass_q2() const {
    DenseMatrix m(9, 9);
    for (const auto& g : gauss_points(q)) {
      const Shape s = q2_shape(g.xi, g.eta);
      for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) m.at(i, j) += g.w * det_j() * s.v[i] * s.v[j];
    }
    return m;
  }

  DenseMatrix stiffness_q2(double coef) const {
    DenseMatrix m(9, 9);
    for (const auto& g : gauss_points(q)) {
      const Shape s = q2_shape(g.xi, g.eta);
      for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) {
          const double gxi = s.dx[i] * 2.0 / hx, gyi = s.dy[i] * 2.0 / hy;
          const double gxj = s.dx[j] * 2.0 / hx, gyj = s.dy[j] * 2.0 / hy;
          m.at(i, j) += coef * g.w * det_j() * (gxi * gxj + gyi * gyj);
        }
    }
    return m;
  }

  /// 4 x 18 block: pressure row p, velocity column 2*s+c.
  DenseMatrix div_block() const {
    DenseMatrix m(4, 18);
    for (const auto& g : gauss_points(q)) {
      const Shape sv = q2_shape(g.xi, g.eta);
      const Shape sp = q1_shape(g.xi, g.eta);
      for (int p = 0; p < 4; ++p)
        for (int s = 0; s < 9; ++s) {
          m.at(p, 2 * s + 0) += g.w * det_j() * sp.v[p] * sv.dx[s] * 2.0 / hx;
          m.at(p, 2 * s + 1) += g.w * det_j() * sp.v[p] * sv.dy[s] * 2.0 / hy;
        }
    }
    return m;
  }

  /// Scalar convection block from 18 local velocity coefficients (2*s+c).
  DenseMatrix convection_q2(const std::array<double, 18>& u_local, double weight) const {
    DenseMatrix m(9, 9);
    for (const auto& g : gauss_points(q)) {
      const Shape s = q2_shape(g.xi, g.eta);
      double ux = 0.0, uy = 0.0, div_u = 0.0;
      for (int a = 0; a < 9; ++a) {
        ux += u_local[2 * a] * s.v[a];
        uy += u_local[2 * a + 1] * s.v[a];
        div_u += u_local[2 * a] * s.dx[a] * 2.0 / hx + u_local[2 * a + 1] * s.dy[a] * 2.0 / hy;
      }
      for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) {
          const double adv = ux * s.dx[j] * 2.0 / hx + uy * s.dy[j] * 2.0 / hy;
          m.at(i, j) +=
              weight * g.w * det_j() * (adv * s.v[i] + 0.5 * div_u * s.v[j] * s.v[i]);
        }
    }
    return m;
  }

  /// 18 x 9 block (curl phi_w, phi_v) and 9 x 18 block (phi_w, curl phi_v).
  std::pair<DenseMatrix, DenseMatrix> curl_blocks() const {
    DenseMatrix rwu(18, 9), ruw(9, 18);
    for (const auto& g : gauss_points(q)) {
      const Shape s = q2_shape(g.xi, g.eta);
      for (int a = 0; a < 9; ++a)
        for (int w = 0; w < 9; ++w) {
          const double wx = s.dx[w] * 2.0 / hx, wy = s.dy[w] * 2.0 / hy;
          const double ax = s.dx[a] * 2.0 / hx, ay = s.dy[a] * 2.0 / hy;
          rwu.at(2 * a + 0, w) += g.w * det_j() * wy * s.v[a];
          rwu.at(2 * a + 1, w) -= g.w * det_j() * wx * s.v[a];
          ruw.at(w, 2 * a + 1) += g.w * det_j() * s.v[w] * ax;
          ruw.at(w, 2 * a + 0) -= g.w * det_j() * s.v[w] * ay;
        }
    }
    return {rwu, ruw};
  }

  /// 18-entry load block for a vector source on cell with origin (x0, y0).
  std::array<double, 18> load_q2(const std::function<std::array<double, 2>(double, double)>& f,
                                 double x0, double y0) const {
    std::array<double, 18> out{};
    for (const auto& g : gauss_points(q)) {
      const Shape s = q2_shape(g.xi, g.eta);
      const double x = x0 + 0.5 * (g.xi + 1.0) * hx;
      const double y = y0 + 0.5 * (g.eta + 1.0) * hy;
      const auto fv = f(x, y);
      for (int a = 0; a < 9; ++a) {
        out[2 * a + 0] += g.w * det_j() * s.v[a] * fv[0];
        out[2 * a + 1] += g.w * det_j() * s.v[a] * fv[1];
      }
    }
    return out;
  }

  std::array<double, 9> load_scalar_q2(const std::function<double(double, double)>& f,
                                       double x0, double y0) const {
    std::array<double, 9> out{};
    for (const auto& g : gauss_points(q)) {
      const Shape s = q2_shape(g.xi, g.eta);
      const double x = x0 + 0.5 * (g.xi + 1.0) * hx;
      const double y = y0 + 0.5 * (g.eta + 1.0) * hy;
      const double fv = f(x, y);
      for (int a = 0; a < 9; ++a) out[a] += g.w * det_j() * s.v[a] * fv;
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Misc helpers
// ---------------------------------------------------------------------------

inline double central_diff(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double second_diff(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.a.size(); ++i) m = std::max(m, std::abs(a.a[i] - b.a[i]));
  return m;
}

}  // namespace oracle
