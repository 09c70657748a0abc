#pragma once

#include <array>
#include <functional>
#include <utility>
#include <vector>

#include "mpns/dof_map.hpp"
#include "mpns/material.hpp"
#include "mpns/mesh.hpp"
#include "mpns/quadrature.hpp"
#include "mpns/shapes.hpp"
#include "mpns/sparse.hpp"

namespace mpns {

// Quadrature orders. q=3 integrates every bilinear pairing of Q2/Q1 basis
// functions exactly on affine rectangles; q=4 additionally integrates the
// triple products arising when a discrete Q2 field multiplies a trial/test
// pair, which makes the skew-symmetry of the convective form and the curl
// adjointness exact identities of the assembled matrices.
inline constexpr int kQuadBilinear = 3;
inline constexpr int kQuadNonlinear = 4;

namespace detail {

/// Shape data on the common reference cell with physical gradients and scaled
/// weights baked in. All cells of a uniform rectangle mesh share it.
struct CellBasis {
  int n = 0;
  int nq = 0;
  std::vector<double> w;            // weight * detJ per qp
  std::vector<std::array<double, 2>> qp_offset;  // physical offset of qp within cell
  std::vector<double> val, gx, gy;  // [qp * n + i]
};

inline CellBasis cell_basis(const Mesh& mesh, ElementOrder order, int q) {
  const QuadratureRule rule = gauss_rule(q);
  const ShapeTable tab = tabulate(order, rule);
  const double hx = mesh.hx(), hy = mesh.hy();
  const double det_j = 0.25 * hx * hy;

  CellBasis cb;
  cb.n = tab.n_basis;
  cb.nq = rule.size();
  cb.w.resize(cb.nq);
  cb.qp_offset.resize(cb.nq);
  cb.val.resize(static_cast<size_t>(cb.nq) * cb.n);
  cb.gx.resize(cb.val.size());
  cb.gy.resize(cb.val.size());
  for (int qp = 0; qp < cb.nq; ++qp) {
    cb.w[qp] = rule.weights[qp] * det_j;
    cb.qp_offset[qp] = {0.5 * (rule.points[qp][0] + 1.0) * hx,
                        0.5 * (rule.points[qp][1] + 1.0) * hy};
    for (int i = 0; i < cb.n; ++i) {
      cb.val[qp * cb.n + i] = tab[qp].value[i];
      cb.gx[qp * cb.n + i] = tab[qp].d_xi[i] * (2.0 / hx);
      cb.gy[qp * cb.n + i] = tab[qp].d_eta[i] * (2.0 / hy);
    }
  }
  return cb;
}

}  // namespace detail

/// Scalar L2 mass (q=3). Vector fields get one identical block per component.
inline CsrMatrix assemble_mass(const Mesh& mesh, const DofMap& map) {
  const auto cb = detail::cell_basis(mesh, map.order, kQuadBilinear);
  const int n = cb.n;

  std::vector<double> elem(static_cast<size_t>(n) * n, 0.0);
  for (int qp = 0; qp < cb.nq; ++qp)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        elem[i * n + j] += cb.w[qp] * cb.val[qp * n + i] * cb.val[qp * n + j];

  Triplets t(map.n_dofs, map.n_dofs);
  t.reserve(static_cast<size_t>(mesh.n_cells()) * n * n * map.components);
  for (int cell = 0; cell < mesh.n_cells(); ++cell) {
    const int* nodes = map.cell_node_ids(cell);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int c = 0; c < map.components; ++c)
          t.add(map.dof(nodes[i], c), map.dof(nodes[j], c), elem[i * n + j]);
  }
  return CsrMatrix::from_triplets(t);
}

/// coefficient * (grad u, grad v), componentwise block-diagonal (q=3).
inline CsrMatrix assemble_stiffness(const Mesh& mesh, const DofMap& map, double coefficient) {
  const auto cb = detail::cell_basis(mesh, map.order, kQuadBilinear);
  const int n = cb.n;

  std::vector<double> elem(static_cast<size_t>(n) * n, 0.0);
  for (int qp = 0; qp < cb.nq; ++qp)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        elem[i * n + j] += coefficient * cb.w[qp] *
                           (cb.gx[qp * n + i] * cb.gx[qp * n + j] +
                            cb.gy[qp * n + i] * cb.gy[qp * n + j]);

  Triplets t(map.n_dofs, map.n_dofs);
  t.reserve(static_cast<size_t>(mesh.n_cells()) * n * n * map.components);
  for (int cell = 0; cell < mesh.n_cells(); ++cell) {
    const int* nodes = map.cell_node_ids(cell);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int c = 0; c < map.components; ++c)
          t.add(map.dof(nodes[i], c), map.dof(nodes[j], c), elem[i * n + j]);
  }
  return CsrMatrix::from_triplets(t);
}

/// B[q, v] = (psi_q, div phi_v): rows on the pressure map, columns on the
/// velocity map (q=3).
inline CsrMatrix assemble_div(const Mesh& mesh, const DofMap& velocity_map,
                              const DofMap& pressure_map) {
  const auto cbv = detail::cell_basis(mesh, velocity_map.order, kQuadBilinear);
  const auto cbp = detail::cell_basis(mesh, pressure_map.order, kQuadBilinear);
  const int nv = cbv.n, np = cbp.n;

  // elem[p][s][c] = integral psi_p * d_c phi_s
  std::vector<double> elem(static_cast<size_t>(np) * nv * 2, 0.0);
  for (int qp = 0; qp < cbv.nq; ++qp)
    for (int p = 0; p < np; ++p)
      for (int s = 0; s < nv; ++s) {
        const double base = cbv.w[qp] * cbp.val[qp * np + p];
        elem[(p * nv + s) * 2 + 0] += base * cbv.gx[qp * nv + s];
        elem[(p * nv + s) * 2 + 1] += base * cbv.gy[qp * nv + s];
      }

  Triplets t(pressure_map.n_dofs, velocity_map.n_dofs);
  t.reserve(static_cast<size_t>(mesh.n_cells()) * np * nv * 2);
  for (int cell = 0; cell < mesh.n_cells(); ++cell) {
    const int* vn = velocity_map.cell_node_ids(cell);
    const int* pn = pressure_map.cell_node_ids(cell);
    for (int p = 0; p < np; ++p)
      for (int s = 0; s < nv; ++s)
        for (int c = 0; c < 2; ++c)
          t.add(pn[p], velocity_map.dof(vn[s], c), elem[(p * nv + s) * 2 + c]);
  }
  return CsrMatrix::from_triplets(t);
}

/// Skew-stabilized convection weight * b_h(U_adv, phi_j, phi_i) with
/// b_h(u, v, w) = ((u . grad) v, w) + 1/2 (div u, v . w), assembled with q=4
/// so that the element integrals are exact for Q2 advecting fields. `map` is
/// either the velocity map (identical block per component) or the spin map.
inline CsrMatrix assemble_convection(const Mesh& mesh, const DofMap& map,
                                     const DofMap& velocity_map, const Vector& u_adv,
                                     double weight) {
  const auto cb = detail::cell_basis(mesh, map.order, kQuadNonlinear);
  const auto cbv = detail::cell_basis(mesh, velocity_map.order, kQuadNonlinear);
  const int n = cb.n, nv = cbv.n;

  Triplets t(map.n_dofs, map.n_dofs);
  t.reserve(static_cast<size_t>(mesh.n_cells()) * n * n * map.components);
  std::vector<double> elem(static_cast<size_t>(n) * n);
  for (int cell = 0; cell < mesh.n_cells(); ++cell) {
    const int* vn = velocity_map.cell_node_ids(cell);
    std::fill(elem.begin(), elem.end(), 0.0);
    for (int qp = 0; qp < cb.nq; ++qp) {
      double ux = 0.0, uy = 0.0, div_u = 0.0;
      for (int s = 0; s < nv; ++s) {
        const double c0 = u_adv[velocity_map.dof(vn[s], 0)];
        const double c1 = u_adv[velocity_map.dof(vn[s], 1)];
        ux += c0 * cbv.val[qp * nv + s];
        uy += c1 * cbv.val[qp * nv + s];
        div_u += c0 * cbv.gx[qp * nv + s] + c1 * cbv.gy[qp * nv + s];
      }
      const double wq = weight * cb.w[qp];
      for (int i = 0; i < n; ++i) {
        const double phi_i = cb.val[qp * n + i];
        for (int j = 0; j < n; ++j) {
          const double adv = ux * cb.gx[qp * n + j] + uy * cb.gy[qp * n + j];
          elem[i * n + j] +=
              wq * (adv * phi_i + 0.5 * div_u * cb.val[qp * n + j] * phi_i);
        }
      }
    }
    const int* nodes = map.cell_node_ids(cell);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int c = 0; c < map.components; ++c)
          t.add(map.dof(nodes[i], c), map.dof(nodes[j], c), elem[i * n + j]);
  }
  return CsrMatrix::from_triplets(t);
}

/// Planar curl couplings (q=3), unweighted; callers apply the 2*nu_r factor.
///   Rwu[v, w] = (curl phi_w, phi_v) with curl w = (d_y w, -d_x w)
///   Ruw[w, v] = (phi_w, curl phi_v) with curl v = d_x v2 - d_y v1
inline std::pair<CsrMatrix, CsrMatrix> assemble_curl_coupling(const Mesh& mesh,
                                                              const DofMap& velocity_map,
                                                              const DofMap& spin_map) {
  const auto cbv = detail::cell_basis(mesh, velocity_map.order, kQuadBilinear);
  const auto cbw = detail::cell_basis(mesh, spin_map.order, kQuadBilinear);
  const int nv = cbv.n, nw = cbw.n;

  // a[s][w] = integral phi_s * d_x phi_w ; b[s][w] = integral phi_s * d_y phi_w
  // c[w][s] = integral phi_w * d_x phi_s ; d[w][s] = integral phi_w * d_y phi_s
  std::vector<double> int_v_dxw(static_cast<size_t>(nv) * nw, 0.0);
  std::vector<double> int_v_dyw(static_cast<size_t>(nv) * nw, 0.0);
  std::vector<double> int_w_dxv(static_cast<size_t>(nw) * nv, 0.0);
  std::vector<double> int_w_dyv(static_cast<size_t>(nw) * nv, 0.0);
  for (int qp = 0; qp < cbv.nq; ++qp)
    for (int s = 0; s < nv; ++s)
      for (int w = 0; w < nw; ++w) {
        const double wq = cbv.w[qp];
        int_v_dxw[s * nw + w] += wq * cbv.val[qp * nv + s] * cbw.gx[qp * nw + w];
        int_v_dyw[s * nw + w] += wq * cbv.val[qp * nv + s] * cbw.gy[qp * nw + w];
        int_w_dxv[w * nv + s] += wq * cbw.val[qp * nw + w] * cbv.gx[qp * nv + s];
        int_w_dyv[w * nv + s] += wq * cbw.val[qp * nw + w] * cbv.gy[qp * nv + s];
      }

  Triplets trwu(velocity_map.n_dofs, spin_map.n_dofs);
  Triplets truw(spin_map.n_dofs, velocity_map.n_dofs);
  const size_t nnz_guess = static_cast<size_t>(mesh.n_cells()) * nv * nw * 2;
  trwu.reserve(nnz_guess);
  truw.reserve(nnz_guess);
  for (int cell = 0; cell < mesh.n_cells(); ++cell) {
    const int* vn = velocity_map.cell_node_ids(cell);
    const int* wn = spin_map.cell_node_ids(cell);
    for (int s = 0; s < nv; ++s)
      for (int w = 0; w < nw; ++w) {
        trwu.add(velocity_map.dof(vn[s], 0), wn[w], int_v_dyw[s * nw + w]);
        trwu.add(velocity_map.dof(vn[s], 1), wn[w], -int_v_dxw[s * nw + w]);
        truw.add(wn[w], velocity_map.dof(vn[s], 1), int_w_dxv[w * nv + s]);
        truw.add(wn[w], velocity_map.dof(vn[s], 0), -int_w_dyv[w * nv + s]);
      }
  }
  return {CsrMatrix::from_triplets(trwu), CsrMatrix::from_triplets(truw)};
}

/// Load vector (f(., t), phi) with q=4.
inline Vector assemble_load(const Mesh& mesh, const DofMap& map, const VectorFn& f,
                            double t) {
  const auto cb = detail::cell_basis(mesh, map.order, kQuadNonlinear);
  const int n = cb.n;
  Vector load(static_cast<size_t>(map.n_dofs), 0.0);
  for (int cell = 0; cell < mesh.n_cells(); ++cell) {
    const auto origin = mesh.cell_origin(cell);
    const int* nodes = map.cell_node_ids(cell);
    for (int qp = 0; qp < cb.nq; ++qp) {
      const auto fv =
          f(origin[0] + cb.qp_offset[qp][0], origin[1] + cb.qp_offset[qp][1], t);
      for (int i = 0; i < n; ++i) {
        const double base = cb.w[qp] * cb.val[qp * n + i];
        load[map.dof(nodes[i], 0)] += base * fv[0];
        load[map.dof(nodes[i], 1)] += base * fv[1];
      }
    }
  }
  return load;
}

inline Vector assemble_load(const Mesh& mesh, const DofMap& map, const ScalarFn& g,
                            double t) {
  const auto cb = detail::cell_basis(mesh, map.order, kQuadNonlinear);
  const int n = cb.n;
  Vector load(static_cast<size_t>(map.n_dofs), 0.0);
  for (int cell = 0; cell < mesh.n_cells(); ++cell) {
    const auto origin = mesh.cell_origin(cell);
    const int* nodes = map.cell_node_ids(cell);
    for (int qp = 0; qp < cb.nq; ++qp) {
      const double gv =
          g(origin[0] + cb.qp_offset[qp][0], origin[1] + cb.qp_offset[qp][1], t);
      for (int i = 0; i < n; ++i)
        load[map.dof(nodes[i], 0)] += cb.w[qp] * cb.val[qp * n + i] * gv;
    }
  }
  return load;
}

/// All mesh-fixed operators of the scheme. Only convection depends on the
/// advecting field and is reassembled every step.
struct OperatorSet {
  Mesh mesh;
  MaterialParams params;
  DofMap velocity, spin, pressure;

  CsrMatrix Mu;        ///< velocity mass
  CsrMatrix Ku;        ///< nu0 * velocity stiffness
  CsrMatrix B;         ///< (q, div v), pressure rows x velocity columns
  CsrMatrix Mw;        ///< spin mass
  CsrMatrix Kw;        ///< c1 * spin stiffness
  CsrMatrix Rwu;       ///< 2*nu_r * (curl w, v)
  CsrMatrix Ruw;       ///< 2*nu_r * (w, curl v)
  CsrMatrix Ku_unit;   ///< unweighted velocity stiffness (norm evaluations)
  CsrMatrix Kw_unit;   ///< unweighted spin stiffness
  Vector pressure_mean_weights;  ///< integral of each Q1 basis function

  static OperatorSet build(const Mesh& mesh, const MaterialParams& params) {
    params.validate();
    OperatorSet ops;
    ops.mesh = mesh;
    ops.params = params;
    ops.velocity = build_dof_map(mesh, Field::Velocity);
    ops.spin = build_dof_map(mesh, Field::Spin);
    ops.pressure = build_dof_map(mesh, Field::Pressure);

    ops.Mu = assemble_mass(mesh, ops.velocity);
    ops.Ku_unit = assemble_stiffness(mesh, ops.velocity, 1.0);
    ops.Ku = ops.Ku_unit.scaled(params.nu0());
    ops.B = assemble_div(mesh, ops.velocity, ops.pressure);
    ops.Mw = assemble_mass(mesh, ops.spin);
    ops.Kw_unit = assemble_stiffness(mesh, ops.spin, 1.0);
    ops.Kw = ops.Kw_unit.scaled(params.c1());
    auto [rwu, ruw] = assemble_curl_coupling(mesh, ops.velocity, ops.spin);
    ops.Rwu = rwu.scaled(2.0 * params.nu_r);
    ops.Ruw = ruw.scaled(2.0 * params.nu_r);

    const CsrMatrix mp = assemble_mass(mesh, ops.pressure);
    ops.pressure_mean_weights.assign(static_cast<size_t>(ops.pressure.n_dofs), 0.0);
    const auto& off = mp.row_offsets();
    const auto& vals = mp.values();
    for (int r = 0; r < mp.rows(); ++r)
      for (int k = off[r]; k < off[r + 1]; ++k)
        ops.pressure_mean_weights[r] += vals[k];
    return ops;
  }

  double domain_area() const { return mesh.config.length_x * mesh.config.length_y; }

  /// Poincare constant used by the energy monitor, taken as diam(Omega).
  double poincare_constant() const {
    return std::sqrt(mesh.config.length_x * mesh.config.length_x +
                     mesh.config.length_y * mesh.config.length_y);
  }
};

}  // namespace mpns
