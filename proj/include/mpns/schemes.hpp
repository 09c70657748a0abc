#pragma once

#include <cmath>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mpns/assembly.hpp"
#include "mpns/dof_map.hpp"
#include "mpns/material.hpp"
#include "mpns/solver.hpp"
#include "mpns/sparse.hpp"

namespace mpns {

enum class SchemeKind { FirstOrder, Bdf2 };

/// Discrete fields at step k together with the lagged levels the schemes need.
struct TimeState {
  int step = 0;
  Vector U, W, P;          // current level k
  Vector U_prev, W_prev;   // level k-1
  Vector U_prev2, W_prev2; // level k-2 (BDF2 only)
};

/// Closed-form data of an exact solution, evaluated pointwise. grad_u is packed
/// as [d_x u1, d_y u1, d_x u2, d_y u2].
struct ExactFields {
  VectorFn u;
  std::function<std::array<double, 4>(double, double, double)> grad_u;
  ScalarFn p;
  ScalarFn w;
  VectorFn grad_w;
};

inline double quadratic_form(const CsrMatrix& a, const Vector& x) {
  return dot(x, a.multiply(x));
}

namespace detail {

inline void check_finite(const Vector& v, const char* what, int step) {
  if (!all_finite(v))
    throw SolverError(std::string("NaN/inf detected in ") + what + " at step " +
                      std::to_string(step));
}

/// || f(., t) ||_{L2}^2 by q=4 quadrature.
inline double l2_norm_sq(const Mesh& mesh, const VectorFn& f, double t) {
  const auto rule = gauss_rule(kQuadNonlinear);
  const double det_j = 0.25 * mesh.hx() * mesh.hy();
  double s = 0.0;
  for (int cell = 0; cell < mesh.n_cells(); ++cell) {
    const auto o = mesh.cell_origin(cell);
    for (int qp = 0; qp < rule.size(); ++qp) {
      const double x = o[0] + 0.5 * (rule.points[qp][0] + 1.0) * mesh.hx();
      const double y = o[1] + 0.5 * (rule.points[qp][1] + 1.0) * mesh.hy();
      const auto v = f(x, y, t);
      s += rule.weights[qp] * det_j * (v[0] * v[0] + v[1] * v[1]);
    }
  }
  return s;
}

inline double l2_norm_sq(const Mesh& mesh, const ScalarFn& g, double t) {
  const auto rule = gauss_rule(kQuadNonlinear);
  const double det_j = 0.25 * mesh.hx() * mesh.hy();
  double s = 0.0;
  for (int cell = 0; cell < mesh.n_cells(); ++cell) {
    const auto o = mesh.cell_origin(cell);
    for (int qp = 0; qp < rule.size(); ++qp) {
      const double x = o[0] + 0.5 * (rule.points[qp][0] + 1.0) * mesh.hx();
      const double y = o[1] + 0.5 * (rule.points[qp][1] + 1.0) * mesh.hy();
      const double v = g(x, y, t);
      s += rule.weights[qp] * det_j * v * v;
    }
  }
  return s;
}

/// Assembles the coupled momentum system
///   [ mass_coef*Mu + Ku + C   -B^T ] [U]   [rhs_u]
///   [ B                        0   ] [P] = [rhs_p]
/// applies the velocity Dirichlet rows, and solves. With `enclosed` set, the
/// zero-mean pressure constraint is appended as a Lagrange-multiplier border.
struct MomentumSolution {
  Vector U, P;
  double lambda = 0.0;
};

inline MomentumSolution solve_momentum(const OperatorSet& ops, const CsrMatrix& convection,
                                       double mass_coef, const Vector& rhs_u,
                                       const Vector& rhs_p,
                                       const std::vector<std::pair<int, double>>& velocity_bcs,
                                       bool enclosed) {
  const int nv = ops.velocity.n_dofs;
  const int np = ops.pressure.n_dofs;
  const int n = nv + np;

  Triplets t(n, n);
  t.reserve(ops.Mu.nnz() + ops.Ku.nnz() + convection.nnz() + 2 * ops.B.nnz());
  auto scatter = [&t](const CsrMatrix& m, double scale, int row0, int col0, bool transpose) {
    const auto& off = m.row_offsets();
    const auto& col = m.col_indices();
    const auto& vals = m.values();
    for (int r = 0; r < m.rows(); ++r)
      for (int k = off[r]; k < off[r + 1]; ++k) {
        if (transpose)
          t.add(col0 + col[k], row0 + r, scale * vals[k]);
        else
          t.add(row0 + r, col0 + col[k], scale * vals[k]);
      }
  };
  scatter(ops.Mu, mass_coef, 0, 0, false);
  scatter(ops.Ku, 1.0, 0, 0, false);
  scatter(convection, 1.0, 0, 0, false);
  scatter(ops.B, -1.0, nv, 0, true);  // -(P, div v) block, i.e. -B^T
  scatter(ops.B, 1.0, nv, 0, false);  // (q, div U) rows

  CsrMatrix a = CsrMatrix::from_triplets(t);
  Vector rhs(rhs_u);
  rhs.insert(rhs.end(), rhs_p.begin(), rhs_p.end());
  apply_dirichlet(a, rhs, velocity_bcs);

  MomentumSolution out;
  Vector x;
  if (enclosed) {
    Vector border(static_cast<size_t>(n), 0.0);
    for (int q = 0; q < np; ++q) border[nv + q] = ops.pressure_mean_weights[q];
    auto [sol, lambda] = solve_bordered(a, rhs, border);
    x = std::move(sol);
    out.lambda = lambda;
  } else {
    x = solve(a, rhs);
  }
  out.U.assign(x.begin(), x.begin() + nv);
  out.P.assign(x.begin() + nv, x.end());
  return out;
}

inline Vector solve_spin(const OperatorSet& ops, const CsrMatrix& convection,
                         double mass_coef, const Vector& rhs_w,
                         const std::vector<std::pair<int, double>>& spin_bcs) {
  const double four_nu_r = 4.0 * ops.params.nu_r;
  Triplets t(ops.spin.n_dofs, ops.spin.n_dofs);
  t.reserve(ops.Mw.nnz() * 2 + ops.Kw.nnz() + convection.nnz());
  auto scatter = [&t](const CsrMatrix& m, double scale) {
    const auto& off = m.row_offsets();
    const auto& col = m.col_indices();
    const auto& vals = m.values();
    for (int r = 0; r < m.rows(); ++r)
      for (int k = off[r]; k < off[r + 1]; ++k) t.add(r, col[k], scale * vals[k]);
  };
  scatter(ops.Mw, mass_coef + four_nu_r);
  scatter(ops.Kw, 1.0);
  scatter(convection, 1.0);

  CsrMatrix a = CsrMatrix::from_triplets(t);
  Vector rhs(rhs_w);
  apply_dirichlet(a, rhs, spin_bcs);
  return solve(a, rhs);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Projections
// ---------------------------------------------------------------------------

/// Stokes projection of exact (u, p): the discrete pair matching the exact one
/// in the forms nu0 (grad ., grad v) - (., div v) and (q, div .). The discrete
/// pressure is mean-zero when the velocity is Dirichlet on the whole boundary.
inline std::pair<Vector, Vector> stokes_projection(const OperatorSet& ops,
                                                   const ExactFields& exact,
                                                   const BoundaryData& bd, double t) {
  const auto cb = detail::cell_basis(ops.mesh, ElementOrder::Q2, kQuadNonlinear);
  const auto cbp = detail::cell_basis(ops.mesh, ElementOrder::Q1, kQuadNonlinear);
  const double nu0 = ops.params.nu0();

  Vector rhs_u(static_cast<size_t>(ops.velocity.n_dofs), 0.0);
  Vector rhs_p(static_cast<size_t>(ops.pressure.n_dofs), 0.0);
  for (int cell = 0; cell < ops.mesh.n_cells(); ++cell) {
    const auto o = ops.mesh.cell_origin(cell);
    const int* vn = ops.velocity.cell_node_ids(cell);
    const int* pn = ops.pressure.cell_node_ids(cell);
    for (int qp = 0; qp < cb.nq; ++qp) {
      const double x = o[0] + cb.qp_offset[qp][0], y = o[1] + cb.qp_offset[qp][1];
      const auto gu = exact.grad_u(x, y, t);  // [u1x, u1y, u2x, u2y]
      const double pv = exact.p(x, y, t);
      const double div_u = gu[0] + gu[3];
      for (int s = 0; s < cb.n; ++s) {
        const double gx = cb.gx[qp * cb.n + s], gy = cb.gy[qp * cb.n + s];
        rhs_u[ops.velocity.dof(vn[s], 0)] +=
            cb.w[qp] * (nu0 * (gu[0] * gx + gu[1] * gy) - pv * gx);
        rhs_u[ops.velocity.dof(vn[s], 1)] +=
            cb.w[qp] * (nu0 * (gu[2] * gx + gu[3] * gy) - pv * gy);
      }
      for (int p = 0; p < cbp.n; ++p)
        rhs_p[pn[p]] += cb.w[qp] * cbp.val[qp * cbp.n + p] * div_u;
    }
  }

  CsrMatrix no_convection = CsrMatrix::from_triplets(
      Triplets(ops.velocity.n_dofs, ops.velocity.n_dofs));
  const auto bcs = interpolate_boundary(ops.velocity, bd, t);
  const auto sol = detail::solve_momentum(ops, no_convection, 0.0, rhs_u, rhs_p, bcs,
                                          bd.velocity_fully_dirichlet());
  return {sol.U, sol.P};
}

/// Elliptic-like projection of the exact spin: matches it in
/// c1 (grad ., grad w) + 4 nu_r (., w). The planar grad-div term is absent.
inline Vector elliptic_projection(const OperatorSet& ops, const ExactFields& exact,
                                  const BoundaryData& bd, double t) {
  const auto cb = detail::cell_basis(ops.mesh, ElementOrder::Q2, kQuadNonlinear);
  const double c1 = ops.params.c1();
  const double four_nu_r = 4.0 * ops.params.nu_r;

  Vector rhs(static_cast<size_t>(ops.spin.n_dofs), 0.0);
  for (int cell = 0; cell < ops.mesh.n_cells(); ++cell) {
    const auto o = ops.mesh.cell_origin(cell);
    const int* wn = ops.spin.cell_node_ids(cell);
    for (int qp = 0; qp < cb.nq; ++qp) {
      const double x = o[0] + cb.qp_offset[qp][0], y = o[1] + cb.qp_offset[qp][1];
      const auto gw = exact.grad_w(x, y, t);
      const double wv = exact.w(x, y, t);
      for (int s = 0; s < cb.n; ++s)
        rhs[wn[s]] += cb.w[qp] * (c1 * (gw[0] * cb.gx[qp * cb.n + s] +
                                        gw[1] * cb.gy[qp * cb.n + s]) +
                                  four_nu_r * wv * cb.val[qp * cb.n + s]);
    }
  }

  CsrMatrix no_convection =
      CsrMatrix::from_triplets(Triplets(ops.spin.n_dofs, ops.spin.n_dofs));
  const auto bcs = interpolate_boundary(ops.spin, bd, t);
  return detail::solve_spin(ops, no_convection, 0.0, rhs, bcs);
}

/// Stokes projection of an arbitrary discrete velocity field (right-hand side
/// formed by the assembled operators). Used to manufacture divergence-free
/// initial states from raw dof vectors.
inline std::pair<Vector, Vector> stokes_projection_discrete(
    const OperatorSet& ops, const Vector& u_any,
    const std::vector<std::pair<int, double>>& velocity_bcs) {
  CsrMatrix no_convection = CsrMatrix::from_triplets(
      Triplets(ops.velocity.n_dofs, ops.velocity.n_dofs));
  const Vector rhs_u = ops.Ku.multiply(u_any);
  const Vector rhs_p = ops.B.multiply(u_any);
  const auto sol =
      detail::solve_momentum(ops, no_convection, 0.0, rhs_u, rhs_p, velocity_bcs, true);
  return {sol.U, sol.P};
}

inline Vector elliptic_projection_discrete(
    const OperatorSet& ops, const Vector& w_any,
    const std::vector<std::pair<int, double>>& spin_bcs) {
  CsrMatrix no_convection =
      CsrMatrix::from_triplets(Triplets(ops.spin.n_dofs, ops.spin.n_dofs));
  Vector rhs = ops.Kw.multiply(w_any);
  const Vector mw = ops.Mw.multiply(w_any);
  axpy(4.0 * ops.params.nu_r, mw, rhs);
  return detail::solve_spin(ops, no_convection, 0.0, rhs, spin_bcs);
}

/// Initial state: Stokes and elliptic-like projections of the exact data when
/// available, the rest state otherwise.
inline TimeState init_first_order(const OperatorSet& ops, const ExactFields* exact,
                                  const BoundaryData& bd, double t0 = 0.0) {
  TimeState s;
  s.step = 0;
  if (exact) {
    auto [u0, p0] = stokes_projection(ops, *exact, bd, t0);
    s.U = std::move(u0);
    s.P = std::move(p0);
    s.W = elliptic_projection(ops, *exact, bd, t0);
  } else {
    s.U.assign(static_cast<size_t>(ops.velocity.n_dofs), 0.0);
    s.W.assign(static_cast<size_t>(ops.spin.n_dofs), 0.0);
    s.P.assign(static_cast<size_t>(ops.pressure.n_dofs), 0.0);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Time steps
// ---------------------------------------------------------------------------

/// One step of the decoupled first-order scheme: the saddle momentum solve with
/// time-lagged convection and spin coupling, then the spin solve advected by
/// the new velocity. Sources may be null (treated as zero).
inline void step_first_order(TimeState& state, const OperatorSet& ops, const VectorFn& f,
                             const ScalarFn& g, const BoundaryData& bd, double tau,
                             double t_new) {
  const int k = state.step + 1;
  const double jj = ops.params.j;

  const CsrMatrix conv_u =
      assemble_convection(ops.mesh, ops.velocity, ops.velocity, state.U, 1.0);
  Vector rhs_u = ops.Mu.multiply(state.U);
  for (double& v : rhs_u) v /= tau;
  {
    const Vector curl_w = ops.Rwu.multiply(state.W);
    axpy(1.0, curl_w, rhs_u);
  }
  if (f) axpy(1.0, assemble_load(ops.mesh, ops.velocity, f, t_new), rhs_u);
  Vector rhs_p(static_cast<size_t>(ops.pressure.n_dofs), 0.0);

  const auto bcs_u = interpolate_boundary(ops.velocity, bd, t_new);
  auto mom = detail::solve_momentum(ops, conv_u, 1.0 / tau, rhs_u, rhs_p, bcs_u,
                                    bd.velocity_fully_dirichlet());
  detail::check_finite(mom.U, "velocity", k);
  detail::check_finite(mom.P, "pressure", k);

  const CsrMatrix conv_w = assemble_convection(ops.mesh, ops.spin, ops.velocity, mom.U, jj);
  Vector rhs_w = ops.Mw.multiply(state.W);
  for (double& v : rhs_w) v *= jj / tau;
  axpy(1.0, ops.Ruw.multiply(mom.U), rhs_w);
  if (g) axpy(1.0, assemble_load(ops.mesh, ops.spin, g, t_new), rhs_w);

  const auto bcs_w = interpolate_boundary(ops.spin, bd, t_new);
  Vector w_new = detail::solve_spin(ops, conv_w, jj / tau, rhs_w, bcs_w);
  detail::check_finite(w_new, "spin", k);

  state.U_prev2 = std::move(state.U_prev);
  state.W_prev2 = std::move(state.W_prev);
  state.U_prev = std::move(state.U);
  state.W_prev = std::move(state.W);
  state.U = std::move(mom.U);
  state.P = std::move(mom.P);
  state.W = std::move(w_new);
  state.step = k;
}

inline Vector extrapolate2(const Vector& prev, const Vector& prev2) {
  Vector out(prev.size());
  for (size_t i = 0; i < prev.size(); ++i) out[i] = 2.0 * prev[i] - prev2[i];
  return out;
}

/// One BDF2 step with second-order extrapolation of the advecting velocity and
/// of the spin entering the momentum equation. Requires levels k-1 and k-2.
inline void step_bdf2(TimeState& state, const OperatorSet& ops, const VectorFn& f,
                      const ScalarFn& g, const BoundaryData& bd, double tau,
                      double t_new) {
  const int k = state.step + 1;
  const double jj = ops.params.j;
  if (state.U_prev.empty() || state.W_prev.empty())
    throw std::logic_error("step_bdf2: needs two start-up levels");

  const Vector u_star = extrapolate2(state.U, state.U_prev);
  const Vector w_star = extrapolate2(state.W, state.W_prev);

  const CsrMatrix conv_u =
      assemble_convection(ops.mesh, ops.velocity, ops.velocity, u_star, 1.0);
  // (4 U^{k-1} - U^{k-2}) / (2 tau) mass contribution
  Vector combo(state.U.size());
  for (size_t i = 0; i < combo.size(); ++i)
    combo[i] = (4.0 * state.U[i] - state.U_prev[i]) / (2.0 * tau);
  Vector rhs_u = ops.Mu.multiply(combo);
  axpy(1.0, ops.Rwu.multiply(w_star), rhs_u);
  if (f) axpy(1.0, assemble_load(ops.mesh, ops.velocity, f, t_new), rhs_u);
  Vector rhs_p(static_cast<size_t>(ops.pressure.n_dofs), 0.0);

  const auto bcs_u = interpolate_boundary(ops.velocity, bd, t_new);
  auto mom = detail::solve_momentum(ops, conv_u, 1.5 / tau, rhs_u, rhs_p, bcs_u,
                                    bd.velocity_fully_dirichlet());
  detail::check_finite(mom.U, "velocity", k);
  detail::check_finite(mom.P, "pressure", k);

  const CsrMatrix conv_w = assemble_convection(ops.mesh, ops.spin, ops.velocity, mom.U, jj);
  Vector combo_w(state.W.size());
  for (size_t i = 0; i < combo_w.size(); ++i)
    combo_w[i] = jj * (4.0 * state.W[i] - state.W_prev[i]) / (2.0 * tau);
  Vector rhs_w = ops.Mw.multiply(combo_w);
  axpy(1.0, ops.Ruw.multiply(mom.U), rhs_w);
  if (g) axpy(1.0, assemble_load(ops.mesh, ops.spin, g, t_new), rhs_w);

  const auto bcs_w = interpolate_boundary(ops.spin, bd, t_new);
  Vector w_new = detail::solve_spin(ops, conv_w, 1.5 * jj / tau, rhs_w, bcs_w);
  detail::check_finite(w_new, "spin", k);

  state.U_prev2 = std::move(state.U_prev);
  state.W_prev2 = std::move(state.W_prev);
  state.U_prev = std::move(state.U);
  state.W_prev = std::move(state.W);
  state.U = std::move(mom.U);
  state.P = std::move(mom.P);
  state.W = std::move(w_new);
  state.step = k;
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

struct TimestepCheck {
  bool ok = true;
  double bound = std::numeric_limits<double>::infinity();
};

/// BDF2 stability condition tau <= j*nu / (8*nu_r^2); unconstrained for nu_r=0.
inline TimestepCheck check_bdf2_timestep(const MaterialParams& params, double tau) {
  TimestepCheck out;
  if (params.nu_r > 0.0) out.bound = params.j * params.nu / (8.0 * params.nu_r * params.nu_r);
  out.ok = tau <= out.bound;
  return out;
}

struct EnergyCheck {
  bool holds = true;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;      ///< rhs - lhs (nonnegative when the bound holds)
  double rel_slack = 0.0;  ///< slack / max(lhs, rhs)
};

/// Per-step energy inequality of the first-order scheme (homogeneous Dirichlet
/// data): checks
///   |U^k|^2 + (j+4 nu_r tau)|W^k|^2 + |dU|^2 + j|dW|^2
///     + tau nu |grad U^k|^2 + tau c1 |grad W^k|^2
///   <= |U^{k-1}|^2 + (j+4 nu_r tau)|W^{k-1}|^2
///     + (Cp^2 nu_r tau / nu)|f^k|^2 + (Cp^2 nu_r tau / c1)|g^k|^2
/// with Cp = diam(Omega). Norms are taken through the assembled mass and
/// stiffness matrices.
inline EnergyCheck energy_step_check(const OperatorSet& ops, const TimeState& prev,
                                     const TimeState& next, double f_l2_sq,
                                     double g_l2_sq, double tau) {
  const auto& p = ops.params;
  const double cp2 = ops.poincare_constant() * ops.poincare_constant();
  const double spin_weight = p.j + 4.0 * p.nu_r * tau;

  Vector du(next.U.size()), dw(next.W.size());
  for (size_t i = 0; i < du.size(); ++i) du[i] = next.U[i] - prev.U[i];
  for (size_t i = 0; i < dw.size(); ++i) dw[i] = next.W[i] - prev.W[i];

  EnergyCheck out;
  out.lhs = quadratic_form(ops.Mu, next.U) + spin_weight * quadratic_form(ops.Mw, next.W) +
            quadratic_form(ops.Mu, du) + p.j * quadratic_form(ops.Mw, dw) +
            tau * p.nu * quadratic_form(ops.Ku_unit, next.U) +
            tau * p.c1() * quadratic_form(ops.Kw_unit, next.W);
  out.rhs = quadratic_form(ops.Mu, prev.U) + spin_weight * quadratic_form(ops.Mw, prev.W);
  if (f_l2_sq > 0.0) out.rhs += cp2 * p.nu_r * tau / p.nu * f_l2_sq;
  if (g_l2_sq > 0.0) out.rhs += cp2 * p.nu_r * tau / p.c1() * g_l2_sq;

  out.slack = out.rhs - out.lhs;
  const double scale = std::max({std::abs(out.lhs), std::abs(out.rhs), 1e-300});
  out.rel_slack = out.slack / scale;
  out.holds = out.rel_slack >= -1e-10;
  return out;
}

/// Discrete incompressibility residual max_q |(q_h, div U)| and the pressure
/// mean, straight from the assembled operators.
struct DivergenceCheck {
  double div_residual = 0.0;
  double pressure_mean = 0.0;
};

inline DivergenceCheck incompressibility_check(const OperatorSet& ops, const TimeState& s) {
  DivergenceCheck out;
  out.div_residual = max_abs(ops.B.multiply(s.U));
  out.pressure_mean = dot(ops.pressure_mean_weights, s.P) / ops.domain_area();
  return out;
}

// ---------------------------------------------------------------------------
// Time loop
// ---------------------------------------------------------------------------

struct EnergyRecord {
  int step = 0;
  double u_l2_sq = 0.0, w_l2_sq = 0.0;
  double grad_u_sq = 0.0, grad_w_sq = 0.0;
  double du_sq = 0.0, dw_sq = 0.0;
  double source_f_term = 0.0, source_g_term = 0.0;
  double weighted_energy = 0.0;  ///< |U|^2 + (j + 4 nu_r tau)|W|^2
  bool monitored = false;
  double monitor_rel_slack = 0.0;
};

struct EnergyLog {
  std::vector<EnergyRecord> records;
  bool monitor_active = false;
  bool monitor_ok = true;
  double worst_rel_slack = std::numeric_limits<double>::infinity();
};

struct SimulationSetup {
  SchemeKind scheme = SchemeKind::FirstOrder;
  double tau = 0.01;
  int steps = 1;
  VectorFn f;  // null means zero
  ScalarFn g;
  BoundaryData boundary;
  const ExactFields* exact = nullptr;  // enables projection initialization
  std::optional<TimeState> initial_override;
  std::function<void(int step, double t, const TimeState&)> snapshot;
  bool warn_stream = true;  // print BDF2 time-step warnings to stderr
};

struct RunResult {
  TimeState state;
  EnergyLog energy;
  TimestepCheck bdf2_check;  // meaningful for the BDF2 scheme only
};

namespace detail {

inline bool dirichlet_everywhere_and_zero(const OperatorSet& ops, const BoundaryData& bd,
                                          double t) {
  for (auto m : all_markers) {
    if (!bd.velocity[static_cast<int>(m)] || !bd.spin[static_cast<int>(m)]) return false;
  }
  for (const auto& [d, v] : interpolate_boundary(ops.velocity, bd, t))
    if (v != 0.0) return false;
  for (const auto& [d, v] : interpolate_boundary(ops.spin, bd, t))
    if (v != 0.0) return false;
  return true;
}

inline EnergyRecord make_record(const OperatorSet& ops, const TimeState& s,
                                const TimeState* prev, double tau) {
  EnergyRecord r;
  r.step = s.step;
  r.u_l2_sq = quadratic_form(ops.Mu, s.U);
  r.w_l2_sq = quadratic_form(ops.Mw, s.W);
  r.grad_u_sq = quadratic_form(ops.Ku_unit, s.U);
  r.grad_w_sq = quadratic_form(ops.Kw_unit, s.W);
  r.weighted_energy =
      r.u_l2_sq + (ops.params.j + 4.0 * ops.params.nu_r * tau) * r.w_l2_sq;
  if (prev) {
    Vector du(s.U.size()), dw(s.W.size());
    for (size_t i = 0; i < du.size(); ++i) du[i] = s.U[i] - prev->U[i];
    for (size_t i = 0; i < dw.size(); ++i) dw[i] = s.W[i] - prev->W[i];
    r.du_sq = quadratic_form(ops.Mu, du);
    r.dw_sq = quadratic_form(ops.Mw, dw);
  }
  return r;
}

}  // namespace detail

/// Runs the configured scheme for `steps` steps. The snapshot callback fires
/// after initialization (k=0) and after every accepted step. BDF2 start-up
/// uses projections of the exact solution at k=0,1 when available and one
/// first-order step otherwise.
inline RunResult run_simulation(const OperatorSet& ops, const SimulationSetup& setup) {
  if (setup.steps < 0) throw std::invalid_argument("run_simulation: negative step count");
  if (setup.steps > 0 && !(setup.tau > 0.0))
    throw std::invalid_argument("run_simulation: tau must be positive");

  RunResult result;
  const double tau = setup.tau;

  TimeState state = setup.initial_override
                        ? *setup.initial_override
                        : init_first_order(ops, setup.exact, setup.boundary);
  if (setup.snapshot) setup.snapshot(0, 0.0, state);

  result.energy.monitor_active =
      setup.scheme == SchemeKind::FirstOrder &&
      detail::dirichlet_everywhere_and_zero(ops, setup.boundary, 0.0);
  result.energy.records.push_back(detail::make_record(ops, state, nullptr, tau));

  int start_step = state.step + 1;
  if (setup.scheme == SchemeKind::Bdf2) {
    result.bdf2_check = check_bdf2_timestep(ops.params, tau);
    if (!result.bdf2_check.ok && setup.warn_stream)
      std::cerr << "warning: BDF2 time step tau=" << tau
                << " violates the stability bound tau <= j*nu/(8*nu_r^2) = "
                << result.bdf2_check.bound << "\n";
    const bool has_two_levels = state.step >= 1 && !state.U_prev.empty();
    if (setup.steps >= state.step + 1 && !has_two_levels) {
      if (setup.exact) {
        // Projections of the exact solution at t^1 provide the second level.
        TimeState lvl1 = init_first_order(ops, setup.exact, setup.boundary, tau);
        lvl1.step = 1;
        lvl1.U_prev = std::move(state.U);
        lvl1.W_prev = std::move(state.W);
        state = std::move(lvl1);
      } else {
        step_first_order(state, ops, setup.f, setup.g, setup.boundary, tau, tau);
      }
      if (setup.snapshot) setup.snapshot(1, tau, state);
      result.energy.records.push_back(detail::make_record(ops, state, nullptr, tau));
      start_step = 2;
    }
  }

  for (int k = start_step; k <= setup.steps; ++k) {
    const double t_new = tau * k;
    // Nonhomogeneous Dirichlet data is outside the monitored inequality.
    if (result.energy.monitor_active &&
        !detail::dirichlet_everywhere_and_zero(ops, setup.boundary, t_new))
      result.energy.monitor_active = false;
    TimeState prev_for_monitor;
    const bool monitoring = result.energy.monitor_active;
    if (monitoring) {
      prev_for_monitor.U = state.U;
      prev_for_monitor.W = state.W;
    }

    if (setup.scheme == SchemeKind::FirstOrder)
      step_first_order(state, ops, setup.f, setup.g, setup.boundary, tau, t_new);
    else
      step_bdf2(state, ops, setup.f, setup.g, setup.boundary, tau, t_new);

    EnergyRecord rec = detail::make_record(ops, state, nullptr, tau);
    {
      Vector du(state.U.size()), dw(state.W.size());
      for (size_t i = 0; i < du.size(); ++i) du[i] = state.U[i] - state.U_prev[i];
      for (size_t i = 0; i < dw.size(); ++i) dw[i] = state.W[i] - state.W_prev[i];
      rec.du_sq = quadratic_form(ops.Mu, du);
      rec.dw_sq = quadratic_form(ops.Mw, dw);
    }
    if (monitoring) {
      const double f_sq = setup.f ? detail::l2_norm_sq(ops.mesh, setup.f, t_new) : 0.0;
      const double g_sq = setup.g ? detail::l2_norm_sq(ops.mesh, setup.g, t_new) : 0.0;
      const auto& p = ops.params;
      const double cp2 = ops.poincare_constant() * ops.poincare_constant();
      rec.source_f_term = (f_sq > 0.0) ? cp2 * p.nu_r * tau / p.nu * f_sq : 0.0;
      rec.source_g_term = (g_sq > 0.0) ? cp2 * p.nu_r * tau / p.c1() * g_sq : 0.0;

      TimeState next_min;
      next_min.U = state.U;
      next_min.W = state.W;
      const EnergyCheck ec =
          energy_step_check(ops, prev_for_monitor, next_min, f_sq, g_sq, tau);
      rec.monitored = true;
      rec.monitor_rel_slack = ec.rel_slack;
      result.energy.monitor_ok = result.energy.monitor_ok && ec.holds;
      result.energy.worst_rel_slack =
          std::min(result.energy.worst_rel_slack, ec.rel_slack);
    }
    result.energy.records.push_back(rec);
    if (setup.snapshot) setup.snapshot(k, t_new, state);
  }

  result.state = std::move(state);
  return result;
}

}  // namespace mpns
