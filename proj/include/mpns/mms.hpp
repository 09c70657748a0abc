#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpns/assembly.hpp"
#include "mpns/schemes.hpp"

namespace mpns {

/// Closed-form manufactured solution: everything the forcing synthesis and the
/// error norms need, as pointwise callbacks of (x, y, t).
struct ManufacturedSolution {
  VectorFn u;
  std::function<std::array<double, 4>(double, double, double)> grad_u;  // u1x,u1y,u2x,u2y
  VectorFn u_t;
  VectorFn laplace_u;
  ScalarFn p;
  VectorFn grad_p;
  ScalarFn w;
  VectorFn grad_w;
  ScalarFn w_t;
  ScalarFn laplace_w;

  ExactFields exact() const { return ExactFields{u, grad_u, p, w, grad_w}; }

  BoundaryData dirichlet_boundary() const {
    return BoundaryData::dirichlet_everywhere(u, w);
  }
};

/// The validation solution on the unit square:
///   u = (sin(2 pi x + t) sin(2 pi y + t), cos(2 pi x + t) cos(2 pi y + t))
///   p = sin(2 pi (x - y) + t)
///   w = sin(2 pi x + t) sin(2 pi y + t)
/// u is divergence-free and p has zero mean for all t.
inline ManufacturedSolution trig_solution() {
  constexpr double k = 2.0 * M_PI;
  ManufacturedSolution ms;
  ms.u = [](double x, double y, double t) {
    return std::array<double, 2>{std::sin(k * x + t) * std::sin(k * y + t),
                                 std::cos(k * x + t) * std::cos(k * y + t)};
  };
  ms.grad_u = [](double x, double y, double t) {
    const double sx = std::sin(k * x + t), cx = std::cos(k * x + t);
    const double sy = std::sin(k * y + t), cy = std::cos(k * y + t);
    return std::array<double, 4>{k * cx * sy, k * sx * cy, -k * sx * cy, -k * cx * sy};
  };
  ms.u_t = [](double x, double y, double t) {
    const double sx = std::sin(k * x + t), cx = std::cos(k * x + t);
    const double sy = std::sin(k * y + t), cy = std::cos(k * y + t);
    return std::array<double, 2>{cx * sy + sx * cy, -(sx * cy + cx * sy)};
  };
  ms.laplace_u = [](double x, double y, double t) {
    const double sx = std::sin(k * x + t), cx = std::cos(k * x + t);
    const double sy = std::sin(k * y + t), cy = std::cos(k * y + t);
    return std::array<double, 2>{-2.0 * k * k * sx * sy, -2.0 * k * k * cx * cy};
  };
  ms.p = [](double x, double y, double t) { return std::sin(k * (x - y) + t); };
  ms.grad_p = [](double x, double y, double t) {
    const double c = std::cos(k * (x - y) + t);
    return std::array<double, 2>{k * c, -k * c};
  };
  ms.w = [](double x, double y, double t) {
    return std::sin(k * x + t) * std::sin(k * y + t);
  };
  ms.grad_w = [](double x, double y, double t) {
    return std::array<double, 2>{k * std::cos(k * x + t) * std::sin(k * y + t),
                                 k * std::sin(k * x + t) * std::cos(k * y + t)};
  };
  ms.w_t = [](double x, double y, double t) {
    return std::cos(k * x + t) * std::sin(k * y + t) +
           std::sin(k * x + t) * std::cos(k * y + t);
  };
  ms.laplace_w = [](double x, double y, double t) {
    return -2.0 * k * k * std::sin(k * x + t) * std::sin(k * y + t);
  };
  return ms;
}

/// Momentum forcing from the residual of the exact solution:
///   f = u_t - nu0 lap(u) + (u . grad) u + grad p - 2 nu_r curl w
/// with the planar curl w = (d_y w, -d_x w).
inline VectorFn mms_forcing_f(const MaterialParams& params, const ManufacturedSolution& ms) {
  return [params, ms](double x, double y, double t) {
    const auto u = ms.u(x, y, t);
    const auto gu = ms.grad_u(x, y, t);
    const auto ut = ms.u_t(x, y, t);
    const auto lu = ms.laplace_u(x, y, t);
    const auto gp = ms.grad_p(x, y, t);
    const auto gw = ms.grad_w(x, y, t);
    const double nu0 = params.nu0(), two_nu_r = 2.0 * params.nu_r;
    return std::array<double, 2>{
        ut[0] - nu0 * lu[0] + u[0] * gu[0] + u[1] * gu[1] + gp[0] - two_nu_r * gw[1],
        ut[1] - nu0 * lu[1] + u[0] * gu[2] + u[1] * gu[3] + gp[1] + two_nu_r * gw[0]};
  };
}

/// Angular forcing:
///   g = j w_t - c1 lap(w) + j (u . grad) w + 4 nu_r w - 2 nu_r curl u
/// with the planar curl u = d_x u2 - d_y u1.
inline ScalarFn mms_forcing_g(const MaterialParams& params, const ManufacturedSolution& ms) {
  return [params, ms](double x, double y, double t) {
    const auto u = ms.u(x, y, t);
    const auto gu = ms.grad_u(x, y, t);
    const auto gw = ms.grad_w(x, y, t);
    const double curl_u = gu[2] - gu[1];
    return params.j * ms.w_t(x, y, t) - params.c1() * ms.laplace_w(x, y, t) +
           params.j * (u[0] * gw[0] + u[1] * gw[1]) + 4.0 * params.nu_r * ms.w(x, y, t) -
           2.0 * params.nu_r * curl_u;
  };
}

/// Discrete error norms of one run against the exact solution:
/// l-infinity-in-time L2 errors for u and w, l2-in-time H1 seminorm errors for
/// u and w, and the l2-in-time L2 error of the mean-adjusted pressure.
struct ErrorReport {
  double linf_l2_u = 0.0, linf_l2_w = 0.0;
  double l2_h1_u = 0.0, l2_h1_w = 0.0;
  double l2_l2_p = 0.0;
  double h = 0.0, tau = 0.0;
};

/// Accumulates the per-step errors as snapshots arrive; finalize() applies the
/// time weights (max over k for l-infinity, sqrt(sum tau * e_k^2) for l2).
class ErrorAccumulator {
 public:
  ErrorAccumulator(const OperatorSet& ops, const ManufacturedSolution& ms)
      : ops_(&ops), ms_(&ms) {}

  void add(double t, const TimeState& s) {
    const auto& ops = *ops_;
    const auto cb = detail::cell_basis(ops.mesh, ElementOrder::Q2, kQuadNonlinear);
    const auto cbp = detail::cell_basis(ops.mesh, ElementOrder::Q1, kQuadNonlinear);

    double eu_l2 = 0.0, eu_h1 = 0.0, ew_l2 = 0.0, ew_h1 = 0.0;
    double ep_sq = 0.0, ep_int = 0.0;
    for (int cell = 0; cell < ops.mesh.n_cells(); ++cell) {
      const auto o = ops.mesh.cell_origin(cell);
      const int* vn = ops.velocity.cell_node_ids(cell);
      const int* pn = ops.pressure.cell_node_ids(cell);
      for (int qp = 0; qp < cb.nq; ++qp) {
        const double x = o[0] + cb.qp_offset[qp][0], y = o[1] + cb.qp_offset[qp][1];
        double uh0 = 0.0, uh1 = 0.0, wh = 0.0;
        double g00 = 0.0, g01 = 0.0, g10 = 0.0, g11 = 0.0, gw0 = 0.0, gw1 = 0.0;
        for (int i = 0; i < cb.n; ++i) {
          const double v = cb.val[qp * cb.n + i];
          const double gx = cb.gx[qp * cb.n + i], gy = cb.gy[qp * cb.n + i];
          const double c0 = s.U[ops.velocity.dof(vn[i], 0)];
          const double c1 = s.U[ops.velocity.dof(vn[i], 1)];
          const double cw = s.W[vn[i]];
          uh0 += c0 * v;
          uh1 += c1 * v;
          wh += cw * v;
          g00 += c0 * gx;
          g01 += c0 * gy;
          g10 += c1 * gx;
          g11 += c1 * gy;
          gw0 += cw * gx;
          gw1 += cw * gy;
        }
        double ph = 0.0;
        for (int i = 0; i < cbp.n; ++i) ph += s.P[pn[i]] * cbp.val[qp * cbp.n + i];

        const auto ue = ms_->u(x, y, t);
        const auto gue = ms_->grad_u(x, y, t);
        const double we = ms_->w(x, y, t);
        const auto gwe = ms_->grad_w(x, y, t);
        const double pe = ms_->p(x, y, t);

        const double wq = cb.w[qp];
        eu_l2 += wq * ((ue[0] - uh0) * (ue[0] - uh0) + (ue[1] - uh1) * (ue[1] - uh1));
        eu_h1 += wq * ((gue[0] - g00) * (gue[0] - g00) + (gue[1] - g01) * (gue[1] - g01) +
                       (gue[2] - g10) * (gue[2] - g10) + (gue[3] - g11) * (gue[3] - g11));
        ew_l2 += wq * (we - wh) * (we - wh);
        ew_h1 += wq * ((gwe[0] - gw0) * (gwe[0] - gw0) + (gwe[1] - gw1) * (gwe[1] - gw1));
        ep_sq += wq * (pe - ph) * (pe - ph);
        ep_int += wq * (pe - ph);
      }
    }
    // Mean adjustment: || e - mean(e) ||^2 = ||e||^2 - (int e)^2 / |Omega|
    const double ep_adj = std::max(0.0, ep_sq - ep_int * ep_int / ops.domain_area());

    max_l2_u_sq_ = std::max(max_l2_u_sq_, eu_l2);
    max_l2_w_sq_ = std::max(max_l2_w_sq_, ew_l2);
    sum_h1_u_sq_ += eu_h1;
    sum_h1_w_sq_ += ew_h1;
    sum_p_sq_ += ep_adj;
    ++count_;
  }

  ErrorReport finalize(double tau) const {
    ErrorReport r;
    r.linf_l2_u = std::sqrt(max_l2_u_sq_);
    r.linf_l2_w = std::sqrt(max_l2_w_sq_);
    r.l2_h1_u = std::sqrt(tau * sum_h1_u_sq_);
    r.l2_h1_w = std::sqrt(tau * sum_h1_w_sq_);
    r.l2_l2_p = std::sqrt(tau * sum_p_sq_);
    r.tau = tau;
    r.h = ops_->mesh.hx();
    return r;
  }

  int snapshots() const { return count_; }

 private:
  const OperatorSet* ops_;
  const ManufacturedSolution* ms_;
  double max_l2_u_sq_ = 0.0, max_l2_w_sq_ = 0.0;
  double sum_h1_u_sq_ = 0.0, sum_h1_w_sq_ = 0.0, sum_p_sq_ = 0.0;
  int count_ = 0;
};

/// Convergence table: one ErrorReport per mesh level plus the observed orders
/// log2(e_coarse / e_fine) between consecutive levels.
struct EocTable {
  struct OrderRow {
    double h_coarse = 0.0, h_fine = 0.0;
    double linf_l2_u = 0.0, linf_l2_w = 0.0;
    double l2_h1_u = 0.0, l2_h1_w = 0.0;
    double l2_l2_p = 0.0;
  };
  std::vector<int> levels;  // aligned with rows when produced by converge_study
  std::vector<ErrorReport> rows;
  std::vector<OrderRow> orders;
};

inline EocTable eoc(const std::vector<ErrorReport>& reports) {
  EocTable table;
  table.rows = reports;
  for (size_t i = 0; i + 1 < reports.size(); ++i) {
    const auto& c = reports[i];
    const auto& f = reports[i + 1];
    const double ratio = c.h / f.h;
    if (!(ratio > 1.9 && ratio < 2.1))
      throw std::invalid_argument("eoc: mesh sizes must halve between rows");
    auto ord = [](double ec, double ef) {
      if (!(ec > 0.0) || !(ef > 0.0))
        throw std::invalid_argument("eoc: nonpositive error value");
      return std::log2(ec / ef);
    };
    EocTable::OrderRow row;
    row.h_coarse = c.h;
    row.h_fine = f.h;
    row.linf_l2_u = ord(c.linf_l2_u, f.linf_l2_u);
    row.linf_l2_w = ord(c.linf_l2_w, f.linf_l2_w);
    row.l2_h1_u = ord(c.l2_h1_u, f.l2_h1_u);
    row.l2_h1_w = ord(c.l2_h1_w, f.l2_h1_w);
    row.l2_l2_p = ord(c.l2_l2_p, f.l2_l2_p);
    table.orders.push_back(row);
  }
  return table;
}

enum class StudyKind { H1Pressure, LinfL2 };

/// One manufactured-solution run: n-by-n unit square, `steps` first-order (or
/// BDF2) steps of size tau, Dirichlet data and forcing from the exact solution,
/// errors sampled at every step including k=0.
inline ErrorReport mms_error_run(const MaterialParams& params, int n, double tau, int steps,
                                 SchemeKind scheme = SchemeKind::FirstOrder) {
  const Mesh mesh = generate_rect_mesh({n, n, 1.0, 1.0});
  const OperatorSet ops = OperatorSet::build(mesh, params);
  const ManufacturedSolution ms = trig_solution();
  const ExactFields exact = ms.exact();

  ErrorAccumulator acc(ops, ms);
  SimulationSetup setup;
  setup.scheme = scheme;
  setup.tau = tau;
  setup.steps = steps;
  setup.f = mms_forcing_f(params, ms);
  setup.g = mms_forcing_g(params, ms);
  setup.boundary = ms.dirichlet_boundary();
  setup.exact = &exact;
  setup.snapshot = [&acc](int, double t, const TimeState& s) { acc.add(t, s); };
  run_simulation(ops, setup);
  return acc.finalize(tau);
}

/// The two rate studies: tau = h^2 for the energy-norm rates of u, w and the
/// pressure, tau = h^3 for the l-infinity(L2) rates of the velocities. Mesh
/// sizes h = 2^-i for the requested levels; T is reached exactly.
inline EocTable converge_study(StudyKind kind, const std::vector<int>& levels,
                               const MaterialParams& params, double final_time) {
  if (levels.size() < 1) throw std::invalid_argument("converge_study: no levels");
  for (size_t i = 0; i + 1 < levels.size(); ++i)
    if (levels[i + 1] != levels[i] + 1)
      throw std::invalid_argument("converge_study: levels must be consecutive");
  for (int lv : levels)
    if (lv < 2 || lv > 6)
      throw std::invalid_argument("converge_study: levels must lie in 2..6");

  std::vector<ErrorReport> reports;
  for (int lv : levels) {
    const int n = 1 << lv;
    const double h = 1.0 / n;
    const double tau = (kind == StudyKind::H1Pressure) ? h * h : h * h * h;
    const int steps = static_cast<int>(std::lround(final_time / tau));
    reports.push_back(mms_error_run(params, n, tau, steps));
  }
  EocTable table = eoc(reports);
  table.levels = levels;
  return table;
}

}  // namespace mpns
