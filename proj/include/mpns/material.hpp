#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace mpns {

/// Kinematic material constants of the micropolar fluid together with the
/// derived aggregates nu0 = nu + nu_r, c1 = c_a + c_d, c2 = c_0 + c_d - c_a.
/// In the planar reduction the spin is scalar and the c2 grad-div term
/// vanishes identically; c2 is still validated.
struct MaterialParams {
  double nu = 1.0;    ///< Newtonian kinematic viscosity
  double nu_r = 1.0;  ///< micro-rotation (vortex) viscosity
  double c_a = 1.0;   ///< angular viscosity, antisymmetric part
  double c_d = 1.0;   ///< angular viscosity, deviatoric part
  double c_0 = 1.0;   ///< angular bulk viscosity
  double j = 1.0;     ///< micro-inertia density

  double nu0() const { return nu + nu_r; }
  double c1() const { return c_a + c_d; }
  double c2() const { return c_0 + c_d - c_a; }

  /// Thermodynamic admissibility plus the positivity the scheme requires.
  void validate() const {
    auto fail = [](const std::string& msg) {
      throw std::invalid_argument("MaterialParams: " + msg);
    };
    if (!(nu >= 0.0)) fail("nu >= 0 violated (thermodynamic constraint)");
    if (!(nu_r >= 0.0)) fail("nu_r >= 0 violated (thermodynamic constraint)");
    if (!(c_d >= 0.0)) fail("c_d >= 0 violated (thermodynamic constraint)");
    if (!(c_a + c_d >= 0.0)) fail("c_a + c_d >= 0 violated (thermodynamic constraint)");
    if (!(3.0 * c_0 + 2.0 * c_d >= 0.0))
      fail("3*c_0 + 2*c_d >= 0 violated (thermodynamic constraint)");
    if (!(std::abs(c_d - c_a) <= c_a + c_d))
      fail("|c_d - c_a| <= c_a + c_d violated (thermodynamic constraint)");
    if (!(c1() > 0.0)) fail("c1 = c_a + c_d must be positive");
    if (!(c2() > 0.0)) fail("c2 = c_0 + c_d - c_a must be positive");
    if (!(j > 0.0)) fail("micro-inertia j must be positive");
  }
};

/// Uniform partition of [0, T] into K steps of size tau, t^k = k*tau.
struct TimeGrid {
  double tau = 0.0;
  int steps = 0;

  TimeGrid() = default;
  TimeGrid(double tau_, int steps_) : tau(tau_), steps(steps_) { validate(); }

  static TimeGrid from_final_time(double tau, double final_time) {
    const int k = static_cast<int>(std::lround(final_time / tau));
    return TimeGrid(tau, k);
  }

  double final_time() const { return tau * steps; }
  double time(int k) const { return tau * k; }

  void validate() const {
    if (!(tau > 0.0)) throw std::invalid_argument("TimeGrid: tau must be positive");
    if (steps < 1) throw std::invalid_argument("TimeGrid: step count must be >= 1");
  }
};

}  // namespace mpns
