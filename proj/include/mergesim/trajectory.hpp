#pragma once

#include "mergesim/core.hpp"

namespace mergesim {

/// u(t) = a (t - t0) + b on [t0, t_f]; zero afterwards.
struct LinearControlLaw {
  double a = 0.0;
  double b = 0.0;
  double t0 = 0.0;
  double t_f = 0.0;

  double u(double t) const;
  /// State reached at time t when starting from `s0` at t0.
  VehicleState state_at(const VehicleState& s0, double t) const;
  double duration() const { return t_f - t0; }
  /// Integral of u^2 / 2 over [t0, t_f].
  double cost() const;
};

inline constexpr double kDefaultTmax = 120.0;

/// Fixed-duration minimum-energy law between two double-integrator states.
LinearControlLaw fixed_time_min_energy(double x0, double v0, double x_f, double v_f, double T,
                                       double t0 = 0.0);

/// Free-final-time minimum-energy law reaching (x_f, v_f).
/// Throws Error(NoFiniteSolution) when no stationary final time lies in (0, t_max].
LinearControlLaw solve_energy_optimal(double x0, double v0, double x_f, double v_f,
                                      double t0 = 0.0, double t_max = kDefaultTmax);

/// Constant-acceleration profile reaching v_f over x_f - x0, clamped to the
/// control box. Used when the free-time problem has no finite solution.
LinearControlLaw constant_accel_fallback(double x0, double v0, double x_f, double v_f,
                                         const ScenarioConfig& cfg, double t0 = 0.0);

/// Energy-optimal stop at x_stop: a ramp whose deceleration fades to zero at rest.
/// Throws Error(InfeasibleStop) when the initial deceleration exceeds |u_min|.
LinearControlLaw solve_yield_stop(double x0, double v0, double x_stop, const ScenarioConfig& cfg,
                                  double t0 = 0.0);

double max_speed_to_stop(double distance, double u_min);

}  // namespace mergesim
