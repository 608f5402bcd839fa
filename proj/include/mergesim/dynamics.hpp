#pragma once

#include <vector>

#include "mergesim/core.hpp"

namespace mergesim {

struct PredictedTrajectory {
  double start_time = 0.0;
  double dt = 0.0;
  std::vector<VehicleState> states;  // steps + 1 entries
};

/// Exact zero-order-hold update of the double integrator.
///
/// With `clamp_at_rest` the vehicle stops when v would cross zero under
/// braking and stays at rest for the remainder of the step. The MPC plant
/// model calls this with `clamp_at_rest = false`.
VehicleState step(const VehicleState& s, double u, double dt, bool clamp_at_rest = false);

PredictedTrajectory predict_constant_velocity(const VehicleState& s, int steps, double dt,
                                              double start_time = 0.0);

/// Rolls out a control sequence from `s` (no rest clamping).
PredictedTrajectory rollout(const VehicleState& s, const std::vector<double>& controls, double dt,
                            double start_time = 0.0);

/// Holds the last observed acceleration over the horizon, stopping at rest.
PredictedTrajectory predict_constant_accel(const VehicleState& s, int steps, double dt,
                                           double start_time = 0.0);

}  // namespace mergesim
