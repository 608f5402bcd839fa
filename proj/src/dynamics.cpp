#include "mergesim/dynamics.hpp"

namespace mergesim {

VehicleState step(const VehicleState& s, double u, double dt, bool clamp_at_rest) {
  VehicleState out;
  out.accel = u;
  if (clamp_at_rest && u < 0.0) {
    if (s.velocity <= 0.0) {
      out.position = s.position;
      out.velocity = 0.0;
      out.accel = 0.0;
      return out;
    }
    const double t_stop = -s.velocity / u;
    if (t_stop < dt) {
      out.position = s.position + 0.5 * s.velocity * t_stop;
      out.velocity = 0.0;
      return out;
    }
  }
  out.position = s.position + s.velocity * dt + 0.5 * u * dt * dt;
  out.velocity = s.velocity + u * dt;
  return out;
}

PredictedTrajectory predict_constant_velocity(const VehicleState& s, int steps, double dt,
                                              double start_time) {
  PredictedTrajectory traj{start_time, dt, {}};
  traj.states.reserve(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k)
    traj.states.push_back({s.position + s.velocity * dt * k, s.velocity, 0.0});
  return traj;
}

PredictedTrajectory rollout(const VehicleState& s, const std::vector<double>& controls, double dt,
                            double start_time) {
  PredictedTrajectory traj{start_time, dt, {}};
  traj.states.reserve(controls.size() + 1);
  traj.states.push_back(s);
  for (double u : controls) traj.states.push_back(step(traj.states.back(), u, dt));
  return traj;
}

PredictedTrajectory predict_constant_accel(const VehicleState& s, int steps, double dt,
                                           double start_time) {
  PredictedTrajectory traj{start_time, dt, {}};
  traj.states.reserve(static_cast<std::size_t>(steps) + 1);
  traj.states.push_back(s);
  for (int k = 0; k < steps; ++k) traj.states.push_back(step(traj.states.back(), s.accel, dt, true));
  return traj;
}

}  // namespace mergesim
