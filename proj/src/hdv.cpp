#include "mergesim/hdv.hpp"

#include <algorithm>
#include <cmath>

namespace mergesim {

HdvParams effective_params(const HdvParams& p) {
  if (p.model != HdvModel::Aggressive) return p;
  HdvParams q = p;
  q.headway_T *= 1.0 - p.aggression;
  q.min_gap_s0 *= 1.0 - p.aggression;
  q.desired_speed *= 1.0 + 0.2 * p.aggression;
  return q;
}

double idm_accel(double v, double gap, double leader_v, const HdvParams& p) {
  const double v0 = std::max(p.desired_speed, 1e-6);
  double u = p.accel_a * (1.0 - std::pow(v / v0, 4));
  if (gap >= 0.0) {
    const double dv = v - leader_v;
    const double s_star =
        std::max(0.0, p.min_gap_s0 + v * p.headway_T + v * dv / (2.0 * std::sqrt(p.accel_a * p.decel_b)));
    const double s = std::max(gap, 1e-3);
    u -= p.accel_a * (s_star / s) * (s_star / s);
  }
  return u;
}

namespace {

double follow(const VehicleRecord& self, const VehicleRecord* leader, const HdvParams& p) {
  if (leader == nullptr) return idm_accel(self.state.velocity, -1.0, 0.0, p);
  const double gap = leader->state.position - self.state.position;
  if (gap <= 0.0) return -1e9;
  return idm_accel(self.state.velocity, gap, leader->state.velocity, p);
}

}  // namespace

double hdv_control(const VehicleRecord& self, const VehicleRecord* leader, const HdvParams& params,
                   const ScenarioConfig& cfg) {
  double u = 0.0;
  if (params.model == HdvModel::ConstantSpeed) {
    u = kConstantSpeedGain * (params.desired_speed - self.state.velocity);
  } else {
    u = follow(self, leader, effective_params(params));
  }
  return std::clamp(u, cfg.u_min, cfg.u_max);
}

double hdv_control_az(const VehicleRecord& self, const VehicleRecord* leader,
                      const VehicleRecord* projected, const HdvParams& params,
                      const ScenarioConfig& cfg) {
  const double u_own = hdv_control(self, leader, params, cfg);
  if (projected == nullptr || params.model == HdvModel::ConstantSpeed) return u_own;
  if (params.model == HdvModel::Aggressive && params.aggression >= kProjectionAggressionCutoff)
    return u_own;
  if (projected->state.velocity < kProjectionMinSpeed) return u_own;
  // Pass only when reaching M at least one safe headway earlier at current speeds.
  const double t_self = (cfg.L - self.state.position) / std::max(self.state.velocity, 0.1);
  const double t_proj = (cfg.L - projected->state.position) / projected->state.velocity;
  if (t_proj > t_self + cfg.phi) return u_own;
  const double u_proj = follow(self, projected, effective_params(params));
  return std::clamp(std::min(u_own, u_proj), cfg.u_min, cfg.u_max);
}

}  // namespace mergesim
