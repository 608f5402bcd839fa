#include "mergesim/barriers.hpp"

#include <cmath>

namespace mergesim {

LinearControlConstraint LinearControlConstraint::as_geq() const {
  if (sense == Sense::GEQ0) return *this;
  return {-a_u, -a_e, -c, Sense::GEQ0, label};
}

double b_speed_max(const VehicleState& s, const ScenarioConfig& cfg) {
  return cfg.v_max - s.velocity;
}

double b_speed_min(const VehicleState& s, const ScenarioConfig& cfg) {
  return s.velocity - cfg.v_min;
}

double b_rear_end(const VehicleState& own, const VehicleState& pred, const ScenarioConfig& cfg) {
  return pred.position - own.position - cfg.phi * own.velocity - (cfg.delta + cfg.barrier_margin);
}

double b_merge_ahead(const VehicleState& own, const VehicleState& ahead, const ScenarioConfig& cfg) {
  return ahead.position - own.position - cfg.Phi(own.position) * own.velocity - (cfg.delta + cfg.barrier_margin);
}

double b_merge_behind(const VehicleState& own, const VehicleState& behind,
                      const ScenarioConfig& cfg) {
  return own.position - behind.position - cfg.Phi(behind.position) * behind.velocity - (cfg.delta + cfg.barrier_margin);
}

namespace {

// d/dt b_merge_behind with the follower's acceleration held at u_behind.
double bdot_merge_behind(const VehicleState& own, const VehicleState& behind, double u_behind,
                         const ScenarioConfig& cfg) {
  return own.velocity - behind.velocity - cfg.dPhi() * behind.velocity * behind.velocity -
         cfg.Phi(behind.position) * u_behind;
}

}  // namespace

double psi1_merge_behind(const VehicleState& own, const VehicleState& behind, double u_behind,
                         const ScenarioConfig& cfg) {
  return bdot_merge_behind(own, behind, u_behind, cfg) + cfg.k5 * b_merge_behind(own, behind, cfg);
}

double b_stop_envelope(const VehicleState& s, double x_stop, const ScenarioConfig& cfg) {
  return x_stop - s.position - s.velocity * s.velocity / (2.0 * std::abs(cfg.u_min));
}

SpeedLimitRows cbf_speed_limits(const VehicleState& s, const ScenarioConfig& cfg) {
  SpeedLimitRows rows;
  rows.upper = {-1.0, 0.0, cfg.k1 * b_speed_max(s, cfg), Sense::GEQ0, labels::kSpeedMax};
  rows.lower = {1.0, 0.0, cfg.k2 * b_speed_min(s, cfg), Sense::GEQ0, labels::kSpeedMin};
  return rows;
}

LinearControlConstraint cbf_rear_end(const VehicleState& own, const VehicleState& pred,
                                     const ScenarioConfig& cfg) {
  const double lf = pred.velocity - own.velocity;
  return {-cfg.phi, 0.0, lf + cfg.k3 * b_rear_end(own, pred, cfg), Sense::GEQ0, labels::kRearEnd};
}

LinearControlConstraint cbf_merge_ahead(const VehicleState& own, const VehicleState& ahead,
                                        const ScenarioConfig& cfg) {
  // d/dt [Phi(x) v] = (phi/L) v^2 + Phi(x) u
  const double lf = ahead.velocity - own.velocity - cfg.dPhi() * own.velocity * own.velocity;
  return {-cfg.Phi(own.position), 0.0, lf + cfg.k4 * b_merge_ahead(own, ahead, cfg), Sense::GEQ0,
          labels::kMergeAhead};
}

LinearControlConstraint hocbf_merge_behind(const VehicleState& own, const VehicleState& behind,
                                           bool behind_is_cav, double u_behind,
                                           double udot_behind, const ScenarioConfig& cfg) {
  if (!behind_is_cav)
    throw Error(ErrorCode::MisroutedConstraint, "merge_behind row requested for an HDV follower");
  const double bdot = bdot_merge_behind(own, behind, u_behind, cfg);
  const double psi1 = bdot + cfg.k5 * b_merge_behind(own, behind, cfg);
  // psi1' = u - u_m - 3 (phi/L) v_m u_m - Phi(x_m) udot_m + k5 * bdot
  const double drift = -u_behind - 3.0 * cfg.dPhi() * behind.velocity * u_behind -
                       cfg.Phi(behind.position) * udot_behind + cfg.k5 * bdot;
  return {1.0, 0.0, drift + cfg.k6 * psi1, Sense::GEQ0, labels::kMergeBehind};
}

LinearControlConstraint clf_track_speed(const VehicleState& s, double v_ref,
                                        const ScenarioConfig& cfg) {
  const double err = s.velocity - v_ref;
  return {2.0 * err, -1.0, cfg.c3 * err * err, Sense::LEQ0, labels::kClf};
}

LinearControlConstraint cbf_stop_envelope(const VehicleState& s, double x_stop,
                                          const ScenarioConfig& cfg) {
  const double brake = std::abs(cfg.u_min);
  const double b = b_stop_envelope(s, x_stop, cfg);
  return {-s.velocity / brake, 0.0, -s.velocity + cfg.k3 * b, Sense::GEQ0, labels::kStopEnvelope};
}

}  // namespace mergesim
