#pragma once

#include <string>

#include "mergesim/core.hpp"

namespace mergesim {

enum class Sense : std::uint8_t { GEQ0, LEQ0 };

/// a_u * u + a_e * e + c  {>=, <=}  0
struct LinearControlConstraint {
  double a_u = 0.0;
  double a_e = 0.0;
  double c = 0.0;
  Sense sense = Sense::GEQ0;
  std::string label;

  double residual(double u, double e = 0.0) const { return a_u * u + a_e * e + c; }
  bool satisfied(double u, double e = 0.0, double tol = 0.0) const {
    const double r = residual(u, e);
    return sense == Sense::GEQ0 ? r >= -tol : r <= tol;
  }
  /// Same constraint written as `>= 0`.
  LinearControlConstraint as_geq() const;
};

namespace labels {
inline constexpr const char* kSpeedMax = "speed_max";
inline constexpr const char* kSpeedMin = "speed_min";
inline constexpr const char* kRearEnd = "rear_end";
inline constexpr const char* kMergeAhead = "merge_ahead";
inline constexpr const char* kMergeBehind = "merge_behind";
inline constexpr const char* kClf = "clf";
inline constexpr const char* kStopEnvelope = "stop_envelope";
}  // namespace labels

// Barrier values. Each is >= 0 on the safe set.
double b_speed_max(const VehicleState& s, const ScenarioConfig& cfg);
double b_speed_min(const VehicleState& s, const ScenarioConfig& cfg);
double b_rear_end(const VehicleState& own, const VehicleState& pred, const ScenarioConfig& cfg);
double b_merge_ahead(const VehicleState& own, const VehicleState& ahead, const ScenarioConfig& cfg);
double b_merge_behind(const VehicleState& own, const VehicleState& behind,
                      const ScenarioConfig& cfg);
/// First-order HOCBF companion of b_merge_behind.
double psi1_merge_behind(const VehicleState& own, const VehicleState& behind, double u_behind,
                         const ScenarioConfig& cfg);
/// Distance margin to stop at `x_stop` under full braking.
double b_stop_envelope(const VehicleState& s, double x_stop, const ScenarioConfig& cfg);

struct SpeedLimitRows {
  LinearControlConstraint upper;
  LinearControlConstraint lower;
};

SpeedLimitRows cbf_speed_limits(const VehicleState& s, const ScenarioConfig& cfg);

LinearControlConstraint cbf_rear_end(const VehicleState& own, const VehicleState& pred,
                                     const ScenarioConfig& cfg);

LinearControlConstraint cbf_merge_ahead(const VehicleState& own, const VehicleState& ahead,
                                        const ScenarioConfig& cfg);

/// Order-2 barrier for merging ahead of a CAV. `behind_is_cav` must be true;
/// HDV followers are handled by resequencing and the awareness zone.
LinearControlConstraint hocbf_merge_behind(const VehicleState& own, const VehicleState& behind,
                                           bool behind_is_cav, double u_behind,
                                           double udot_behind, const ScenarioConfig& cfg);

/// Soft speed tracking, `2(v - v_ref) u - e + c3 (v - v_ref)^2 <= 0`.
LinearControlConstraint clf_track_speed(const VehicleState& s, double v_ref,
                                        const ScenarioConfig& cfg);

/// Keeps the vehicle inside the full-braking stopping envelope of `x_stop`.
LinearControlConstraint cbf_stop_envelope(const VehicleState& s, double x_stop,
                                          const ScenarioConfig& cfg);

}  // namespace mergesim
