#pragma once

#include "mergesim/core.hpp"

namespace mergesim {

/// Gain of the constant-speed model, 1/s.
inline constexpr double kConstantSpeedGain = 1.0;
/// Projected cross-road leaders slower than this are ignored (m/s).
inline constexpr double kProjectionMinSpeed = 1.0;
/// Aggressive drivers at or above this level ignore cross-road traffic.
inline constexpr double kProjectionAggressionCutoff = 0.5;

/// Parameters after applying the aggression scaling of the Aggressive model.
HdvParams effective_params(const HdvParams& p);

/// Intelligent-driver acceleration; `gap` < 0 means free road. Not clamped.
double idm_accel(double v, double gap, double leader_v, const HdvParams& p);

/// HDV control against its same-road leader (nullptr: free road), clamped to the box.
double hdv_control(const VehicleRecord& self, const VehicleRecord* leader, const HdvParams& params,
                   const ScenarioConfig& cfg);

/// Awareness-zone variant: also reacts to `projected`, the nearest opposite-road
/// vehicle ahead by remaining distance, unless it is nearly stopped, would reach
/// M more than one headway phi after `self` at current speeds, or the driver is
/// aggressive enough to push through.
double hdv_control_az(const VehicleRecord& self, const VehicleRecord* leader,
                      const VehicleRecord* projected, const HdvParams& params,
                      const ScenarioConfig& cfg);

}  // namespace mergesim
