#pragma once

#include <functional>
#include <vector>

#include "mergesim/core.hpp"
#include "mergesim/trajectory.hpp"

namespace mergesim {

struct HistorySample {
  double t = 0.0;
  VehicleState state;
  double u = 0.0;
};

struct AggressivenessEstimate {
  double value = 0.0;
  double window_start = 0.0;
};

/// Any map from an observed HDV trace to [0, 1] may replace the default.
using AggressivenessEstimator =
    std::function<AggressivenessEstimate(const std::vector<HistorySample>&, const ScenarioConfig&)>;

/// Default heuristic: 0.7 * mean speed relative to the stopping envelope at the
/// current distance to M, plus 0.3 * mean positive acceleration over u_max.
/// Throws Error(EmptyHistory) on an empty trace.
AggressivenessEstimate estimate_aggressiveness(const std::vector<HistorySample>& history,
                                               const ScenarioConfig& cfg);

enum class AzDecision : std::uint8_t { MergeAhead, Yield };

const char* to_string(AzDecision d);

/// Stop point of the yield maneuver.
inline double yield_stop_point(const ScenarioConfig& cfg) { return cfg.L - cfg.delta; }

/// True while full braking still stops the CAV before the yield stop point.
bool yield_feasible(const VehicleState& cav, const ScenarioConfig& cfg);

AzDecision az_decide(const VehicleRecord& cav, const VehicleRecord* iminus,
                     const AggressivenessEstimate& a, const ScenarioConfig& cfg);

struct YieldStep {
  LinearControlLaw law;     // reference toward the stop point
  bool emergency = false;   // closed form infeasible: brake at u_min
  double x_stop = 0.0;
};

/// Re-plans the yield stop from the current state.
YieldStep execute_yield(const VehicleRecord& cav, double t, const ScenarioConfig& cfg);

}  // namespace mergesim
