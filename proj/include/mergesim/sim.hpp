#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mergesim/az.hpp"
#include "mergesim/controller.hpp"
#include "mergesim/metrics.hpp"
#include "mergesim/sequencing.hpp"

namespace mergesim {

struct SimClock {
  double t = 0.0;
  long tick = 0;
};

/// One line of the event log.
struct SimEvent {
  long tick = 0;
  double t = 0.0;
  std::uint32_t vehicle = 0;
  std::string type;
  nlohmann::json payload;
};

struct Arrival {
  double t = 0.0;
  RoadId road = RoadId::Main;
  VehicleClass cls = VehicleClass::CAV;
  double speed = 0.0;
  HdvParams hdv;
};

/// Poisson arrivals on both roads, merged by time and truncated to
/// cfg.n_vehicles. Depends only on the seed and arrival parameters, so runs
/// that differ only in policy see the same traffic.
std::vector<Arrival> arrival_schedule(const ScenarioConfig& cfg);

struct TracePoint {
  double t = 0.0;
  std::uint32_t id = 0;
  RoadId road = RoadId::Main;
  VehicleClass cls = VehicleClass::CAV;
  double x = 0.0;
  double v = 0.0;
  double u = 0.0;
};

struct SimOptions {
  bool record_traces = false;
  bool record_events = true;
  AggressivenessEstimator estimator = estimate_aggressiveness;
};

struct RunCounters {
  long spawned = 0;
  long exited = 0;
  long spawn_deferrals = 0;
  long resequence_ticks = 0;
  long mode_changes = 0;
  long qp_retries = 0;
  long qp_fallbacks = 0;
  long yields = 0;
  long emergency_stops = 0;
  long clearance_violations_cav = 0;
  long clearance_violations_hdv = 0;
};

struct RunResult {
  ScenarioConfig config;
  std::uint64_t seed = 0;
  std::vector<VehicleRecord> records;
  std::vector<VehicleMetrics> metrics;
  std::vector<SimEvent> events;
  std::vector<TracePoint> traces;
  std::optional<AggregateMetrics> aggregate;
  RunCounters counters;
  double t_end = 0.0;
  long ticks = 0;
  bool complete = false;  // false when t_max stopped the run first
};

/// Discrete-time engine. Controls are computed from the pre-tick snapshot and
/// integrated simultaneously.
class Simulation {
 public:
  explicit Simulation(ScenarioConfig cfg, SimOptions opts = {});

  /// Replaces the random arrival schedule.
  void set_arrivals(std::vector<Arrival> arrivals);
  /// Places a vehicle directly in the control zone (scripted scenarios).
  VehicleId add_vehicle(RoadId road, VehicleClass cls, const VehicleState& state,
                        std::optional<HdvParams> hdv = std::nullopt);

  void spawn_arrivals();
  void tick();
  bool finished() const;
  RunResult result() const;

  const std::vector<VehicleRecord>& table() const { return records_; }
  const SimClock& clock() const { return clock_; }
  const ScenarioConfig& config() const { return cfg_; }
  const std::optional<SequencingOutcome>& last_outcome() const { return outcome_; }
  const RunCounters& counters() const { return counters_; }
  const std::vector<SimEvent>& events() const { return events_; }
  /// Whether the CAV is currently in yield mode, and toward which HDV.
  std::optional<VehicleId> yielding_to(VehicleId cav) const;
  std::optional<ControllerMode> mode_of(VehicleId cav) const;

 private:
  struct CavRuntime {
    CavControllerState ctrl;
    bool yielding = false;
    VehicleId yield_hdv;
    Zone last_zone = Zone::SequencingZone;
    double cruise = 0.0;  // speed resumed in Retain
    // FallBehind target carried into the AZ until the gap to it opens.
    std::optional<VehicleId> pinned_ahead;
  };
  // Last vehicle past M; it leads the front vehicle of both roads.
  struct Tail {
    VehicleRecord rec;
    double desired_speed = 0.0;
    VehicleState pre;  // state at the start of the current tick
    double u = 0.0;    // control over the current tick
  };

  double cav_control(const VehicleRecord& rec, CavRuntime& rt, const MergeSequence& cz_order);
  double hdv_step_control(const VehicleRecord& rec, const MergeSequence& cz_order) const;
  const VehicleRecord* same_road_leader(const VehicleRecord& rec) const;
  const VehicleRecord* nearest_opposite_az(const VehicleRecord& rec) const;
  const VehicleRecord* opposite_tail(const VehicleRecord& rec) const;
  void log(std::uint32_t vehicle, const std::string& type, nlohmann::json payload = {});
  void finalize_exit(VehicleRecord& rec, const VehicleState& pre, double u, double tau);

  ScenarioConfig cfg_;
  SimOptions opts_;
  SimClock clock_;
  std::uint32_t next_id_ = 1;
  std::vector<VehicleRecord> records_;  // every vehicle ever spawned
  std::vector<VehicleMetrics> metrics_;
  std::deque<Arrival> pending_[2];
  std::map<std::uint32_t, CavRuntime> cav_rt_;
  std::map<std::uint32_t, std::vector<HistorySample>> hdv_trace_;
  std::map<std::uint32_t, double> desired_speed_;
  std::optional<Tail> tail_;
  std::optional<SequencingOutcome> outcome_;
  std::vector<SimEvent> events_;
  std::vector<TracePoint> traces_;
  RunCounters counters_;
  std::size_t expected_total_ = 0;
};

RunResult run(const ScenarioConfig& cfg, const SimOptions& opts = {});

}  // namespace mergesim
