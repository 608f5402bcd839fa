#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mergesim {

enum class ErrorCode {
  InvalidConfig,
  TableInconsistency,
  LengthMismatch,
  EmptySafeSet,
  NoCavInSz,
  MisroutedConstraint,
  NoFiniteSolution,
  InfeasibleStop,
  EmptyHistory,
  EmptyAggregate,
  OracleSizeLimit,
  Io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Stable vehicle identifier. Assigned at spawn, never reused within a run.
struct VehicleId {
  std::uint32_t value = 0;

  friend auto operator<=>(const VehicleId&, const VehicleId&) = default;
};

enum class VehicleClass : std::uint8_t { CAV, HDV };
enum class RoadId : std::uint8_t { Main = 1, Side = 2 };
enum class Zone : std::uint8_t { SequencingZone, AwarenessZone, Exited };

inline RoadId other(RoadId r) { return r == RoadId::Main ? RoadId::Side : RoadId::Main; }
inline int road_index(RoadId r) { return static_cast<int>(r); }

const char* to_string(VehicleClass c);
const char* to_string(Zone z);

struct VehicleState {
  double position = 0.0;  // m from road origin
  double velocity = 0.0;  // m/s
  double accel = 0.0;     // m/s^2, last applied control
};

enum class HdvModel : std::uint8_t { ConstantSpeed, CarFollowing, Aggressive };

const char* to_string(HdvModel m);
HdvModel hdv_model_from_string(const std::string& s);

struct HdvParams {
  HdvModel model = HdvModel::CarFollowing;
  double desired_speed = 25.0;
  double headway_T = 1.5;
  double min_gap_s0 = 2.0;
  double accel_a = 1.4;
  double decel_b = 2.0;
  double aggression = 0.0;
  int seed_offset = 0;
};

struct ControlSample {
  double t = 0.0;
  double u = 0.0;
};

/// One row of the coordinator table.
struct VehicleRecord {
  VehicleId id;
  VehicleClass cls = VehicleClass::CAV;
  RoadId road = RoadId::Main;
  Zone zone = Zone::SequencingZone;
  VehicleState state;
  double t_entry = 0.0;
  std::optional<double> t_az;
  std::optional<double> t_exit;
  std::vector<ControlSample> control_history;
  std::optional<HdvParams> hdv_params;

  bool is_cav() const { return cls == VehicleClass::CAV; }
  bool is_hdv() const { return cls == VehicleClass::HDV; }
};

enum class SequencingPolicy : std::uint8_t { SS, SDF };

const char* to_string(SequencingPolicy p);
SequencingPolicy policy_from_string(const std::string& s);

struct FuelCoefficients {
  double w0 = 0.0, w1 = 0.0, w2 = 0.0, w3 = 0.0;
  double r0 = 0.0, r1 = 0.0, r2 = 0.0;
};

inline double cruise_fuel_rate(const FuelCoefficients& f, double v) {
  return f.w0 + v * (f.w1 + v * (f.w2 + v * f.w3));
}

/// Acceleration part of the fuel rate, floored at zero (no recovery when braking).
inline double accel_fuel_rate(const FuelCoefficients& f, double v, double u) {
  const double r = (f.r0 + v * (f.r1 + v * f.r2)) * u;
  return r > 0.0 ? r : 0.0;
}

/// All physical, controller, arrival and fuel parameters of a run (SI units).
struct ScenarioConfig {
  double L = 400.0;
  double L_SZ = 300.0;
  double L_AZ = 100.0;
  double phi = 1.8;
  double delta = 3.78;
  double barrier_margin = 0.5;  // extra standstill gap used only by the controller rows
  double v_min = 0.0;
  double v_max = 30.0;
  double u_min = -5.886;
  double u_max = 4.905;
  double T_d = 0.1;
  int H = 15;
  double beta1 = 1.0;
  double c3 = 1.0;
  double k1 = 1.0, k2 = 1.0, k3 = 1.0, k4 = 1.0, k5 = 1.0, k6 = 1.0;
  double gamma = 0.5;
  double arrival_rate_per_road = 600.0 / 3600.0;
  double penetration_rate = 0.5;
  double init_speed_lo = 16.67;
  double init_speed_hi = 27.78;
  FuelCoefficients fuel;
  std::uint64_t seed = 1;
  double alpha_oracle = 0.5;
  SequencingPolicy sequencing_policy = SequencingPolicy::SS;

  // run control and HDV population
  int n_vehicles = 100;
  double t_max = 1800.0;
  std::size_t enumeration_cap = 5000;
  HdvModel hdv_model = HdvModel::CarFollowing;
  double hdv_aggression = 0.0;

  double sz_end() const { return L - L_AZ; }
  /// Phi(x) = phi * x / L, the linear transition of the merge headway.
  double Phi(double x) const { return phi * x / L; }
  double dPhi() const { return phi / L; }
};

/// Throws Error(InvalidConfig) when an invariant of the config does not hold.
void validate(const ScenarioConfig& cfg);

double kmh_to_ms(double kmh);

ScenarioConfig load_config(const std::string& path);
ScenarioConfig parse_config(const std::string& text);
/// Applies one `key = value` pair; unknown keys throw.
void apply_config_entry(ScenarioConfig& cfg, const std::string& key, const std::string& value);

/// Zone implied by position alone.
Zone zone_for_position(double x, const ScenarioConfig& cfg);

struct SnapshotFilter {
  std::optional<RoadId> road;
  std::optional<VehicleClass> cls;
};

/// Records in `zone`, ordered by remaining distance L - x (closest to M first).
/// Ties fall back to (road, id).
std::vector<VehicleRecord> snapshot(const std::vector<VehicleRecord>& records, Zone zone,
                                    const SnapshotFilter& filter = {});

const VehicleRecord* find_record(const std::vector<VehicleRecord>& records, VehicleId id);
const VehicleRecord& require_record(const std::vector<VehicleRecord>& records, VehicleId id);

}  // namespace mergesim
