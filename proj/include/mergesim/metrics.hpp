#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "mergesim/core.hpp"

namespace mergesim {

struct VehicleMetrics {
  VehicleId id;
  VehicleClass cls = VehicleClass::CAV;
  RoadId road = RoadId::Main;
  double t_entry = 0.0;
  std::optional<double> t_exit;
  double travel_time = 0.0;
  double l2_energy = 0.0;
  double fuel = 0.0;
  std::optional<double> min_rear_gap_residual;
  std::optional<double> mp_clearance_residual;
};

/// Adds one tick of control effort and fuel; `active` is the part of the tick
/// during which the control acted (shorter than dt when braking to rest).
void accumulate(VehicleMetrics& m, double u, const VehicleState& state, double active,
                const FuelCoefficients& fuel);

void track_rear_gap(VehicleMetrics& m, double residual);

struct Stat {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t count = 0;
};

struct GroupMetrics {
  Stat travel_time;
  Stat l2_energy;
  Stat fuel;
};

struct AggregateMetrics {
  GroupMetrics all;
  GroupMetrics cav;
  GroupMetrics hdv;
};

/// Means and sample standard deviations over exited vehicles.
/// Throws Error(EmptyAggregate) when no row has exited.
AggregateMetrics aggregate(const std::vector<VehicleMetrics>& rows);

struct RunResult;

enum class ExportFormat : std::uint8_t { CSV, JSON };

std::string to_csv(const RunResult& result);
nlohmann::json to_json(const RunResult& result);
/// Writes `result` to `path`; throws Error(Io) on failure.
void export_result(const RunResult& result, ExportFormat format, const std::string& path);

/// Per-vehicle rows of a CSV produced by to_csv (summary block skipped).
std::vector<VehicleMetrics> parse_csv_rows(const std::string& csv);

nlohmann::json to_json(const AggregateMetrics& agg);

}  // namespace mergesim
