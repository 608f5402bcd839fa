#pragma once

#include <map>
#include <vector>

#include "mergesim/sim.hpp"

namespace mergesim {

/// Fixed five-vehicle layout: three CAVs and two HDVs already in the
/// sequencing zone, all at 20 m/s. The side-road HDV is aggressive, the
/// main-road HDV follows cars normally.
struct FiveVehicleScenario {
  double x_lead_side_cav = 190.0;
  double x_main_cav = 125.0;
  double x_side_hdv = 120.0;
  double x_trailing_side_cav = 70.0;
  double x_main_hdv = 66.0;
  double speed = 20.0;
};

struct FiveVehicleIds {
  VehicleId lead_side_cav;
  VehicleId main_cav;
  VehicleId side_hdv;
  VehicleId trailing_side_cav;
  VehicleId main_hdv;

  std::vector<VehicleId> cavs() const { return {lead_side_cav, main_cav, trailing_side_cav}; }
  std::vector<VehicleId> all() const {
    return {lead_side_cav, main_cav, side_hdv, trailing_side_cav, main_hdv};
  }
};

struct FiveVehicleRun {
  FiveVehicleIds ids;
  RunResult result;
  std::vector<VehicleId> first_sequence;     // sequence chosen on the first tick
  std::map<std::uint32_t, double> min_speed; // over the whole run, per vehicle
  /// CAVs that committed to an awareness-zone yield.
  std::vector<VehicleId> yielding_cavs;
};

/// Places the five vehicles into a fresh simulation (no random arrivals).
FiveVehicleIds populate_five_vehicle(Simulation& sim, const FiveVehicleScenario& sc = {});

/// Runs the scenario to completion with traces recorded.
FiveVehicleRun run_five_vehicle(SequencingPolicy policy, const FiveVehicleScenario& sc = {},
                                ScenarioConfig base = {});

}  // namespace mergesim
