#include "mergesim/scenarios.hpp"

#include <algorithm>

namespace mergesim {

FiveVehicleIds populate_five_vehicle(Simulation& sim, const FiveVehicleScenario& sc) {
  sim.set_arrivals({});
  HdvParams aggressive;
  aggressive.model = HdvModel::Aggressive;
  aggressive.aggression = 1.0;
  // Aggressive scaling raises the desired speed by 20%; cruise at the common speed.
  aggressive.desired_speed = sc.speed / 1.2;
  HdvParams follower;
  follower.model = HdvModel::CarFollowing;
  follower.desired_speed = sc.speed;

  auto at = [&](double x) { return VehicleState{x, sc.speed, 0.0}; };
  FiveVehicleIds ids;
  ids.lead_side_cav = sim.add_vehicle(RoadId::Side, VehicleClass::CAV, at(sc.x_lead_side_cav));
  ids.main_cav = sim.add_vehicle(RoadId::Main, VehicleClass::CAV, at(sc.x_main_cav));
  ids.side_hdv = sim.add_vehicle(RoadId::Side, VehicleClass::HDV, at(sc.x_side_hdv), aggressive);
  ids.trailing_side_cav =
      sim.add_vehicle(RoadId::Side, VehicleClass::CAV, at(sc.x_trailing_side_cav));
  ids.main_hdv = sim.add_vehicle(RoadId::Main, VehicleClass::HDV, at(sc.x_main_hdv), follower);
  return ids;
}

FiveVehicleRun run_five_vehicle(SequencingPolicy policy, const FiveVehicleScenario& sc,
                                ScenarioConfig base) {
  base.sequencing_policy = policy;
  base.n_vehicles = 5;
  SimOptions opts;
  opts.record_traces = true;
  Simulation sim(base, opts);
  FiveVehicleRun out;
  out.ids = populate_five_vehicle(sim, sc);
  while (!sim.finished()) {
    sim.tick();
    if (out.first_sequence.empty() && sim.last_outcome())
      out.first_sequence = sim.last_outcome()->sequence.order;
  }
  out.result = sim.result();
  for (const auto& p : out.result.traces) {
    auto [it, fresh] = out.min_speed.try_emplace(p.id, p.v);
    if (!fresh) it->second = std::min(it->second, p.v);
  }
  for (const auto& e : out.result.events)
    if (e.type == "yield_commit") out.yielding_cavs.push_back(VehicleId{e.vehicle});
  return out;
}

}  // namespace mergesim
