#pragma once

#include <vector>

#include "mergesim/core.hpp"

namespace mergesim::testing {

inline VehicleRecord make_record(std::uint32_t id, RoadId road, VehicleClass cls, double x,
                                 double v, const ScenarioConfig& cfg = {}) {
  VehicleRecord r;
  r.id = VehicleId{id};
  r.road = road;
  r.cls = cls;
  r.state = {x, v, 0.0};
  r.zone = zone_for_position(x, cfg);
  if (cls == VehicleClass::HDV) r.hdv_params = HdvParams{};
  return r;
}

inline VehicleRecord cav(std::uint32_t id, RoadId road, double x, double v = 20.0) {
  return make_record(id, road, VehicleClass::CAV, x, v);
}

inline VehicleRecord hdv(std::uint32_t id, RoadId road, double x, double v = 20.0) {
  return make_record(id, road, VehicleClass::HDV, x, v);
}

inline std::vector<VehicleId> ids(std::initializer_list<std::uint32_t> raw) {
  std::vector<VehicleId> out;
  for (auto v : raw) out.push_back(VehicleId{v});
  return out;
}

}  // namespace mergesim::testing

#include <random>

namespace mergesim::testing {

/// Random sequencing-zone snapshot with `n` vehicles spread over both roads,
/// respecting a minimal same-road spacing.
inline std::vector<VehicleRecord> random_snapshot(std::mt19937_64& rng, int n, double penetration,
                                                  const ScenarioConfig& cfg = {}) {
  std::uniform_real_distribution<double> pos(0.0, cfg.sz_end() - 1.0);
  std::uniform_real_distribution<double> speed(cfg.init_speed_lo, cfg.init_speed_hi);
  std::bernoulli_distribution side(0.5);
  std::bernoulli_distribution is_cav(penetration);
  std::vector<VehicleRecord> out;
  std::uint32_t id = 1;
  int attempts = 0;
  while (static_cast<int>(out.size()) < n && attempts++ < 10000) {
    const RoadId road = side(rng) ? RoadId::Side : RoadId::Main;
    const double x = pos(rng);
    bool clash = false;
    for (const auto& r : out)
      if (r.road == road && std::abs(r.state.position - x) < 5.0) clash = true;
    if (clash) continue;
    out.push_back(make_record(id++, road, is_cav(rng) ? VehicleClass::CAV : VehicleClass::HDV, x,
                              speed(rng), cfg));
  }
  return out;
}

/// Ids of one road, closest to M first.
inline std::vector<VehicleId> road_ids(const std::vector<VehicleRecord>& sz, RoadId road) {
  std::vector<VehicleId> out;
  for (const auto& r : snapshot(sz, Zone::SequencingZone, {road, std::nullopt})) out.push_back(r.id);
  return out;
}

}  // namespace mergesim::testing
