#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "mergesim/sim.hpp"

using namespace mergesim;

namespace {

ScenarioConfig small(std::uint64_t seed, int n = 30, double penetration = 0.5) {
  ScenarioConfig cfg;
  cfg.seed = seed;
  cfg.n_vehicles = n;
  cfg.penetration_rate = penetration;
  return cfg;
}

}  // namespace

TEST(Arrivals, PoissonCountWithinThreeSigma) {
  ScenarioConfig cfg;
  cfg.n_vehicles = 100000;
  cfg.seed = 21;
  const auto all = arrival_schedule(cfg);
  for (RoadId road : {RoadId::Main, RoadId::Side}) {
    const auto n = std::count_if(all.begin(), all.end(), [&](const Arrival& a) {
      return a.road == road && a.t <= 3600.0;
    });
    EXPECT_NEAR(static_cast<double>(n), 600.0, 3.0 * std::sqrt(600.0));
  }
  EXPECT_TRUE(std::is_sorted(all.begin(), all.end(),
                             [](const Arrival& a, const Arrival& b) { return a.t < b.t; }));
}

TEST(Arrivals, ZeroRateSpawnsNothing) {
  ScenarioConfig cfg;
  cfg.arrival_rate_per_road = 0.0;
  EXPECT_TRUE(arrival_schedule(cfg).empty());
  const auto r = run(cfg);
  EXPECT_EQ(r.counters.spawned, 0);
  EXPECT_TRUE(r.records.empty());
}

TEST(Arrivals, ScheduleIgnoresPolicy) {
  auto a = small(5, 40);
  auto b = a;
  b.sequencing_policy = SequencingPolicy::SDF;
  const auto sa = arrival_schedule(a);
  const auto sb = arrival_schedule(b);
  ASSERT_EQ(sa.size(), sb.size());
  for (std::size_t k = 0; k < sa.size(); ++k) {
    EXPECT_EQ(sa[k].t, sb[k].t);
    EXPECT_EQ(sa[k].road, sb[k].road);
    EXPECT_EQ(sa[k].cls, sb[k].cls);
    EXPECT_EQ(sa[k].speed, sb[k].speed);
  }
}

TEST(Simulation, DeterministicForSeed) {
  const auto a = run(small(3));
  const auto b = run(small(3));
  EXPECT_EQ(to_csv(a), to_csv(b));
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_NE(to_csv(a), to_csv(run(small(4))));
}

TEST(Simulation, LoneCavCrossesAtCruiseSpeed) {
  ScenarioConfig cfg;
  Simulation sim(cfg);
  sim.set_arrivals({});
  sim.add_vehicle(RoadId::Main, VehicleClass::CAV, {0.0, 20.0, 0.0});
  while (!sim.finished()) sim.tick();
  const auto r = sim.result();
  ASSERT_TRUE(r.complete);
  ASSERT_TRUE(r.metrics[0].t_exit);
  EXPECT_NEAR(*r.metrics[0].t_exit, cfg.L / 20.0, 2.0 * cfg.T_d);
  EXPECT_LT(r.metrics[0].l2_energy, 1e-6);
}

TEST(Simulation, SpawnDefersUntilHeadwayFits) {
  ScenarioConfig cfg;
  Simulation sim(cfg);
  Arrival a;
  a.speed = 20.0;
  sim.set_arrivals({a, a});
  double lead_x = 0.0;
  while (sim.counters().spawned < 2) {
    if (!sim.table().empty()) lead_x = sim.table()[0].state.position;
    sim.tick();
  }
  EXPECT_GT(sim.counters().spawn_deferrals, 0);
  EXPECT_GE(lead_x, cfg.phi * 20.0 + cfg.delta);
  while (!sim.finished()) sim.tick();
  EXPECT_EQ(sim.result().counters.exited, 2);
}

TEST(Simulation, FullPenetrationIsPolicyIndependent) {
  auto ss = small(8, 30, 1.0);
  auto sdf = ss;
  sdf.sequencing_policy = SequencingPolicy::SDF;
  EXPECT_EQ(to_csv(run(ss)), to_csv(run(sdf)));
}

TEST(Simulation, SingleVehicleRun) {
  const auto r = run(small(2, 1));
  EXPECT_TRUE(r.complete);
  EXPECT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.counters.exited, 1);
}

TEST(Simulation, EveryVehicleSpawnsAndExits) {
  for (std::uint64_t seed : {1u, 2u}) {
    const auto r = run(small(seed, 40, 0.4));
    ASSERT_TRUE(r.complete);
    EXPECT_EQ(r.counters.spawned, 40);
    EXPECT_EQ(r.counters.exited, 40);
    for (const auto& m : r.metrics) {
      ASSERT_TRUE(m.t_exit);
      EXPECT_GT(m.travel_time, 0.0);
      EXPECT_NEAR(m.travel_time, *m.t_exit - m.t_entry, 1e-9);
    }
  }
}

TEST(Simulation, NoSameRoadOverlap) {
  SimOptions opts;
  opts.record_traces = true;
  for (std::uint64_t seed : {1u, 6u}) {
    const auto r = run(small(seed, 40, 0.3), opts);
    std::map<std::pair<long, int>, std::vector<double>> lanes;
    for (const auto& p : r.traces)
      lanes[{std::lround(p.t / r.config.T_d), road_index(p.road)}].push_back(p.x);
    for (auto& [key, xs] : lanes) {
      std::sort(xs.begin(), xs.end());
      for (std::size_t k = 1; k < xs.size(); ++k) EXPECT_GT(xs[k] - xs[k - 1], 0.0);
    }
    for (const auto& m : r.metrics)
      if (m.min_rear_gap_residual)
        EXPECT_GT(*m.min_rear_gap_residual, -(r.config.phi * r.config.v_max + r.config.delta));
  }
}

TEST(Simulation, ClearanceAuditCleanUnderSsWithCarFollowing) {
  for (double p : {0.2, 0.6}) {
    const auto r = run(small(3, 50, p));
    ASSERT_TRUE(r.complete);
    EXPECT_EQ(r.counters.clearance_violations_cav, 0) << p;
    EXPECT_EQ(r.counters.clearance_violations_hdv, 0) << p;
    for (const auto& m : r.metrics)
      if (m.cls == VehicleClass::CAV && m.mp_clearance_residual)
        EXPECT_GE(*m.mp_clearance_residual, -1e-3);
  }
}

TEST(Simulation, AddVehiclePastMergeRejected) {
  Simulation sim(ScenarioConfig{});
  EXPECT_THROW(sim.add_vehicle(RoadId::Main, VehicleClass::CAV, {401.0, 20.0, 0.0}), Error);
}

TEST(Simulation, InvalidConfigRejected) {
  ScenarioConfig cfg;
  cfg.H = 0;
  EXPECT_THROW(Simulation{cfg}, Error);
}
