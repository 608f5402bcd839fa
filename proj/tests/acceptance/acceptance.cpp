// Acceptance checks. One PASS/FAIL line per criterion; tolerances are fixed below.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mergesim/controller.hpp"
#include "mergesim/scenarios.hpp"
#include "mergesim/sim.hpp"
#include "oracle/oracle.hpp"
#include "support.hpp"

using namespace mergesim;
using namespace mergesim::testing;

namespace {

constexpr int kSnapshots = 1000;
constexpr double kSnapshotBudgetS = 10.0;
constexpr int kDisruptionInstances = 500;
constexpr double kRearEndTol = 1e-3;
constexpr double kSpeedTol = 1e-6;
constexpr int kTrajectoryInstances = 100;
constexpr double kBoundaryTol = 1e-6;
constexpr double kCostRelTol = 1e-3;
constexpr double kCostAbsFloor = 1e-6;
constexpr double kOracleGrid = 1e-3;
constexpr int kYieldScenarios = 50;
constexpr double kYieldOvershoot = 0.5;
constexpr int kSignSeeds = 20;
constexpr int kSignVehicles = 100;
constexpr double kSignAlpha = 0.05;
constexpr double kBlockedMaxSpeed = 1.0;
constexpr double kSsMinSpeed = 5.0;
constexpr int kTimingTicks = 100;
constexpr double kTickBudgetS = 0.1;

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<VehicleRecord> sz_snapshot(std::mt19937_64& rng, int n_max) {
  static const double pens[] = {0.2, 0.4, 0.6, 0.8};
  std::uniform_int_distribution<int> n(1, n_max);
  std::uniform_int_distribution<int> p(0, 3);
  const int count = n(rng);
  return random_snapshot(rng, count, pens[p(rng)]);
}

bool has_cav(const std::vector<VehicleRecord>& t) {
  return std::any_of(t.begin(), t.end(), [](const VehicleRecord& r) { return r.is_cav(); });
}

// Criteria 1 and 2 share the snapshot set.
std::pair<Verdict, Verdict> sequencing_soundness() {
  const ScenarioConfig cfg;
  std::mt19937_64 rng(20240601);
  int bad_safe = 0, bad_order = 0, bad_members = 0, with_cav = 0, bad_constructive = 0;
  const auto t0 = Clock::now();
  for (int k = 0; k < kSnapshots; ++k) {
    const auto sz = sz_snapshot(rng, 10);
    const auto out = coordinate(sz, std::nullopt, cfg);
    if (has_cav(sz) && !is_safe(out.sequence, sz, cfg)) ++bad_safe;
    if (!preserves_road_order(out.sequence, sz)) ++bad_order;
    std::set<VehicleId> a(out.sequence.order.begin(), out.sequence.order.end());
    std::set<VehicleId> b;
    for (const auto& r : sz) b.insert(r.id);
    if (a != b || out.sequence.order.size() != sz.size()) ++bad_members;
    if (has_cav(sz)) {
      ++with_cav;
      if (!is_safe(constructive_safe_sequence(sdf_sequence(sz), sz, cfg), sz, cfg)) ++bad_constructive;
    }
  }
  const double elapsed = seconds_since(t0);
  Verdict c1{bad_safe == 0 && bad_order == 0 && bad_members == 0 && elapsed < kSnapshotBudgetS,
             fmt("%d snapshots, unsafe=%d order=%d members=%d, %.2f s (budget %.0f s)", kSnapshots,
                 bad_safe, bad_order, bad_members, elapsed, kSnapshotBudgetS)};
  Verdict c2{bad_constructive == 0 && with_cav > 0,
             fmt("%d snapshots with a CAV, constructive unsafe=%d", with_cav, bad_constructive)};
  return {c1, c2};
}

Verdict disruption_optimality() {
  const ScenarioConfig cfg;
  std::mt19937_64 rng(77);
  int compared = 0, mismatched = 0;
  while (compared < kDisruptionInstances) {
    const auto sz = sz_snapshot(rng, 10);
    if (!has_cav(sz)) continue;
    const auto r1 = road_ids(sz, RoadId::Main);
    const auto r2 = road_ids(sz, RoadId::Side);
    const auto s0 = sdf_sequence(sz);
    const auto safe = enumerate_safe_sequences(r1, r2, sz, cfg, cfg.enumeration_cap);
    const auto best = oracle::brute_force_best_safe(r1, r2, sz, cfg);
    if (disruption(select_optimal(safe, s0, sz), s0) != best.min_disruption) ++mismatched;
    ++compared;
  }
  return {mismatched == 0, fmt("%d instances, mismatches=%d", compared, mismatched)};
}

Verdict cbf_invariance() {
  ScenarioConfig cfg;
  const double omega = 2.0 * M_PI / 20.0;
  VehicleState lead{60.0, 20.0, 0.0};
  VehicleState own{0.0, 20.0, 0.0};
  std::vector<double> prev;
  double worst_b3 = INFINITY, worst_speed = INFINITY;
  int fallbacks = 0;
  const int ticks = static_cast<int>(std::lround(60.0 / cfg.T_d));
  for (int k = 0; k < ticks; ++k) {
    const double t = k * cfg.T_d;
    const double u_lead = 5.0 * omega * std::cos(omega * t);  // v = 20 + 5 sin(wt)
    lead.accel = u_lead;

    QpInputs in;
    in.own = own;
    in.nominal = nominal_trajectory(own, prev, cfg);
    in.u_ref.assign(static_cast<std::size_t>(cfg.H), 0.0);
    in.v_ref.assign(static_cast<std::size_t>(cfg.H), cfg.v_max);
    in.predecessor = NeighborPrediction{VehicleId{1}, true, u_lead,
                                        predict_constant_accel(lead, cfg.H, cfg.T_d)};
    const auto qp = build_qp(in, cfg);
    auto res = solve_qp(qp);
    if (res.status != QpStatus::Optimal) res = solve_qp(qp, true);
    double u = 0.0;
    if (res.status == QpStatus::Optimal) {
      u = res.u[0];
      prev = res.u;
    } else {
      ++fallbacks;
      u = fallback_on_infeasible(own, lead, std::nullopt, cfg);
      prev.clear();
    }
    own = step(own, u, cfg.T_d, true);
    lead = step(lead, u_lead, cfg.T_d, true);
    worst_b3 = std::min(worst_b3, b_rear_end(own, lead, cfg) + cfg.barrier_margin);
    worst_speed = std::min({worst_speed, b_speed_max(own, cfg), b_speed_min(own, cfg)});
  }
  return {worst_b3 >= -kRearEndTol && worst_speed >= -kSpeedTol,
          fmt("min b3=%.4g m (tol %.0e), min speed barrier=%.3g (tol %.0e), fallbacks=%d", worst_b3,
              kRearEndTol, worst_speed, kSpeedTol, fallbacks)};
}

Verdict trajectory_optimality() {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> v0d(5.0, 30.0), vfd(5.0, 30.0), dd(50.0, 300.0);
  double worst_bnd = 0.0, worst_cost = 0.0, worst_gap = 0.0, worst_dt = 0.0;
  int n = 0, missing = 0;
  while (n < kTrajectoryInstances) {
    const double v0 = v0d(rng), vf = vfd(rng), d = dd(rng);
    LinearControlLaw law;
    try {
      law = solve_energy_optimal(0.0, v0, d, vf, 0.0, 120.0);
    } catch (const Error&) {
      continue;  // not a feasible instance
    }
    ++n;
    const auto end = law.state_at({0.0, v0, 0.0}, law.t_f);
    worst_bnd = std::max({worst_bnd, std::abs(end.position - d), std::abs(end.velocity - vf)});
    const auto ref = oracle::direct_trajectory_oracle(0.0, v0, d, vf, kOracleGrid);
    if (!ref.found) {
      ++missing;
      continue;
    }
    // The grid oracle only bounds the optimum from above, so the law may be cheaper.
    const double scale = std::max(ref.cost, kCostAbsFloor);
    worst_cost = std::max(worst_cost, (law.cost() - ref.cost) / scale);
    worst_gap = std::max(worst_gap, std::abs(law.cost() - ref.cost) / scale);
    worst_dt = std::max(worst_dt, std::abs(law.t_f - ref.t_f));
  }
  const ScenarioConfig cfg;
  double worst_tf = 0.0;
  for (const auto& [v0, dist] : {std::pair{10.0, 60.0}, {20.0, 60.0}, {15.0, 90.0}, {8.0, 40.0}}) {
    const auto y = solve_yield_stop(0.0, v0, dist, cfg);
    const auto ref = oracle::direct_trajectory_oracle(0.0, v0, dist, 0.0, kOracleGrid);
    worst_tf = ref.found ? std::max(worst_tf, std::abs(y.t_f - ref.t_f)) : INFINITY;
  }
  return {worst_bnd < kBoundaryTol && worst_cost <= kCostRelTol && worst_dt <= kOracleGrid &&
              missing == 0 && worst_tf <= kOracleGrid,
          fmt("%d instances, max boundary residual=%.2e, max cost excess over oracle=%.2e "
              "(max |gap| %.2e), max |dt_f|=%.2e, oracle misses=%d, yield |dt_f|=%.2e",
              n, worst_bnd, worst_cost, worst_gap, worst_dt, missing, worst_tf)};
}

struct YieldOutcome {
  bool yielded = false;
  bool overshoot = false;
  std::optional<double> residual;
};

YieldOutcome yield_scenario(std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.seed = seed;
  // Both vehicles start inside the awareness zone, where no resequencing applies.
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> xc(302.0, 320.0), gap(2.0, 8.0), vc(14.0, 17.0),
      vh(20.0, 24.0);
  const double x_cav = xc(rng);
  SimOptions opts;
  opts.record_traces = true;
  Simulation sim(cfg, opts);
  sim.set_arrivals({});
  const auto c = sim.add_vehicle(RoadId::Main, VehicleClass::CAV, {x_cav, vc(rng), 0.0});
  HdvParams p;
  p.model = HdvModel::Aggressive;
  p.aggression = 1.0;
  p.desired_speed = 25.0;
  const auto h = sim.add_vehicle(RoadId::Side, VehicleClass::HDV, {x_cav - gap(rng), vh(rng), 0.0}, p);
  while (!sim.finished()) sim.tick();
  const auto r = sim.result();

  YieldOutcome out;
  for (const auto& e : r.events)
    if (e.type == "yield_commit" && e.vehicle == c.value) out.yielded = true;
  const double t_hdv = find_record(r.records, h)->t_exit.value_or(INFINITY);
  for (const auto& tp : r.traces)
    if (tp.id == c.value && tp.t < t_hdv && tp.x > cfg.L - cfg.delta + kYieldOvershoot)
      out.overshoot = true;
  for (const auto& m : r.metrics)
    if (m.id == c) out.residual = m.mp_clearance_residual;
  return out;
}

Verdict yield_safety() {
  int yielded = 0, overshoot = 0, bad_residual = 0;
  for (int s = 1; s <= kYieldScenarios; ++s) {
    const auto y = yield_scenario(static_cast<std::uint64_t>(1000 + s));
    yielded += y.yielded;
    overshoot += y.overshoot;
    if (!y.residual || *y.residual < 0.0) ++bad_residual;
  }
  return {yielded == kYieldScenarios && overshoot == 0 && bad_residual == 0,
          fmt("%d scenarios, yielded=%d, overshoot=%d, negative clearance=%d", kYieldScenarios,
              yielded, overshoot, bad_residual)};
}

// One-sided exact binomial tail P(X >= wins) for X ~ Bin(n, 1/2).
double sign_test_p(int wins, int n) {
  double p = 0.0;
  for (int k = wins; k <= n; ++k) p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                                                std::lgamma(n - k + 1.0) - n * std::log(2.0));
  return p;
}

Verdict direction_trend() {
  bool ok = true;
  std::string detail;
  for (double pen : {0.2, 0.4, 0.6}) {
    int tt_wins = 0, tt_n = 0, e_wins = 0, e_n = 0;
    double tt_ss = 0, tt_sdf = 0, e_ss = 0, e_sdf = 0;
    for (int seed = 1; seed <= kSignSeeds; ++seed) {
      ScenarioConfig cfg;
      cfg.seed = static_cast<std::uint64_t>(seed);
      cfg.n_vehicles = kSignVehicles;
      cfg.penetration_rate = pen;
      SimOptions opts;
      opts.record_events = false;
      const auto ss = run(cfg, opts);
      cfg.sequencing_policy = SequencingPolicy::SDF;
      const auto sdf = run(cfg, opts);
      if (!ss.aggregate || !sdf.aggregate) {
        ok = false;
        continue;
      }
      const auto& a = ss.aggregate->all;
      const auto& b = sdf.aggregate->all;
      tt_ss += a.travel_time.mean;
      tt_sdf += b.travel_time.mean;
      e_ss += a.l2_energy.mean;
      e_sdf += b.l2_energy.mean;
      if (a.travel_time.mean != b.travel_time.mean) {
        ++tt_n;
        tt_wins += a.travel_time.mean < b.travel_time.mean;
      }
      if (a.l2_energy.mean != b.l2_energy.mean) {
        ++e_n;
        e_wins += a.l2_energy.mean < b.l2_energy.mean;
      }
    }
    const double p_tt = sign_test_p(tt_wins, tt_n);
    const double p_e = sign_test_p(e_wins, e_n);
    const bool cell = tt_ss <= tt_sdf && e_ss <= e_sdf && p_tt < kSignAlpha && p_e < kSignAlpha;
    ok = ok && cell;
    detail += fmt("[p=%.1f TT %.2f/%.2f wins %d/%d p=%.3f; E %.2f/%.2f wins %d/%d p=%.3f] ", pen,
                  tt_ss / kSignSeeds, tt_sdf / kSignSeeds, tt_wins, tt_n, p_tt, e_ss / kSignSeeds,
                  e_sdf / kSignSeeds, e_wins, e_n, p_e);
  }
  return {ok, detail + "(SS/SDF)"};
}

Verdict five_vehicle() {
  const auto ss = run_five_vehicle(SequencingPolicy::SS);
  const auto sdf = run_five_vehicle(SequencingPolicy::SDF);
  double ss_min = INFINITY;
  for (auto id : ss.ids.cavs()) ss_min = std::min(ss_min, ss.min_speed.at(id.value));
  const double blocked = sdf.min_speed.at(sdf.ids.trailing_side_cav.value);
  return {blocked < kBlockedMaxSpeed && ss_min > kSsMinSpeed && ss.result.complete &&
              sdf.result.complete,
          fmt("SDF blocked CAV min speed=%.3f m/s (< %.0f), SS min CAV speed=%.3f m/s (> %.0f)",
              blocked, kBlockedMaxSpeed, ss_min, kSsMinSpeed)};
}

Verdict realtime() {
  ScenarioConfig cfg;
  Simulation sim(cfg);
  sim.set_arrivals({});
  for (int k = 0; k < 10; ++k)
    sim.add_vehicle(RoadId::Main, k % 2 ? VehicleClass::HDV : VehicleClass::CAV,
                    {15.0 + 28.0 * k, 15.0, 0.0});
  for (int k = 0; k < 5; ++k)
    sim.add_vehicle(RoadId::Side, k % 2 ? VehicleClass::HDV : VehicleClass::CAV,
                    {30.0 + 55.0 * k, 15.0, 0.0});
  std::vector<double> times;
  for (int k = 0; k < kTimingTicks; ++k) {
    const auto t0 = Clock::now();
    sim.tick();
    times.push_back(seconds_since(t0));
  }
  std::nth_element(times.begin(), times.begin() + kTimingTicks / 2, times.end());
  const double median = times[kTimingTicks / 2];
  return {median < kTickBudgetS,
          fmt("median tick %.4f s over %d ticks (budget %.2f s)", median, kTimingTicks, kTickBudgetS)};
}

Verdict determinism() {
  ScenarioConfig cfg;
  cfg.seed = 11;
  cfg.n_vehicles = 100;
  const auto a = to_csv(run(cfg));
  const auto b = to_csv(run(cfg));
  return {a == b && !a.empty(), fmt("%zu bytes, identical=%s", a.size(), a == b ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::vector<int> only, known_red;
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  app.add_option("--known-red", known_red,
                 "Criteria whose FAIL does not change the exit status")
      ->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  auto wanted = [&](int c) { return only.empty() || std::count(only.begin(), only.end(), c); };
  int unexpected = 0;
  auto report = [&](int c, const Verdict& v) {
    std::printf("criterion %d: %s  %s\n", c, v.pass ? "PASS" : "FAIL", v.detail.c_str());
    std::fflush(stdout);
    if (!v.pass && !std::count(known_red.begin(), known_red.end(), c)) ++unexpected;
  };

  if (wanted(1) || wanted(2)) {
    const auto [c1, c2] = sequencing_soundness();
    if (wanted(1)) report(1, c1);
    if (wanted(2)) report(2, c2);
  }
  const std::pair<int, std::function<Verdict()>> rest[] = {
      {3, disruption_optimality}, {4, cbf_invariance}, {5, trajectory_optimality},
      {6, yield_safety},          {7, direction_trend}, {8, five_vehicle},
      {9, realtime},              {10, determinism}};
  for (const auto& [c, fn] : rest)
    if (wanted(c)) report(c, fn());
  return unexpected == 0 ? 0 : 1;
}
