#include "mergesim/sim.hpp"

#include <algorithm>
#include <cmath>

#include "mergesim/hdv.hpp"

namespace mergesim {

namespace {

constexpr double kClearanceTol = 1e-3;

// Time in [0, dt] at which a ZOH step starting from `s` reaches `x_target`.
double crossing_time(const VehicleState& s, double u, double x_target, double dt) {
  const double d = x_target - s.position;
  if (d <= 0.0) return 0.0;
  double tau = dt;
  if (std::abs(u) < 1e-12) {
    if (s.velocity > 0.0) tau = d / s.velocity;
  } else {
    const double disc = s.velocity * s.velocity + 2.0 * u * d;
    if (disc >= 0.0) tau = (-s.velocity + std::sqrt(disc)) / u;
  }
  return std::clamp(tau, 0.0, dt);
}

VehicleState advance(const VehicleState& s, double u, double tau) {
  return {s.position + s.velocity * tau + 0.5 * u * tau * tau, s.velocity + u * tau, u};
}

std::size_t road_slot(RoadId r) { return r == RoadId::Main ? 0 : 1; }

}  // namespace

std::vector<Arrival> arrival_schedule(const ScenarioConfig& cfg) {
  std::vector<Arrival> all;
  if (cfg.arrival_rate_per_road <= 0.0) return all;
  for (RoadId road : {RoadId::Main, RoadId::Side}) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed & 0xffffffffu),
                      static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(road_index(road))};
    std::mt19937_64 eng(seq);
    std::exponential_distribution<double> gap(cfg.arrival_rate_per_road);
    std::bernoulli_distribution is_cav(cfg.penetration_rate);
    std::uniform_real_distribution<double> speed(cfg.init_speed_lo, cfg.init_speed_hi);
    double t = 0.0;
    for (int k = 0; k < cfg.n_vehicles; ++k) {
      Arrival a;
      t += gap(eng);
      a.t = t;
      a.road = road;
      a.cls = is_cav(eng) ? VehicleClass::CAV : VehicleClass::HDV;
      a.speed = speed(eng);
      a.hdv.model = cfg.hdv_model;
      a.hdv.aggression = cfg.hdv_aggression;
      a.hdv.desired_speed = a.speed;
      a.hdv.seed_offset = k;
      all.push_back(a);
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const Arrival& a, const Arrival& b) {
    return a.t != b.t ? a.t < b.t : a.road < b.road;
  });
  all.resize(std::min(all.size(), static_cast<std::size_t>(cfg.n_vehicles)));
  return all;
}

Simulation::Simulation(ScenarioConfig cfg, SimOptions opts) : cfg_(std::move(cfg)), opts_(std::move(opts)) {
  validate(cfg_);
  set_arrivals(arrival_schedule(cfg_));
}

void Simulation::set_arrivals(std::vector<Arrival> arrivals) {
  for (auto& q : pending_) q.clear();
  expected_total_ = static_cast<std::size_t>(counters_.spawned) + arrivals.size();
  for (auto& a : arrivals) pending_[road_slot(a.road)].push_back(a);
}

VehicleId Simulation::add_vehicle(RoadId road, VehicleClass cls, const VehicleState& state,
                                  std::optional<HdvParams> hdv) {
  VehicleRecord rec;
  rec.id = VehicleId{next_id_++};
  rec.cls = cls;
  rec.road = road;
  rec.state = state;
  rec.zone = zone_for_position(state.position, cfg_);
  if (rec.zone == Zone::Exited) throw Error(ErrorCode::InvalidConfig, "vehicle placed past M");
  rec.t_entry = clock_.t;
  if (rec.zone == Zone::AwarenessZone) rec.t_az = clock_.t;
  if (cls == VehicleClass::HDV) {
    HdvParams p = hdv.value_or(HdvParams{});
    if (!hdv) {
      p.model = cfg_.hdv_model;
      p.aggression = cfg_.hdv_aggression;
      p.desired_speed = state.velocity;
    }
    rec.hdv_params = p;
    desired_speed_[rec.id.value] = effective_params(p).desired_speed;
  } else {
    desired_speed_[rec.id.value] = state.velocity;
  }
  records_.push_back(rec);

  VehicleMetrics m;
  m.id = rec.id;
  m.cls = cls;
  m.road = road;
  m.t_entry = rec.t_entry;
  metrics_.push_back(m);
  ++counters_.spawned;
  ++expected_total_;
  log(rec.id.value, "spawn",
      {{"road", road_index(road)}, {"class", to_string(cls)}, {"x", state.position},
       {"v", state.velocity}});
  return rec.id;
}

void Simulation::spawn_arrivals() {
  for (auto& queue : pending_) {
    while (!queue.empty() && queue.front().t <= clock_.t + 1e-9) {
      const Arrival& a = queue.front();
      double last_x = std::numeric_limits<double>::infinity();
      for (const auto& r : records_)
        if (r.zone != Zone::Exited && r.road == a.road) last_x = std::min(last_x, r.state.position);
      if (std::isfinite(last_x) && last_x - cfg_.phi * a.speed - cfg_.delta < 0.0) {
        ++counters_.spawn_deferrals;
        break;
      }
      const VehicleState s{0.0, a.speed, 0.0};
      --expected_total_;  // add_vehicle counts it again
      add_vehicle(a.road, a.cls, s,
                  a.cls == VehicleClass::HDV ? std::optional<HdvParams>(a.hdv) : std::nullopt);
      queue.pop_front();
    }
  }
}

void Simulation::log(std::uint32_t vehicle, const std::string& type, nlohmann::json payload) {
  if (!opts_.record_events) return;
  events_.push_back({clock_.tick, clock_.t, vehicle, type, std::move(payload)});
}

const VehicleRecord* Simulation::same_road_leader(const VehicleRecord& rec) const {
  const VehicleRecord* best = nullptr;
  for (const auto& r : records_) {
    if (r.zone == Zone::Exited || r.road != rec.road || r.id == rec.id) continue;
    if (r.state.position <= rec.state.position) continue;
    if (best == nullptr || r.state.position < best->state.position) best = &r;
  }
  if (best == nullptr && tail_) best = &tail_->rec;
  return best;
}

const VehicleRecord* Simulation::nearest_opposite_az(const VehicleRecord& rec) const {
  const VehicleRecord* best = nullptr;
  for (const auto& r : records_) {
    if (r.zone != Zone::AwarenessZone || r.road == rec.road) continue;
    if (r.state.position <= rec.state.position) continue;
    if (best == nullptr || r.state.position < best->state.position) best = &r;
  }
  return best;
}

const VehicleRecord* Simulation::opposite_tail(const VehicleRecord& rec) const {
  return tail_ && tail_->rec.road != rec.road ? &tail_->rec : nullptr;
}

std::optional<VehicleId> Simulation::yielding_to(VehicleId cav) const {
  auto it = cav_rt_.find(cav.value);
  if (it == cav_rt_.end() || !it->second.yielding) return std::nullopt;
  return it->second.yield_hdv;
}

std::optional<ControllerMode> Simulation::mode_of(VehicleId cav) const {
  auto it = cav_rt_.find(cav.value);
  if (it == cav_rt_.end()) return std::nullopt;
  return it->second.ctrl.mode;
}

namespace {

NeighborPrediction predict_neighbor(const VehicleRecord& r, const ScenarioConfig& cfg) {
  return {r.id, r.is_cav(), r.state.accel, predict_constant_velocity(r.state, cfg.H, cfg.T_d)};
}

}  // namespace

double Simulation::cav_control(const VehicleRecord& rec, CavRuntime& rt,
                               const MergeSequence& cz_order) {
  const double t = clock_.t;
  const VehicleState& own = rec.state;
  CavControllerState& st = rt.ctrl;

  Assignment now;
  const MergeSequence* mode_seq = nullptr;
  const VehicleRecord* ahead = nullptr;
  const VehicleRecord* behind = nullptr;
  double x_target = cfg_.L;
  if (rec.zone == Zone::SequencingZone) {
    const Assignment* a = outcome_ ? outcome_->assignment_for(rec.id) : nullptr;
    if (a == nullptr)
      throw Error(ErrorCode::TableInconsistency,
                  "no assignment for CAV " + std::to_string(rec.id.value));
    now = *a;
    mode_seq = &outcome_->sequence;
    x_target = cfg_.sz_end();
    ahead = now.candidate_ahead ? &require_record(records_, *now.candidate_ahead)
                                : nearest_opposite_az(rec);
    if (ahead == nullptr) ahead = opposite_tail(rec);
    if (now.candidate_behind) behind = &require_record(records_, *now.candidate_behind);
  } else {
    const auto nb = neighbors(cz_order, rec.id, records_);
    ahead = nb.ahead ? &require_record(records_, *nb.ahead) : opposite_tail(rec);
    behind = nb.behind ? &require_record(records_, *nb.behind) : nullptr;
    if (rt.last_zone == Zone::SequencingZone && st.mode == ControllerMode::FallBehind)
      rt.pinned_ahead = st.prev_assignment.candidate_ahead;
    if (rt.pinned_ahead) {
      const VehicleRecord* p = find_record(records_, *rt.pinned_ahead);
      // A pinned vehicle still behind and no faster will never pass.
      const bool stalled = p != nullptr && p->state.position < own.position &&
                           p->state.velocity <= own.velocity;
      if (p != nullptr && p->zone != Zone::Exited && !stalled &&
          b_merge_ahead(own, p->state, cfg_) < 0.0) {
        ahead = p;
        if (behind == p) behind = nullptr;
      } else {
        rt.pinned_ahead.reset();
      }
    }
    now = merging_pair(rec, ahead, behind, cfg_);
    mode_seq = &cz_order;
  }

  Assignment prev = st.prev_assignment;
  bool compare = st.initialized && rt.last_zone == rec.zone;
  if (!st.initialized) {
    st.initialized = true;
    st.mode = ControllerMode::Retain;
    st.plan = {{0.0, 0.0, t, t}, own, own.velocity};
    rt.cruise = own.velocity;
    if (rec.zone == Zone::SequencingZone && outcome_->resequenced) {
      // First seen in a resequenced order: measure the move against s0.
      const auto s0 = sdf_sequence(snapshot(records_, Zone::SequencingZone));
      prev = now;
      prev.candidate_ahead = neighbors(s0, rec.id, records_).ahead;
      compare = true;
    }
  }
  if (compare && now.candidate_ahead != prev.candidate_ahead && !rt.yielding) {
    const auto d = select_mode(prev, now, *mode_seq, own, t, x_target, cfg_);
    if (d.mode != ControllerMode::Retain) {
      st.mode = d.mode;
      st.plan.law = d.law;
      st.plan.law_start = own;
      st.plan.v_hold = d.mode == ControllerMode::FallBehind ? fall_behind_speed(cfg_) : rt.cruise;
      st.suppressed = {d.mode == ControllerMode::JumpAhead ? labels::kMergeBehind
                                                           : labels::kMergeAhead};
      ++counters_.mode_changes;
      log(rec.id.value, "mode", {{"mode", to_string(d.mode)}, {"t_f", d.law.t_f}});
    }
  }
  // No resequencing in the AZ: the physical i+ is always guarded.
  if (rec.zone == Zone::AwarenessZone) st.suppressed.erase(labels::kMergeAhead);
  st.prev_assignment = now;
  rt.last_zone = rec.zone;

  std::optional<VehicleState> ahead_s;
  std::optional<VehicleState> behind_cav_s;
  if (ahead) ahead_s = ahead->state;
  if (behind && behind->is_cav()) behind_cav_s = behind->state;

  if (st.mode != ControllerMode::Retain) {
    restore_suppressed(st, own, ahead_s, behind_cav_s, cfg_);
    if (st.suppressed.empty()) {
      st.mode = ControllerMode::Retain;
      st.plan.law = {0.0, 0.0, t, t};
      st.plan.v_hold = rt.cruise;
      log(rec.id.value, "mode", {{"mode", to_string(st.mode)}});
    }
  }

  // Awareness zone: merge-ahead or yield.
  std::optional<ReferencePlan> yield_plan;
  std::optional<double> stop_point;
  if (rec.zone == Zone::AwarenessZone) {
    if (!rt.yielding && now.behind) {
      const VehicleRecord& m = require_record(records_, *now.behind);
      const auto trace = hdv_trace_.find(m.id.value);
      if (m.is_hdv() && trace != hdv_trace_.end() && !trace->second.empty()) {
        std::vector<HistorySample> window;
        for (const auto& s : trace->second)
          if (s.t >= rec.t_az.value_or(0.0) - 1e-9) window.push_back(s);
        if (window.empty()) window.push_back(trace->second.back());
        const auto est = opts_.estimator(window, cfg_);
        if (az_decide(rec, &m, est, cfg_) == AzDecision::Yield) {
          rt.yielding = true;
          rt.yield_hdv = m.id;
          ++counters_.yields;
          log(rec.id.value, "yield_commit",
              {{"hdv", m.id.value}, {"aggressiveness", est.value}, {"x", own.position},
               {"v", own.velocity}});
        }
      }
    }
    if (rt.yielding) {
      const VehicleRecord* h = find_record(records_, rt.yield_hdv);
      if (h == nullptr || h->zone == Zone::Exited || h->state.position >= cfg_.L) {
        rt.yielding = false;
        st.mode = ControllerMode::Retain;
        st.suppressed.clear();
        st.plan.law = reference_law(own, cfg_.L, cfg_.v_max, t, cfg_);
        st.plan.v_hold = rt.cruise;
        st.plan.law_start = own;
        log(rec.id.value, "yield_release", {{"x", own.position}, {"v", own.velocity}});
      } else {
        const auto ys = execute_yield(rec, t, cfg_);
        if (ys.emergency) {
          ++counters_.emergency_stops;
          log(rec.id.value, "emergency_stop", {{"x", own.position}, {"v", own.velocity}});
          st.prev_solution.clear();
          return cfg_.u_min;
        }
        yield_plan = ReferencePlan{ys.law, own, 0.0};
        stop_point = ys.x_stop;
      }
    }
  }

  const ReferencePlan& plan = yield_plan ? *yield_plan : st.plan;
  QpInputs in;
  in.own = own;
  in.nominal = nominal_trajectory(own, st.prev_solution, cfg_);
  for (int h = 0; h < cfg_.H; ++h) {
    const double th = t + h * cfg_.T_d;
    in.u_ref.push_back(plan.u_ref(th));
    in.v_ref.push_back(std::clamp(plan.v_ref(th), cfg_.v_min, cfg_.v_max));
  }
  const VehicleRecord* pred = same_road_leader(rec);
  if (pred && pred->road != rec.road) pred = nullptr;  // opposite tail is tracked as i+
  if (pred) in.predecessor = predict_neighbor(*pred, cfg_);
  if (ahead) in.ahead = predict_neighbor(*ahead, cfg_);
  if (behind && behind->is_cav()) in.behind = predict_neighbor(*behind, cfg_);
  in.suppressed = st.suppressed;
  if (stop_point) {
    in.suppressed.insert(labels::kMergeBehind);
    in.stop_point = stop_point;
  }

  QpProblem qp = build_qp(in, cfg_);
  QpResult res = solve_qp(qp, false);
  if (res.status != QpStatus::Optimal) {
    ++counters_.qp_retries;
    res = solve_qp(qp, true);
  }
  if (res.status != QpStatus::Optimal && in.behind && !in.suppressed.contains(labels::kMergeBehind)) {
    // The follower guards the same gap through its own merge-ahead row.
    ++counters_.qp_retries;
    in.suppressed.insert(labels::kMergeBehind);
    qp = build_qp(in, cfg_);
    res = solve_qp(qp, true);
  }
  if (res.status != QpStatus::Optimal) {
    ++counters_.qp_fallbacks;
    ++st.fallback_count;
    st.prev_solution.clear();
    const std::optional<VehicleState> pred_s =
        pred ? std::optional<VehicleState>(pred->state) : std::nullopt;
    const std::optional<VehicleState> ahead_row =
        in.suppressed.contains(labels::kMergeAhead) ? std::nullopt : ahead_s;
    const double u = fallback_on_infeasible(own, pred_s, ahead_row, cfg_);
    log(rec.id.value, "qp_fallback", {{"u", u}, {"rows", qp.row_count()}});
    return u;
  }
  st.prev_solution = res.u;
  return std::clamp(res.u.front(), cfg_.u_min, cfg_.u_max);
}

double Simulation::hdv_step_control(const VehicleRecord& rec, const MergeSequence&) const {
  const HdvParams& p = *rec.hdv_params;
  const VehicleRecord* leader = same_road_leader(rec);
  if (rec.zone == Zone::AwarenessZone)
    return hdv_control_az(rec, leader, nearest_opposite_az(rec), p, cfg_);
  return hdv_control(rec, leader, p, cfg_);
}

void Simulation::finalize_exit(VehicleRecord& rec, const VehicleState& pre, double u, double tau) {
  const double t_cross = clock_.t + tau;
  const VehicleState at_m = advance(pre, u, tau);
  auto& m = metrics_[static_cast<std::size_t>(&rec - records_.data())];

  if (tail_) {
    const Tail& prev = *tail_;
    const double x_prev = advance(prev.pre, prev.u, tau).position;
    const double residual = x_prev - cfg_.L - cfg_.phi * at_m.velocity - cfg_.delta;
    m.mp_clearance_residual = residual;
    if (rec.is_cav() && residual < -kClearanceTol) {
      if (prev.rec.is_cav())
        ++counters_.clearance_violations_cav;
      else
        ++counters_.clearance_violations_hdv;
      log(rec.id.value, "clearance_violation",
          {{"residual", residual}, {"preceding", prev.rec.id.value},
           {"preceding_class", to_string(prev.rec.cls)}});
    }
  }

  rec.zone = Zone::Exited;
  rec.t_exit = t_cross;
  m.t_exit = t_cross;
  m.travel_time = t_cross - rec.t_entry;
  ++counters_.exited;
  log(rec.id.value, "exit",
      {{"t_exit", t_cross}, {"v", at_m.velocity},
       {"clearance", m.mp_clearance_residual ? nlohmann::json(*m.mp_clearance_residual)
                                             : nlohmann::json(nullptr)}});

  Tail next;
  next.rec = rec;
  next.desired_speed = std::max(desired_speed_[rec.id.value], at_m.velocity);
  next.pre = pre;
  next.u = u;
  tail_ = next;
}

void Simulation::tick() {
  spawn_arrivals();

  const auto sz = snapshot(records_, Zone::SequencingZone);
  const std::optional<SequencingOutcome> previous = outcome_;
  outcome_ = cfg_.sequencing_policy == SequencingPolicy::SS ? coordinate(sz, previous, cfg_)
                                                            : sdf_outcome(sz, cfg_);
  if (outcome_->resequenced) {
    ++counters_.resequence_ticks;
    if (!previous || previous->sequence.order != outcome_->sequence.order) {
      std::vector<std::uint32_t> ids;
      for (auto id : outcome_->sequence.order) ids.push_back(id.value);
      log(0, "resequence", {{"order", ids}, {"source", to_string(outcome_->sequence.source)}});
    }
  }

  std::vector<VehicleRecord> active;
  for (const auto& r : records_)
    if (r.zone != Zone::Exited) active.push_back(r);
  const MergeSequence cz_order = sdf_sequence(active);

  std::vector<double> u(records_.size(), 0.0);
  for (std::size_t k = 0; k < records_.size(); ++k) {
    const auto& r = records_[k];
    if (r.zone == Zone::Exited) continue;
    u[k] = r.is_cav() ? cav_control(r, cav_rt_[r.id.value], cz_order) : hdv_step_control(r, cz_order);
  }

  double u_tail = 0.0;
  if (tail_) {
    HdvParams free;
    free.desired_speed = std::max(tail_->desired_speed, 1e-3);
    u_tail = std::clamp(idm_accel(tail_->rec.state.velocity, -1.0, 0.0, free), cfg_.u_min,
                        cfg_.u_max);
  }

  const double dt = cfg_.T_d;
  struct ExitEvent {
    std::size_t index;
    VehicleState pre;
    double u;
    double tau;
  };
  std::vector<ExitEvent> exits;
  for (std::size_t k = 0; k < records_.size(); ++k) {
    auto& r = records_[k];
    if (r.zone == Zone::Exited) continue;
    const VehicleState pre = r.state;
    const VehicleState next = step(pre, u[k], dt, true);

    double active_time = dt;
    if (u[k] < 0.0 && pre.velocity + u[k] * dt < 0.0) active_time = std::max(pre.velocity, 0.0) / -u[k];
    std::optional<double> tau_exit;
    if (next.position >= cfg_.L) {
      tau_exit = crossing_time(pre, u[k], cfg_.L, dt);
      active_time = std::min(active_time, *tau_exit);
    }
    accumulate(metrics_[k], u[k], pre, active_time, cfg_.fuel);
    r.control_history.push_back({clock_.t, u[k]});
    if (r.is_hdv()) hdv_trace_[r.id.value].push_back({clock_.t, pre, u[k]});
    if (opts_.record_traces)
      traces_.push_back({clock_.t, r.id.value, r.road, r.cls, pre.position, pre.velocity, u[k]});

    if (pre.position < cfg_.sz_end() && next.position >= cfg_.sz_end()) {
      r.zone = Zone::AwarenessZone;
      r.t_az = clock_.t + crossing_time(pre, u[k], cfg_.sz_end(), dt);
      log(r.id.value, "enter_az", {{"t_az", *r.t_az}, {"v", next.velocity}});
    }
    r.state = next;
    if (tau_exit) exits.push_back({k, pre, u[k], *tau_exit});
  }

  if (tail_) {
    tail_->pre = tail_->rec.state;
    tail_->u = u_tail;
    tail_->rec.state = step(tail_->rec.state, u_tail, dt, true);
  }

  std::sort(exits.begin(), exits.end(), [&](const ExitEvent& a, const ExitEvent& b) {
    return a.tau != b.tau ? a.tau < b.tau : records_[a.index].id < records_[b.index].id;
  });
  for (const auto& e : exits) finalize_exit(records_[e.index], e.pre, e.u, e.tau);

  for (std::size_t k = 0; k < records_.size(); ++k) {
    const auto& r = records_[k];
    if (r.zone == Zone::Exited) continue;
    const VehicleRecord* lead = same_road_leader(r);
    if (lead && lead->road == r.road)
      track_rear_gap(metrics_[k], b_rear_end(r.state, lead->state, cfg_) + cfg_.barrier_margin);
  }

  ++clock_.tick;
  clock_.t = clock_.tick * cfg_.T_d;
}

bool Simulation::finished() const {
  if (clock_.t >= cfg_.t_max - 1e-9) return true;
  const bool pending = !pending_[0].empty() || !pending_[1].empty();
  const bool any_active = std::any_of(records_.begin(), records_.end(),
                                      [](const VehicleRecord& r) { return r.zone != Zone::Exited; });
  return !pending && !any_active;
}

RunResult Simulation::result() const {
  RunResult out;
  out.config = cfg_;
  out.seed = cfg_.seed;
  out.records = records_;
  out.metrics = metrics_;
  out.events = events_;
  out.traces = traces_;
  out.counters = counters_;
  out.t_end = clock_.t;
  out.ticks = clock_.tick;
  out.complete = static_cast<std::size_t>(counters_.exited) == expected_total_ &&
                 pending_[0].empty() && pending_[1].empty();
  if (counters_.exited > 0) out.aggregate = aggregate(metrics_);
  return out;
}

RunResult run(const ScenarioConfig& cfg, const SimOptions& opts) {
  Simulation sim(cfg, opts);
  while (!sim.finished()) sim.tick();
  return sim.result();
}

}  // namespace mergesim
