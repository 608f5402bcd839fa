#include "mergesim/controller.hpp"

#include <algorithm>

namespace mergesim {

const char* to_string(ControllerMode m) {
  switch (m) {
    case ControllerMode::JumpAhead: return "jump_ahead";
    case ControllerMode::FallBehind: return "fall_behind";
    case ControllerMode::Retain: return "retain";
  }
  return "?";
}

double fall_behind_speed(const ScenarioConfig& cfg) { return std::max(cfg.v_min, 1.0); }

double ReferencePlan::u_ref(double t) const { return law.u(t); }

double ReferencePlan::v_ref(double t) const {
  if (law.duration() > 0.0 && t <= law.t_f) return law.state_at(law_start, t).velocity;
  return v_hold;
}

LinearControlLaw reference_law(const VehicleState& own, double x_f, double v_f, double t,
                               const ScenarioConfig& cfg) {
  const double v0 = std::max(own.velocity, 0.0);
  if (x_f - own.position < 1.0) return {0.0, 0.0, t, t};
  try {
    return solve_energy_optimal(own.position, v0, x_f, v_f, t);
  } catch (const Error&) {
    return constant_accel_fallback(own.position, v0, x_f, v_f, cfg, t);
  }
}

ModeDecision select_mode(const Assignment& prev, const Assignment& now, const MergeSequence& seq,
                         const VehicleState& own, double t, double x_target,
                         const ScenarioConfig& cfg) {
  auto pos = [&](const std::optional<VehicleId>& id) {
    return id ? seq.position_of(*id) : std::size_t{0};
  };
  ModeDecision d;
  d.law = {0.0, 0.0, t, t};
  if (prev.candidate_ahead == now.candidate_ahead) return d;
  // The old i+ left the sequence by crossing ahead: ordinary progress.
  if (prev.candidate_ahead && pos(prev.candidate_ahead) == 0) return d;
  const std::size_t p_old = pos(prev.candidate_ahead);
  const std::size_t p_new = pos(now.candidate_ahead);
  if (p_new < p_old) {
    d.mode = ControllerMode::JumpAhead;
    d.law = reference_law(own, x_target, cfg.v_max, t, cfg);
  } else if (p_new > p_old) {
    d.mode = ControllerMode::FallBehind;
    d.law = reference_law(own, x_target, fall_behind_speed(cfg), t, cfg);
  }
  return d;
}

std::vector<VehicleState> nominal_trajectory(const VehicleState& own,
                                             const std::vector<double>& prev_solution,
                                             const ScenarioConfig& cfg) {
  const auto H = static_cast<std::size_t>(cfg.H);
  PredictedTrajectory traj;
  if (prev_solution.size() == H) {
    std::vector<double> controls(prev_solution.begin() + 1, prev_solution.end());
    controls.push_back(prev_solution.back());
    traj = rollout(own, controls, cfg.T_d);
  } else {
    traj = predict_constant_velocity(own, cfg.H, cfg.T_d);
  }
  traj.states.resize(H);
  return traj.states;
}

QpProblem build_qp(const QpInputs& in, const ScenarioConfig& cfg) {
  QpProblem qp;
  qp.H = cfg.H;
  qp.u_ref = in.u_ref;
  qp.beta1 = cfg.beta1;
  qp.u_min = cfg.u_min;
  qp.u_max = cfg.u_max;
  qp.rows.resize(static_cast<std::size_t>(cfg.H));

  const bool use_ahead = in.ahead && !in.suppressed.contains(labels::kMergeAhead);
  const bool use_behind =
      in.behind && in.behind->is_cav && !in.suppressed.contains(labels::kMergeBehind);

  for (std::size_t h = 0; h < qp.rows.size(); ++h) {
    const VehicleState& s = in.nominal[h];
    auto& rows = qp.rows[h];
    const auto speed = cbf_speed_limits(s, cfg);
    rows.push_back(speed.upper);
    if (!in.stop_point) rows.push_back(speed.lower);
    if (in.predecessor) rows.push_back(cbf_rear_end(s, in.predecessor->traj.states[h], cfg));
    if (use_ahead) rows.push_back(cbf_merge_ahead(s, in.ahead->traj.states[h], cfg));
    if (use_behind)
      rows.push_back(
          hocbf_merge_behind(s, in.behind->traj.states[h], true, in.behind->u_last, 0.0, cfg));
    if (in.stop_point) rows.push_back(cbf_stop_envelope(s, *in.stop_point, cfg));
    rows.push_back(clf_track_speed(s, in.v_ref[h], cfg));
  }
  return qp;
}

std::size_t QpProblem::row_count() const {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.size();
  return n;
}

void QpProblem::assemble(Eigen::MatrixXd& G, Eigen::VectorXd& g, Eigen::MatrixXd& C,
                         Eigen::VectorXd& c, bool first_step_only) const {
  const int n = H + 1;
  G = Eigen::MatrixXd::Zero(n, n);
  g = Eigen::VectorXd::Zero(n);
  for (int h = 0; h < H; ++h) {
    G(h, h) = 2.0;
    g(h) = -2.0 * u_ref[static_cast<std::size_t>(h)];
  }
  G(H, H) = 2.0 * (beta1 + eps);

  const std::size_t used = first_step_only ? rows.front().size() : row_count();
  const int m = static_cast<int>(used) + 2 * H;
  C = Eigen::MatrixXd::Zero(m, n);
  c = Eigen::VectorXd::Zero(m);
  int r = 0;
  for (int h = 0; h < H; ++h) {
    C(r, h) = 1.0;
    c(r++) = -u_min;
    C(r, h) = -1.0;
    c(r++) = u_max;
  }
  for (int h = 0; h < H; ++h) {
    if (first_step_only && h > 0) break;
    for (const auto& row : rows[static_cast<std::size_t>(h)]) {
      const auto geq = row.as_geq();
      C(r, h) = geq.a_u;
      C(r, H) = geq.a_e;
      c(r++) = geq.c;
    }
  }
}

QpResult solve_qp(const QpProblem& qp, bool first_step_only) {
  Eigen::MatrixXd G, C;
  Eigen::VectorXd g, c;
  qp.assemble(G, g, C, c, first_step_only);
  const auto sol = solve_dense_qp(G, g, C, c);
  QpResult out;
  out.status = sol.status;
  if (sol.status == QpStatus::Optimal) {
    out.u.assign(sol.x.data(), sol.x.data() + qp.H);
    out.e = sol.x(qp.H);
  }
  return out;
}

double fallback_on_infeasible(const VehicleState& own, const std::optional<VehicleState>& pred,
                              const std::optional<VehicleState>& ahead, const ScenarioConfig& cfg) {
  if (pred && b_rear_end(own, *pred, cfg) < 0.0) return cfg.u_min;
  if (ahead && b_merge_ahead(own, *ahead, cfg) < 0.0) return cfg.u_min;
  return 0.0;
}

void restore_suppressed(CavControllerState& st, const VehicleState& own,
                        const std::optional<VehicleState>& ahead,
                        const std::optional<VehicleState>& behind, const ScenarioConfig& cfg) {
  if (st.suppressed.contains(labels::kMergeAhead) &&
      (!ahead || b_merge_ahead(own, *ahead, cfg) >= 0.0))
    st.suppressed.erase(labels::kMergeAhead);
  if (st.suppressed.contains(labels::kMergeBehind) &&
      (!behind || b_merge_behind(own, *behind, cfg) >= 0.0))
    st.suppressed.erase(labels::kMergeBehind);
}

}  // namespace mergesim
