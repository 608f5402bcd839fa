#include "mergesim/az.hpp"

#include <algorithm>
#include <cmath>

namespace mergesim {

const char* to_string(AzDecision d) { return d == AzDecision::Yield ? "yield" : "merge_ahead"; }

AggressivenessEstimate estimate_aggressiveness(const std::vector<HistorySample>& history,
                                               const ScenarioConfig& cfg) {
  if (history.empty()) throw Error(ErrorCode::EmptyHistory, "aggressiveness: empty history");
  double v_sum = 0.0;
  double u_pos_sum = 0.0;
  for (const auto& h : history) {
    v_sum += h.state.velocity;
    u_pos_sum += std::max(h.u, 0.0);
  }
  const double n = static_cast<double>(history.size());
  const double v_bar = v_sum / n;
  const double u_bar = u_pos_sum / n;
  const double v_allowed = max_speed_to_stop(cfg.L - history.back().state.position, cfg.u_min);

  double speed_term = 0.0;
  if (v_bar > 0.0) speed_term = v_allowed > 0.0 ? v_bar / v_allowed : 1.0;
  const double value = 0.7 * std::max(speed_term, 0.0) + 0.3 * std::max(u_bar / cfg.u_max, 0.0);
  return {std::clamp(value, 0.0, 1.0), history.front().t};
}

bool yield_feasible(const VehicleState& cav, const ScenarioConfig& cfg) {
  return cav.velocity <=
         max_speed_to_stop(yield_stop_point(cfg) - cav.position, cfg.u_min);
}

AzDecision az_decide(const VehicleRecord& cav, const VehicleRecord* iminus,
                     const AggressivenessEstimate& a, const ScenarioConfig& cfg) {
  if (iminus == nullptr || iminus->is_cav()) return AzDecision::MergeAhead;
  if (a.value < cfg.gamma) return AzDecision::MergeAhead;
  return yield_feasible(cav.state, cfg) ? AzDecision::Yield : AzDecision::MergeAhead;
}

YieldStep execute_yield(const VehicleRecord& cav, double t, const ScenarioConfig& cfg) {
  YieldStep out;
  out.x_stop = yield_stop_point(cfg);
  try {
    out.law = solve_yield_stop(cav.state.position, cav.state.velocity, out.x_stop, cfg, t);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::InfeasibleStop) throw;
    out.emergency = true;
    out.law = {0.0, cfg.u_min, t, t + cav.state.velocity / -cfg.u_min};
  }
  return out;
}

}  // namespace mergesim
