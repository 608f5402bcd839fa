#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mergesim/barriers.hpp"
#include "mergesim/dynamics.hpp"
#include "mergesim/qp.hpp"
#include "mergesim/sequencing.hpp"
#include "mergesim/trajectory.hpp"

namespace mergesim {

enum class ControllerMode : std::uint8_t { JumpAhead, FallBehind, Retain };

const char* to_string(ControllerMode m);

/// Speed target of the fall-behind reference; v_min itself makes P(v_f) degenerate.
double fall_behind_speed(const ScenarioConfig& cfg);

/// Reference trajectory followed by one CAV.
struct ReferencePlan {
  LinearControlLaw law;
  VehicleState law_start;   // state at law.t0
  double v_hold = 0.0;      // speed tracked once the law has run out

  double u_ref(double t) const;
  double v_ref(double t) const;
};

struct ModeDecision {
  ControllerMode mode = ControllerMode::Retain;
  LinearControlLaw law;
};

/// Mode from the movement of the candidate i+ in `seq` (Empty or absent counts as
/// position 0). JumpAhead solves P(v_max), FallBehind P(fall_behind_speed),
/// Retain returns a zero law. An old i+ that is no longer in `seq` has crossed
/// out of it and yields Retain. `x_target` is the end of the current zone.
ModeDecision select_mode(const Assignment& prev, const Assignment& now, const MergeSequence& seq,
                         const VehicleState& own, double t, double x_target,
                         const ScenarioConfig& cfg);

/// P(v_f) toward x_f, degrading to the constant-acceleration profile.
LinearControlLaw reference_law(const VehicleState& own, double x_f, double v_f, double t,
                               const ScenarioConfig& cfg);

struct NeighborPrediction {
  VehicleId id;
  bool is_cav = false;
  double u_last = 0.0;
  PredictedTrajectory traj;  // H + 1 states
};

struct QpInputs {
  VehicleState own;
  std::vector<VehicleState> nominal;  // own nominal state at each horizon step (H entries)
  std::vector<double> u_ref;          // H entries
  std::vector<double> v_ref;          // H entries
  std::optional<NeighborPrediction> predecessor;
  std::optional<NeighborPrediction> ahead;
  std::optional<NeighborPrediction> behind;
  std::set<std::string> suppressed;
  std::optional<double> stop_point;  // yield mode: stop envelope row, no speed_min row
};

struct QpProblem {
  int H = 0;
  std::vector<double> u_ref;
  double beta1 = 1.0;
  double eps = 1e-8;
  double u_min = 0.0;
  double u_max = 0.0;
  std::vector<std::vector<LinearControlConstraint>> rows;  // per horizon step

  /// Dense form over [u_0 .. u_{H-1}, e]; rows become `C z + c >= 0`.
  void assemble(Eigen::MatrixXd& G, Eigen::VectorXd& g, Eigen::MatrixXd& C, Eigen::VectorXd& c,
                bool first_step_only) const;
  std::size_t row_count() const;
};

QpProblem build_qp(const QpInputs& in, const ScenarioConfig& cfg);

struct QpResult {
  std::vector<double> u;
  double e = 0.0;
  QpStatus status = QpStatus::Infeasible;
};

QpResult solve_qp(const QpProblem& qp, bool first_step_only = false);

/// Defensive control after an infeasible QP: full braking when the rear-end or
/// merge-ahead barrier is already negative, otherwise coast.
double fallback_on_infeasible(const VehicleState& own, const std::optional<VehicleState>& pred,
                              const std::optional<VehicleState>& ahead, const ScenarioConfig& cfg);

struct CavControllerState {
  bool initialized = false;
  Assignment prev_assignment;
  ControllerMode mode = ControllerMode::Retain;
  ReferencePlan plan;
  std::set<std::string> suppressed;
  std::vector<double> prev_solution;
  long fallback_count = 0;
};

/// Drops each suppressed label whose barrier toward the current candidate is
/// non-negative (or whose candidate is gone).
void restore_suppressed(CavControllerState& st, const VehicleState& own,
                        const std::optional<VehicleState>& ahead,
                        const std::optional<VehicleState>& behind, const ScenarioConfig& cfg);

/// Own nominal trajectory: previous solution shifted one step, or constant velocity.
std::vector<VehicleState> nominal_trajectory(const VehicleState& own,
                                             const std::vector<double>& prev_solution,
                                             const ScenarioConfig& cfg);

}  // namespace mergesim
