#include "mergesim/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <boost/math/tools/roots.hpp>

namespace mergesim {

double LinearControlLaw::u(double t) const {
  if (t < t0 || t > t_f) return 0.0;
  return a * (t - t0) + b;
}

VehicleState LinearControlLaw::state_at(const VehicleState& s0, double t) const {
  const double tau = std::clamp(t, t0, t_f) - t0;
  VehicleState s;
  s.position = s0.position + s0.velocity * tau + 0.5 * b * tau * tau + a * tau * tau * tau / 6.0;
  s.velocity = s0.velocity + b * tau + 0.5 * a * tau * tau;
  s.accel = a * tau + b;
  if (t > t_f) {
    s.position += s.velocity * (t - t_f);
    s.accel = 0.0;
  }
  return s;
}

double LinearControlLaw::cost() const {
  const double T = duration();
  return 0.5 * (a * a * T * T * T / 3.0 + a * b * T * T + b * b * T);
}

LinearControlLaw fixed_time_min_energy(double x0, double v0, double x_f, double v_f, double T,
                                       double t0) {
  // v_f = v0 + bT + aT^2/2 ;  x_f - x0 = v0 T + bT^2/2 + aT^3/6
  const double dv = v_f - v0;
  const double e = (x_f - x0) - v0 * T;
  LinearControlLaw law;
  law.a = (6.0 * dv * T - 12.0 * e) / (T * T * T);
  law.b = (dv - 0.5 * law.a * T * T) / T;
  law.t0 = t0;
  law.t_f = t0 + T;
  return law;
}

LinearControlLaw solve_energy_optimal(double x0, double v0, double x_f, double v_f, double t0,
                                      double t_max) {
  const double d = x_f - x0;
  if (!(d > 0.0) || v0 < 0.0 || v_f < 0.0 || (v0 == 0.0 && v_f == 0.0))
    throw Error(ErrorCode::NoFiniteSolution, "solve_energy_optimal: ill-posed boundary states");

  if (std::abs(v0 - v_f) <= 1e-12 * std::max(1.0, v0)) {
    LinearControlLaw cruise{0.0, 0.0, t0, t0 + d / v0};
    if (cruise.duration() <= t_max) return cruise;
    throw Error(ErrorCode::NoFiniteSolution, "solve_energy_optimal: cruise exceeds horizon");
  }

  // Free final time: the Hamiltonian vanishes at t_f, i.e. a v_f = u(t_f)^2 / 2.
  auto transversality = [&](double T) {
    const auto law = fixed_time_min_energy(x0, v0, x_f, v_f, T);
    const double uf = law.a * T + law.b;
    return law.a * v_f - 0.5 * uf * uf;
  };

  constexpr int kGrid = 4000;
  const double t_lo = 1e-3;
  const double ratio = std::pow(t_max / t_lo, 1.0 / kGrid);

  std::optional<LinearControlLaw> best;
  double prev_T = t_lo;
  double prev_g = transversality(prev_T);
  for (int k = 1; k <= kGrid; ++k) {
    const double T = k == kGrid ? t_max : t_lo * std::pow(ratio, k);
    const double g = transversality(T);
    double root = std::numeric_limits<double>::quiet_NaN();
    if (g == 0.0) {
      root = T;
    } else if ((prev_g < 0.0) != (g < 0.0) && prev_g != 0.0) {
      boost::uintmax_t iters = 200;
      const auto bracket = boost::math::tools::toms748_solve(
          transversality, prev_T, T, prev_g, g, boost::math::tools::eps_tolerance<double>(52),
          iters);
      root = 0.5 * (bracket.first + bracket.second);
    }
    if (std::isfinite(root)) {
      const auto law = fixed_time_min_energy(x0, v0, x_f, v_f, root, t0);
      if (!best || law.cost() < best->cost()) best = law;
    }
    prev_T = T;
    prev_g = g;
  }
  if (!best)
    throw Error(ErrorCode::NoFiniteSolution, "solve_energy_optimal: no stationary final time");
  return *best;
}

LinearControlLaw constant_accel_fallback(double x0, double v0, double x_f, double v_f,
                                         const ScenarioConfig& cfg, double t0) {
  const double d = std::max(x_f - x0, 1e-9);
  const double u = std::clamp((v_f * v_f - v0 * v0) / (2.0 * d), cfg.u_min, cfg.u_max);
  double T = 0.0;
  if (std::abs(u) < 1e-12) {
    T = v0 > 0.0 ? d / v0 : 0.0;
  } else {
    const double disc = v0 * v0 + 2.0 * u * d;
    T = disc >= 0.0 ? (-v0 + std::sqrt(disc)) / u : v0 / -u;
  }
  return {0.0, u, t0, t0 + std::max(T, 0.0)};
}

LinearControlLaw solve_yield_stop(double x0, double v0, double x_stop, const ScenarioConfig& cfg,
                                  double t0) {
  const double d = x_stop - x0;
  if (v0 <= 0.0) return {0.0, 0.0, t0, t0};
  if (!(d > 0.0)) throw Error(ErrorCode::InfeasibleStop, "solve_yield_stop: stop point passed");
  // u(t_f) = 0 and v(t_f) = 0 give v0 = aT^2/2 and d = v0 T / 3.
  const double T = 3.0 * d / v0;
  const double a = 2.0 * v0 / (T * T);
  const double b = -2.0 * v0 / T;
  if (-b > std::abs(cfg.u_min))
    throw Error(ErrorCode::InfeasibleStop, "solve_yield_stop: needs more than full braking");
  return {a, b, t0, t0 + T};
}

double max_speed_to_stop(double distance, double u_min) {
  if (distance <= 0.0) return 0.0;
  return std::sqrt(2.0 * std::abs(u_min) * distance);
}

}  // namespace mergesim
