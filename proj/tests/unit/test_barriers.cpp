#include <gtest/gtest.h>

#include <random>

#include "mergesim/barriers.hpp"
#include "mergesim/dynamics.hpp"

using namespace mergesim;

namespace {

ScenarioConfig plain() {
  ScenarioConfig c;
  c.barrier_margin = 0.0;
  return c;
}

// Largest u admitted by a single GEQ row with a_u < 0.
double upper_bound(const LinearControlConstraint& r) { return r.c / -r.a_u; }

}  // namespace

TEST(SpeedLimits, PlugIn) {
  const auto c = plain();
  auto rows = cbf_speed_limits({0.0, c.v_max, 0.0}, c);
  EXPECT_TRUE(rows.upper.satisfied(0.0));
  EXPECT_FALSE(rows.upper.satisfied(1e-9));
  rows = cbf_speed_limits({0.0, 20.0, 0.0}, c);
  EXPECT_NEAR(upper_bound(rows.upper), 10.0, 1e-12);
  rows = cbf_speed_limits({0.0, c.v_min, 0.0}, c);
  EXPECT_TRUE(rows.lower.satisfied(0.0));
  EXPECT_FALSE(rows.lower.satisfied(-1e-9));
  EXPECT_EQ(rows.upper.label, labels::kSpeedMax);
}

TEST(RearEnd, PlugIn) {
  const auto c = plain();
  const auto r = cbf_rear_end({0.0, 20.0, 0.0}, {50.0, 20.0, 0.0}, c);
  EXPECT_NEAR(b_rear_end({0.0, 20.0, 0.0}, {50.0, 20.0, 0.0}, c), 10.22, 1e-12);
  EXPECT_NEAR(r.a_u, -1.8, 1e-12);
  EXPECT_NEAR(upper_bound(r), 10.22 / 1.8, 1e-12);
}

TEST(RearEnd, BoundaryCases) {
  const auto c = plain();
  // b3 = 0, equal speeds: u <= 0.
  const VehicleState own{0.0, 20.0, 0.0};
  const VehicleState pred{20.0 * c.phi + c.delta, 20.0, 0.0};
  EXPECT_NEAR(upper_bound(cbf_rear_end(own, pred, c)), 0.0, 1e-12);
  // Faster leader at the boundary admits positive u.
  const VehicleState fast{pred.position, 23.0, 0.0};
  EXPECT_NEAR(upper_bound(cbf_rear_end(own, fast, c)), 3.0 / c.phi, 1e-12);
}

TEST(RearEnd, MarginTightensOnlyTheController) {
  ScenarioConfig c;
  c.barrier_margin = 0.5;
  EXPECT_NEAR(b_rear_end({0.0, 20.0, 0.0}, {50.0, 20.0, 0.0}, c), 9.72, 1e-12);
}

TEST(MergeAhead, PlugIn) {
  const auto c = plain();
  const auto r = cbf_merge_ahead({200.0, 20.0, 0.0}, {260.0, 22.0, 0.0}, c);
  EXPECT_NEAR(b_merge_ahead({200.0, 20.0, 0.0}, {260.0, 22.0, 0.0}, c), 38.22, 1e-12);
  EXPECT_NEAR(r.a_u, -0.9, 1e-12);
  EXPECT_NEAR(r.c, 0.2 + 38.22, 1e-12);
  EXPECT_NEAR(upper_bound(r), 38.42 / 0.9, 1e-9);
}

TEST(MergeAhead, EndpointsOfTheHeadwayRamp) {
  const auto c = plain();
  EXPECT_DOUBLE_EQ(cbf_merge_ahead({0.0, 20.0, 0.0}, {50.0, 20.0, 0.0}, c).a_u, 0.0);
  EXPECT_NEAR(cbf_merge_ahead({c.L, 20.0, 0.0}, {c.L + 50.0, 20.0, 0.0}, c).a_u, -c.phi, 1e-12);
}

TEST(MergeBehind, RejectsHdvFollower) {
  const auto c = plain();
  try {
    hocbf_merge_behind({200.0, 20.0, 0.0}, {100.0, 20.0, 0.0}, false, 0.0, 0.0, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MisroutedConstraint);
  }
}

TEST(MergeBehind, EqualSpeedsGiveMildLowerBound) {
  const auto c = plain();
  const VehicleState own{250.0, 20.0, 0.0}, behind{100.0, 20.0, 0.0};
  const auto r = hocbf_merge_behind(own, behind, true, 0.0, 0.0, c);
  EXPECT_DOUBLE_EQ(r.a_u, 1.0);
  const double bdot = -c.dPhi() * 400.0;
  EXPECT_NEAR(bdot, -1.8, 1e-12);
  // Large b5: the row is slack for every admissible u.
  EXPECT_TRUE(r.satisfied(c.u_min));
}

TEST(MergeBehind, RowMatchesFiniteDifferenceOfPsi1) {
  const auto c = plain();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> x(50.0, 350.0), v(5.0, 28.0), u(-5.0, 4.0);
  const double h = 1e-6;
  for (int k = 0; k < 200; ++k) {
    const VehicleState own{x(rng), v(rng), 0.0};
    const VehicleState behind{own.position - 30.0, v(rng), 0.0};
    const double ui = u(rng), um = u(rng);
    const auto row = hocbf_merge_behind(own, behind, true, um, 0.0, c);
    const double psi0 = psi1_merge_behind(own, behind, um, c);
    const double psi1 = psi1_merge_behind(step(own, ui, h), step(behind, um, h), um, c);
    const double fd = (psi1 - psi0) / h;
    EXPECT_NEAR(row.residual(ui) - c.k6 * psi0, fd, 1e-4 * std::max(1.0, std::abs(fd)));
  }
}

TEST(MergeBehind, BoundaryEvaluation) {
  const auto c = plain();
  // Place the pair with b5 = 0 and psi1 = 0 (u_behind = 0).
  const VehicleState behind{100.0, 20.0, 0.0};
  const double gap = c.Phi(behind.position) * behind.velocity + c.delta;
  const double v_own = behind.velocity + c.dPhi() * behind.velocity * behind.velocity;
  const VehicleState own{behind.position + gap, v_own, 0.0};
  EXPECT_NEAR(b_merge_behind(own, behind, c), 0.0, 1e-12);
  EXPECT_NEAR(psi1_merge_behind(own, behind, 0.0, c), 0.0, 1e-12);
  const auto row = hocbf_merge_behind(own, behind, true, 0.0, 0.0, c);
  // The required u is exactly what keeps psi1 from decreasing.
  const double u_star = -row.c;
  EXPECT_NEAR(u_star, 0.0, 1e-12);
}

TEST(Clf, PlugIn) {
  const auto c = plain();
  auto r = clf_track_speed({0.0, 20.0, 0.0}, 20.0, c);
  EXPECT_DOUBLE_EQ(r.a_u, 0.0);
  EXPECT_DOUBLE_EQ(r.a_e, -1.0);
  EXPECT_TRUE(r.satisfied(3.0, 0.0));
  EXPECT_FALSE(r.satisfied(3.0, -1.0));
  r = clf_track_speed({0.0, 25.0, 0.0}, 20.0, c);
  EXPECT_DOUBLE_EQ(r.a_u, 10.0);
  EXPECT_DOUBLE_EQ(r.c, 25.0);
  EXPECT_EQ(r.sense, Sense::LEQ0);
  r = clf_track_speed({0.0, 15.0, 0.0}, 20.0, c);
  EXPECT_DOUBLE_EQ(r.a_u, -10.0);
  EXPECT_DOUBLE_EQ(r.c, 25.0);
}

TEST(Properties, RowsAreAffine) {
  const auto c = plain();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> x(0.0, 390.0), v(0.0, 30.0), u(-6.0, 5.0), e(0.0, 10.0);
  for (int k = 0; k < 200; ++k) {
    const VehicleState a{x(rng), v(rng), 0.0}, b{x(rng), v(rng), 0.0};
    const auto sp = cbf_speed_limits(a, c);
    const LinearControlConstraint rows[] = {sp.upper,
                                            sp.lower,
                                            cbf_rear_end(a, b, c),
                                            cbf_merge_ahead(a, b, c),
                                            hocbf_merge_behind(a, b, true, u(rng), 0.0, c),
                                            clf_track_speed(a, v(rng), c),
                                            cbf_stop_envelope(a, c.L - c.delta, c)};
    for (const auto& r : rows) {
      const double u0 = u(rng), du = u(rng), e0 = e(rng), de = e(rng);
      EXPECT_NEAR(r.residual(u0 + du, e0 + de) - r.residual(u0, e0), r.a_u * du + r.a_e * de,
                  1e-9);
      const auto g = r.as_geq();
      EXPECT_NEAR(std::abs(g.residual(u0, e0)), std::abs(r.residual(u0, e0)), 1e-12);
      EXPECT_TRUE(std::isfinite(r.a_u) && std::isfinite(r.c));
    }
  }
}

// At b = 0 with the row active, the barrier does not decrease. Richardson
// extrapolation removes the first-order term of the forward difference.
TEST(Properties, BoundaryInvariance) {
  const auto c = plain();
  const double h = 1e-4;
  auto rate = [&](auto&& b_at) { return 2.0 * (b_at(h / 2) - b_at(0.0)) / (h / 2) - (b_at(h) - b_at(0.0)) / h; };
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> x(10.0, 380.0), v(2.0, 28.0);
  for (int k = 0; k < 100; ++k) {
    const double vi = v(rng);
    const VehicleState top{x(rng), c.v_max, 0.0};
    const double u1 = upper_bound(cbf_speed_limits(top, c).upper);
    EXPECT_GE(rate([&](double t) { return b_speed_max(step(top, u1, t), c); }), -1e-6);

    const VehicleState bottom{x(rng), c.v_min, 0.0};
    const auto lo = cbf_speed_limits(bottom, c).lower;
    const double u2 = -lo.c / lo.a_u;
    EXPECT_GE(rate([&](double t) { return b_speed_min(step(bottom, u2, t), c); }), -1e-6);

    const VehicleState own{x(rng), vi, 0.0};
    const VehicleState pred{own.position + c.phi * vi + c.delta, v(rng), 0.0};
    ASSERT_NEAR(b_rear_end(own, pred, c), 0.0, 1e-9);
    const double u3 = upper_bound(cbf_rear_end(own, pred, c));
    EXPECT_GE(rate([&](double t) { return b_rear_end(step(own, u3, t), step(pred, 0.0, t), c); }),
              -1e-6);

    const VehicleState ahead{own.position + c.Phi(own.position) * vi + c.delta, v(rng), 0.0};
    ASSERT_NEAR(b_merge_ahead(own, ahead, c), 0.0, 1e-9);
    const double u4 = upper_bound(cbf_merge_ahead(own, ahead, c));
    EXPECT_GE(
        rate([&](double t) { return b_merge_ahead(step(own, u4, t), step(ahead, 0.0, t), c); }),
        -1e-6);
  }
}
