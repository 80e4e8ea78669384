#include <doctest.h>

#include <cmath>

#include "core/controllers.hpp"
#include "core/plant.hpp"
#include "core/track.hpp"

using namespace ksmpc;

namespace {

plant::VehicleParams sedan() {
  plant::VehicleParams p;
  p.finalize();
  return p;
}

}  // namespace

TEST_CASE("tire: odd saturating force with the nominal slope at zero") {
  const auto p = sedan();
  CHECK(plant::tire_lateral_force(p.tire, 0.0, plant::Axle::Front) == 0.0);
  for (double a : {0.01, 0.03, 0.08}) {
    const double fp = plant::tire_lateral_force(p.tire, a, plant::Axle::Front);
    const double fm = plant::tire_lateral_force(p.tire, -a, plant::Axle::Front);
    CHECK(fp == doctest::Approx(-fm).epsilon(1e-12));
  }
  // linear region: F(0.001) ~ 2 C_alpha * 0.001 within 1%
  const double f = plant::tire_lateral_force(p.tire, 0.001, plant::Axle::Front);
  CHECK(f == doctest::Approx(160.0).epsilon(0.01));
  // monotone up to the saturation angle
  double prev = 0.0;
  for (double a = 0.0; a <= p.tire.saturation_angle; a += 1e-3) {
    const double v = plant::tire_lateral_force(p.tire, a, plant::Axle::Rear);
    CHECK(v >= prev - 1e-12);
    prev = v;
  }
}

TEST_CASE("slip angles: arctan arithmetic") {
  const auto p = sedan();
  plant::PlantState ps;
  ps.v_x = 20.0;

  auto [af1, ar1] = plant::slip_angles(ps, 0.02, p);
  CHECK(af1 == doctest::Approx(0.02));
  CHECK(ar1 == doctest::Approx(0.0));

  ps.v_y = 0.5;
  auto [af2, ar2] = plant::slip_angles(ps, 0.0, p);
  CHECK(af2 == doctest::Approx(-std::atan(0.025)).epsilon(1e-12));
  CHECK(ar2 == doctest::Approx(-std::atan(0.025)).epsilon(1e-12));

  ps.v_y = 0.0;
  ps.psi_dot = 0.1;
  auto [af3, ar3] = plant::slip_angles(ps, 0.0, p);
  CHECK(af3 == doctest::Approx(-std::atan(0.006)).epsilon(1e-12));
  CHECK(ar3 == doctest::Approx(std::atan(0.008)).epsilon(1e-12));

  ps.v_x = 0.5;
  CHECK_THROWS_AS(plant::slip_angles(ps, 0.0, p), Error);
}

TEST_CASE("derivatives: equilibrium, moment balance, a_y identity") {
  const auto p = sedan();
  plant::PlantState ps;
  ps.v_x = 20.0;
  const auto d0 = plant::derivatives(ps, 0.0, 0.0, p);
  CHECK(d0.dv_y == doctest::Approx(0.0));
  CHECK(d0.dpsi_dot == doctest::Approx(0.0));

  // symmetric car: pure v_y perturbation produces no yaw moment
  plant::VehicleParams sym = p;
  sym.lf = sym.lr = 1.4;
  sym.tire.f_peak_front = sym.tire.f_peak_rear = 0.0;
  sym.finalize();
  plant::PlantState ps2;
  ps2.v_x = 20.0;
  ps2.v_y = 0.4;
  const auto d2 = plant::derivatives(ps2, 0.0, 0.0, sym);
  CHECK(d2.dpsi_dot == doctest::Approx(0.0).epsilon(1e-12));

  // a_y = v_y_dot + v_x psi_dot at any state
  plant::PlantState ps3;
  ps3.v_x = 17.0;
  ps3.v_y = 0.3;
  ps3.psi_dot = 0.12;
  const auto d3 = plant::derivatives(ps3, 0.03, 0.5, p);
  CHECK(d3.a_y == doctest::Approx(d3.dv_y + ps3.v_x * ps3.psi_dot).epsilon(1e-15));
}

TEST_CASE("step: equilibrium is a fixed point of the lateral states") {
  const auto p = sedan();
  plant::PlantState ps;
  ps.v_x = 15.0;
  const auto out = plant::step(ps, 0.0, 0.0, 0.01, p);
  CHECK(out.v_y == doctest::Approx(0.0));
  CHECK(out.psi_dot == doctest::Approx(0.0));
  CHECK(out.v_x == doctest::Approx(15.0));
}

TEST_CASE("step: RK4 order verified by Richardson extrapolation") {
  const auto p = sedan();
  plant::PlantState ps;
  ps.v_x = 20.0;
  ps.v_y = 0.4;
  ps.psi_dot = 0.2;
  const double delta = 0.03, dt = 0.02;

  auto advance = [&](plant::PlantState s, int n) {
    for (int i = 0; i < n; ++i) s = plant::step(s, delta, 0.0, dt / n, p);
    return s;
  };
  const auto ref = advance(ps, 40);
  const auto coarse = advance(ps, 1);
  const auto fine = advance(ps, 2);
  const double e1 = std::abs(coarse.v_y - ref.v_y) + std::abs(coarse.psi_dot - ref.psi_dot);
  const double e2 = std::abs(fine.v_y - ref.v_y) + std::abs(fine.psi_dot - ref.psi_dot);
  const double ratio = e1 / std::max(e2, 1e-300);
  CHECK(ratio > 8.0);
  CHECK(ratio < 40.0);
}

TEST_CASE("plant matches the analytic linear model in the linear tire region") {
  const auto p = sedan();
  const double vx = 20.0, l_dist = 10.0, dt = 0.001;
  const auto lin = ctrl::lateral_linear_model(p, vx, l_dist);

  // nonlinear plant on a long straight
  const auto trk = track::build_track({{track::SegmentSpec::Kind::Straight, 2000, 0, 0}});
  plant::PlantState ps;
  ps.x = 5.0;
  ps.v_x = vx;

  Vec xl = Vec::Zero(4);  // [e_yL, e_y_dot, e_psi, psi_dot]
  Vec peak = Vec::Zero(4), err = Vec::Zero(4);
  int hint = -1;
  double t = 0.0;
  for (int k = 0; k < 1000; ++k) {
    // small steering excitation keeps slips well under 3 deg
    const double delta = deg2rad(0.25) * std::sin(2.0 * kPi * 1.0 * t);
    // integrate the linear model with RK4 at the same rate
    auto f = [&](const Vec& x) {
      Vec phi(2);
      phi << 0.0, 0.0;  // straight road
      return Vec(lin.a * x + lin.b * delta + lin.b_phi * phi);
    };
    const Vec k1 = f(xl), k2 = f(xl + 0.5 * dt * k1), k3 = f(xl + 0.5 * dt * k2),
              k4 = f(xl + dt * k3);
    xl += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    ps = plant::step(ps, delta, 0.0, dt, p);
    t += dt;
    if (k % 10 == 0) {
      const auto lane = track::lane_coefficients(trk, {ps.x, ps.y, ps.psi}, 60.0,
                                                 {1.0, 5.0}, &hint);
      const auto x7 = plant::error_state(ps, lane, l_dist, delta, 0.0, p);
      Vec xn(4);
      xn << x7.e_yl, x7.e_y_dot, x7.e_psi, x7.psi_dot;
      err = err.cwiseMax((xn - xl).cwiseAbs());
      peak = peak.cwiseMax(xn.cwiseAbs());
    }
  }
  for (int i = 0; i < 4; ++i) {
    CAPTURE(i);
    CHECK(err[i] <= 0.02 * peak[i] + 1e-9);
  }
}

TEST_CASE("error state: on-centerline aligned driving is all zeros") {
  const auto p = sedan();
  const auto trk = track::build_track({{track::SegmentSpec::Kind::Straight, 200, 0, 0}});
  plant::PlantState ps;
  ps.x = 50.0;
  ps.v_x = 15.0;
  const auto lane = track::lane_coefficients(trk, {ps.x, ps.y, ps.psi}, 60.0);
  const auto x = plant::error_state(ps, lane, 10.0, 0.0, 0.0, p);
  CHECK(x.to_vec().cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("error state: pure offset appears in e_y and e_yL") {
  const auto p = sedan();
  const auto trk = track::build_track({{track::SegmentSpec::Kind::Straight, 200, 0, 0}});
  plant::PlantState ps;
  ps.x = 50.0;
  ps.y = 0.3;  // 0.3 m left of the lane
  ps.v_x = 15.0;
  const auto lane = track::lane_coefficients(trk, {ps.x, ps.y, ps.psi}, 60.0);
  const auto x = plant::error_state(ps, lane, 10.0, 0.0, 0.0, p);
  CHECK(x.e_y == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(x.e_yl == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(std::abs(x.e_psi) < 1e-9);
}

TEST_CASE("error state: steady cornering reaches psi_dot = v/R within 5 percent") {
  const auto p = sedan();
  const double radius = 100.0, vx = 15.0;
  const auto trk = track::build_track({{track::SegmentSpec::Kind::Arc, 600, radius, 0}});
  const auto start = trk.pose_at(5.0);
  plant::PlantState ps;
  ps.x = start.x;
  ps.y = start.y;
  ps.psi = start.psi;
  ps.v_x = vx;
  int hint = -1;
  double delta = 0.0;
  plant::VehicleState x7;
  for (int k = 0; k < 8000; ++k) {  // 8 s at 1 kHz with a simple preview P-law
    if (k % 10 == 0) {
      const auto lane = track::lane_coefficients(trk, {ps.x, ps.y, ps.psi}, 60.0,
                                                 {1.0, 5.0}, &hint);
      x7 = plant::error_state(ps, lane, 10.0, delta, 0.0, p);
      delta = -0.08 * x7.e_yl + 1.2 * x7.e_psi + 2.0 * lane.c2 * (p.lf + p.lr);
    }
    ps = plant::step(ps, delta, 0.0, 0.001, p);
  }
  CHECK(x7.psi_dot == doctest::Approx(vx / radius).epsilon(0.05));
}

TEST_CASE("stability: lateral motion decays on a straight with zero steering") {
  const auto p = sedan();
  plant::PlantState ps;
  ps.v_x = 20.0;
  ps.v_y = 0.5;
  ps.psi_dot = 0.3;
  double vy_peak = 0.0, r_peak = 0.0;
  std::vector<double> vy_env, r_env;
  for (int k = 0; k < 3000; ++k) {
    ps = plant::step(ps, 0.0, 0.0, 0.001, p);
    vy_peak = std::max(vy_peak, std::abs(ps.v_y));
    r_peak = std::max(r_peak, std::abs(ps.psi_dot));
    if (k % 500 == 499) {
      vy_env.push_back(std::abs(ps.v_y));
      r_env.push_back(std::abs(ps.psi_dot));
    }
  }
  for (size_t i = 1; i < vy_env.size(); ++i) {
    CHECK(vy_env[i] <= vy_env[i - 1] + 1e-12);
    CHECK(r_env[i] <= r_env[i - 1] + 1e-12);
  }
  CHECK(std::abs(ps.v_y) < 1e-3 * vy_peak);
}

TEST_CASE("longitudinal pd: tracking, saturation, curvature reference") {
  plant::PdGains g;
  g.kp = 1.0;
  g.kd = 0.0;
  plant::LongitudinalPd pd(g);
  CHECK(pd.command(15.0, 15.0, 0.01) == doctest::Approx(0.0));
  plant::LongitudinalPd pd2(g);
  CHECK(pd2.command(15.0, 20.0, 0.01) == doctest::Approx(3.0));  // saturated
  CHECK(plant::speed_reference(0.01, 25.0, 4.0) == doctest::Approx(20.0));
  CHECK(plant::speed_reference(0.0, 25.0, 4.0) == doctest::Approx(25.0));
}

TEST_CASE("steering actuator: magnitude and rate limits") {
  const auto p = sedan();
  // rate limit: 600 deg/s over 1 ms is 0.6 deg
  const double d1 = plant::apply_steer_limits(0.0, deg2rad(5.0), 0.001, p);
  CHECK(d1 == doctest::Approx(deg2rad(0.6)).epsilon(1e-12));
  // magnitude clamp
  double d = 0.0;
  for (int i = 0; i < 1000; ++i) d = plant::apply_steer_limits(d, deg2rad(90), 0.001, p);
  CHECK(d == doctest::Approx(p.steer_limit).epsilon(1e-12));
}
