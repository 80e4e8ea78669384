#include "core/plant.hpp"

#include <cmath>

namespace ksmpc::plant {

namespace {
constexpr double kGravity = 9.81;
}

void VehicleParams::finalize() {
  const double wheelbase = lf + lr;
  require(m > 0 && iz > 0 && lf > 0 && lr > 0, ErrorCode::Config,
          "plant: masses and lengths must be positive");
  if (tire.f_peak_front <= 0)
    tire.f_peak_front = tire.mu * m * kGravity * lr / wheelbase;
  if (tire.f_peak_rear <= 0)
    tire.f_peak_rear = tire.mu * m * kGravity * lf / wheelbase;
}

Vec VehicleState::to_vec() const {
  Vec v(kNumStates);
  v << e_y, e_yl, e_y_dot, e_psi, psi_dot, a_y, v_y;
  return v;
}

VehicleState VehicleState::from_vec(const Vec& v) {
  require(v.size() == kNumStates, ErrorCode::DimensionMismatch,
          "VehicleState: expected 7 entries");
  return {v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
}

// Smooth saturating axle force, slope 2*C_alpha at zero slip.
double tire_lateral_force(const TireParams& tp, double slip, Axle axle) {
  require(std::abs(slip) < kPi / 2, ErrorCode::Config, "tire: slip out of range");
  const double c2 = 2.0 * (axle == Axle::Front ? tp.c_alpha_front_nominal
                                               : tp.c_alpha_rear_nominal);
  const double fp = axle == Axle::Front ? tp.f_peak_front : tp.f_peak_rear;
  require(fp > 0, ErrorCode::Config, "tire: peak force not set (finalize params)");
  const double b = c2 / (fp * tp.shape);
  return fp * std::sin(tp.shape * std::atan(b * slip));
}

std::pair<double, double> slip_angles(const PlantState& ps, double delta,
                                      const VehicleParams& p) {
  require(ps.v_x > p.v_x_min, ErrorCode::DegenerateSpeed,
          "plant: longitudinal speed below minimum");
  const double alpha_f = delta - std::atan((ps.v_y + p.lf * ps.psi_dot) / ps.v_x);
  const double alpha_r = -std::atan((ps.v_y - p.lr * ps.psi_dot) / ps.v_x);
  return {alpha_f, alpha_r};
}

Derivatives derivatives(const PlantState& ps, double delta, double a_x_cmd,
                        const VehicleParams& p) {
  const auto [alpha_f, alpha_r] = slip_angles(ps, delta, p);
  const double fyf = tire_lateral_force(p.tire, alpha_f, Axle::Front);
  const double fyr = tire_lateral_force(p.tire, alpha_r, Axle::Rear);
  Derivatives d;
  d.dx = ps.v_x * std::cos(ps.psi) - ps.v_y * std::sin(ps.psi);
  d.dy = ps.v_x * std::sin(ps.psi) + ps.v_y * std::cos(ps.psi);
  d.dpsi = ps.psi_dot;
  d.dv_x = a_x_cmd;
  d.dv_y = -ps.v_x * ps.psi_dot + (fyf + fyr) / p.m;
  d.dpsi_dot = (p.lf * fyf - p.lr * fyr) / p.iz;
  d.a_y = d.dv_y + ps.v_x * ps.psi_dot;
  return d;
}

PlantState step(const PlantState& ps, double delta, double a_x_cmd, double dt,
                const VehicleParams& p) {
  require(dt > 0, ErrorCode::Config, "plant: dt must be > 0");
  delta = std::clamp(delta, -p.steer_limit, p.steer_limit);

  auto add = [](const PlantState& s, const Derivatives& d, double h) {
    PlantState o = s;
    o.x += h * d.dx;
    o.y += h * d.dy;
    o.psi += h * d.dpsi;
    o.v_x += h * d.dv_x;
    o.v_y += h * d.dv_y;
    o.psi_dot += h * d.dpsi_dot;
    return o;
  };

  const Derivatives k1 = derivatives(ps, delta, a_x_cmd, p);
  const Derivatives k2 = derivatives(add(ps, k1, dt / 2), delta, a_x_cmd, p);
  const Derivatives k3 = derivatives(add(ps, k2, dt / 2), delta, a_x_cmd, p);
  const Derivatives k4 = derivatives(add(ps, k3, dt), delta, a_x_cmd, p);

  PlantState out = ps;
  out.x += dt / 6.0 * (k1.dx + 2 * k2.dx + 2 * k3.dx + k4.dx);
  out.y += dt / 6.0 * (k1.dy + 2 * k2.dy + 2 * k3.dy + k4.dy);
  out.psi += dt / 6.0 * (k1.dpsi + 2 * k2.dpsi + 2 * k3.dpsi + k4.dpsi);
  out.v_x += dt / 6.0 * (k1.dv_x + 2 * k2.dv_x + 2 * k3.dv_x + k4.dv_x);
  out.v_y += dt / 6.0 * (k1.dv_y + 2 * k2.dv_y + 2 * k3.dv_y + k4.dv_y);
  out.psi_dot += dt / 6.0 * (k1.dpsi_dot + 2 * k2.dpsi_dot + 2 * k3.dpsi_dot + k4.dpsi_dot);

  const bool finite = std::isfinite(out.x) && std::isfinite(out.y) &&
                      std::isfinite(out.psi) && std::isfinite(out.v_x) &&
                      std::isfinite(out.v_y) && std::isfinite(out.psi_dot);
  require(finite, ErrorCode::NonFinite, "plant: state diverged");
  return out;
}

double apply_steer_limits(double delta_prev, double delta_cmd, double dt,
                          const VehicleParams& p) {
  delta_cmd = std::clamp(delta_cmd, -p.steer_limit, p.steer_limit);
  const double max_step = p.steer_rate_limit * dt;
  return delta_prev + std::clamp(delta_cmd - delta_prev, -max_step, max_step);
}

VehicleState error_state(const PlantState& ps, const track::LaneCoefficients& lane,
                         double l_dist, double delta, double a_x_cmd,
                         const VehicleParams& p) {
  VehicleState x;
  // lane polynomial gives the lane position in the vehicle frame; the error
  // conventions are e_y = y - y_des and e_psi = psi_des - psi
  const auto [f_l, fp_l] = track::lookahead_errors(lane, l_dist);
  x.e_y = -lane.c0;
  x.e_yl = -f_l;
  x.e_psi = std::atan(lane.c1);
  x.e_y_dot = -ps.v_x * std::sin(x.e_psi) + ps.v_y * std::cos(x.e_psi);
  x.psi_dot = ps.psi_dot;
  const Derivatives d = derivatives(ps, delta, a_x_cmd, p);
  x.a_y = d.a_y;
  x.v_y = ps.v_y;
  (void)fp_l;
  return x;
}

double LongitudinalPd::command(double v_x, double v_ref, double dt) {
  require(v_ref > 0, ErrorCode::Config, "pd: speed reference must be > 0");
  const double err = v_ref - v_x;
  double derr = 0.0;
  if (has_prev_ && dt > 0) derr = (err - prev_err_) / dt;
  prev_err_ = err;
  has_prev_ = true;
  const double a = g_.kp * err + g_.kd * derr;
  return std::clamp(a, -g_.accel_limit, g_.accel_limit);
}

double speed_reference(double kappa, double v_max, double ay_max) {
  const double k = std::abs(kappa);
  if (k < 1e-9) return v_max;
  return std::min(v_max, std::sqrt(ay_max / k));
}

}  // namespace ksmpc::plant
