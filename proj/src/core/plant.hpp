#pragma once

#include "core/common.hpp"
#include "core/track.hpp"

namespace ksmpc::plant {

enum class Axle { Front, Rear };

struct TireParams {
  double c_alpha_front_nominal = 8.0e4;  // N/rad, per Eq-style convention the
  double c_alpha_rear_nominal = 8.0e4;   // axle force slope at 0 is 2*C_alpha
  double saturation_angle = deg2rad(5.0);
  double shape = 1.5;
  double mu = 0.9;
  double f_peak_front = 0.0;  // filled from static load when 0
  double f_peak_rear = 0.0;
};

struct VehicleParams {
  double m = 1500.0;
  double iz = 2500.0;
  double lf = 1.2;
  double lr = 1.6;
  TireParams tire;
  double steer_limit = deg2rad(30.0);
  double steer_rate_limit = deg2rad(600.0);
  double v_x_min = 1.0;

  void finalize();  // derive peak forces from static axle loads
};

// global pose + body velocities; the truth state of the simulator
struct PlantState {
  double x = 0, y = 0, psi = 0;
  double v_x = 15.0, v_y = 0.0, psi_dot = 0.0;
};

// the 7 error/motion states exposed to identification and control
struct VehicleState {
  double e_y = 0, e_yl = 0, e_y_dot = 0, e_psi = 0;
  double psi_dot = 0, a_y = 0, v_y = 0;

  Vec to_vec() const;
  static VehicleState from_vec(const Vec& v);
};

double tire_lateral_force(const TireParams& tp, double slip, Axle axle);

std::pair<double, double> slip_angles(const PlantState& ps, double delta,
                                      const VehicleParams& p);

struct Derivatives {
  double dx, dy, dpsi, dv_x, dv_y, dpsi_dot;
  double a_y;  // v_y_dot + v_x * psi_dot at this state
};
Derivatives derivatives(const PlantState& ps, double delta, double a_x_cmd,
                        const VehicleParams& p);

// one RK4 step; delta is the applied (already limited) steering angle
PlantState step(const PlantState& ps, double delta, double a_x_cmd, double dt,
                const VehicleParams& p);

// slew-rate + magnitude limiting of the steering actuator
double apply_steer_limits(double delta_prev, double delta_cmd, double dt,
                          const VehicleParams& p);

// assembles x from pose geometry and lane coefficients; delta is the applied
// steering (a_y is evaluated with it), l_dist the look-ahead distance
VehicleState error_state(const PlantState& ps, const track::LaneCoefficients& lane,
                         double l_dist, double delta, double a_x_cmd,
                         const VehicleParams& p);

struct PdGains {
  double kp = 1.2;
  double kd = 0.1;
  double accel_limit = 3.0;
};

class LongitudinalPd {
 public:
  explicit LongitudinalPd(const PdGains& g) : g_(g) {}
  double command(double v_x, double v_ref, double dt);

 private:
  PdGains g_;
  double prev_err_ = 0.0;
  bool has_prev_ = false;
};

// curvature-based speed reference, v = min(v_max, sqrt(ay_max/|kappa|))
double speed_reference(double kappa, double v_max, double ay_max);

}  // namespace ksmpc::plant
