#pragma once

#include <vector>

#include "core/common.hpp"

namespace ksmpc::track {

// curvature is kappa0 + kappa_rate * s along the segment (s from segment start)
struct ClothoidSegment {
  double length_m = 0.0;
  double kappa0 = 0.0;
  double kappa_rate = 0.0;
};

struct CenterlineSample {
  double s, x, y, psi, kappa;
};

struct Track {
  std::vector<ClothoidSegment> segments;
  std::vector<CenterlineSample> centerline;
  double sample_step = 0.5;

  double length() const;
  double kappa_at(double s) const;
  double kappa_rate_at(double s) const;
  CenterlineSample pose_at(double s) const;  // interpolated
  // arclength of the closest centerline sample; hint accelerates the scan
  double nearest_s(double x, double y, int* hint = nullptr) const;
};

struct SegmentSpec {
  enum class Kind { Straight, Arc, Clothoid };
  Kind kind = Kind::Straight;
  double length = 0.0;
  double radius = 0.0;     // arcs: signed, positive turns left
  double kappa_end = 0.0;  // clothoids: curvature at segment end
};

struct BuildOptions {
  double sample_step = 0.5;
  double kappa_max = 0.05;
  double auto_transition_length = 25.0;  // 0 disables auto clothoid insertion
};

Track build_track(const std::vector<SegmentSpec>& spec,
                  const BuildOptions& opt = {});

// lane polynomial in the vehicle frame: y(x) = c0 + c1 x + c2 x^2 + c3 x^3
struct LaneCoefficients {
  double c0 = 0, c1 = 0, c2 = 0, c3 = 0;
};

struct Pose {
  double x = 0, y = 0, psi = 0;
};

struct LaneOptions {
  double fit_step = 1.0;
  double capture_range = 5.0;
};

LaneCoefficients lane_coefficients(const Track& t, const Pose& pose,
                                   double preview_m,
                                   const LaneOptions& opt = {},
                                   int* hint = nullptr);

// (f(L), f'(L)) of the lane polynomial
std::pair<double, double> lookahead_errors(const LaneCoefficients& c, double l_dist);

struct ExternalSignal {
  double vx = 0, c2 = 0, c3 = 0;
};

// piecewise-linear speed profile over arclength
class SpeedProfile {
 public:
  static SpeedProfile constant(double v, double length);
  struct Override {
    double s_begin, s_end, v;
  };
  struct PlanParams {
    double v_max = 20.0;
    double v_min = 3.0;
    double ay_max = 4.0;
    double accel_limit = 2.5;
    double decel_limit = 3.5;
    std::vector<Override> overrides;
  };
  static SpeedProfile plan(const Track& t, const PlanParams& p);

  double v_at(double s) const;

  std::vector<double> s_grid;
  std::vector<double> v_grid;
};

// phi_{k+i|k}, i = 0..horizon_steps-1, advancing arclength with the profile
std::vector<ExternalSignal> preview_external(const Track& t, double s0,
                                             const SpeedProfile& profile,
                                             int horizon_steps, double dt);

}  // namespace ksmpc::track
