#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace ksmpc {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

constexpr int kNumStates = 7;   // [e_y, e_yL, e_y_dot, e_psi, psi_dot, a_y, v_y]
constexpr int kNumExternal = 3; // [v_x, c2, c3]

inline constexpr double kPi = 3.14159265358979323846;
inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

// Error kinds; mirrored as status codes at the C API boundary.
enum class ErrorCode {
  Config = 1,
  Io,
  Numeric,
  EmptySpec,
  CurvatureJump,
  OffTrack,
  EndOfTrack,
  DegenerateSpeed,
  NonFinite,
  InsufficientData,
  RankDeficient,
  EmptyPolytope,
  NoConvergence,
  NotStabilizable,
  OverTightened,
  DimensionMismatch,
  MissingSets,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

inline double wrap_angle(double a) {
  while (a > kPi) a -= 2.0 * kPi;
  while (a < -kPi) a += 2.0 * kPi;
  return a;
}

}  // namespace ksmpc
