#pragma once

#include "core/controllers.hpp"
#include "core/koopman.hpp"
#include "core/polytope.hpp"
#include "core/reduction.hpp"

namespace ksmpc::sets {

struct SetsConfig {
  int reduced_dim = 5;
  double wbar_safety = 1.25;
  double ay_envelope = 10.0;  // bounds keeping the reduced sets compact
  double vy_envelope = 3.0;
  int max_iter = 60;
  double tol = 1e-7;
  // phi envelope for the extra first-step erosion (absolute magnitudes)
  bool phi_erosion = true;
  double vx_abs_max = 25.0;
  double c2_abs_max = 0.01;
  double c3_abs_max = 5e-4;
  double mismatch_margin = 0.0;
};

// Reduced-subspace robust control invariant set machinery for the
// first-step constraint: everything lives in xi = t_r * z coordinates.
struct InvariantSets {
  Mat t_r;      // r x N lifted -> reduced
  Mat t_inv_r;  // N x r
  Mat a_red;    // reduced open-loop Aated (A_cl + B K in reduced coords)
  Mat b_red;    // r x 1
  poly::HPolytope c_t;
  poly::HPolytope c_inf;
  // first-step constraint rows: h * (t_r s_1) <= h_eroded
  Mat first_h;
  Vec first_h_eroded;
  Vec w_bar_used;  // N, after safety factor
  Vec hankel;
  double mismatch_bound = 0.0;
  int iterations = 0;
  double gw_erosion_max = 0.0;
  double phi_erosion_max = 0.0;

  ctrl::FirstStepConstraint first_step_constraint() const;
};

InvariantSets compute_sets(const koopman::KoopmanModel& model,
                           const ctrl::RiccatiResult& ric,
                           const ctrl::SmpcOptions& opt, const Mat& sigma_w,
                           const SetsConfig& cfg);

}  // namespace ksmpc::sets
