#pragma once

#include <optional>
#include <map>
#include <vector>

#include "core/koopman.hpp"
#include "core/plant.hpp"
#include "core/qp.hpp"
#include "core/riccati.hpp"
#include "core/track.hpp"

namespace ksmpc::ctrl {

// ---------------------------------------------------------------- covariance

// Sigma_{i+1} = A_cl Sigma_i A_cl' + G Sigma_w G' (error-dynamics form);
// transposed=true selects the literal transposed recursion instead.
std::vector<Mat> propagate_covariance(const Mat& a_cl, const Mat& g,
                                      const Mat& sigma_w, const Mat& sigma_0,
                                      int n_steps, bool transposed = false);

// ------------------------------------------------------ chance constraints

// Chebyshev-Cantelli margin sqrt(h' Sigma h) * sqrt((1-eps)/eps)
double cc_margin(double h_sigma_h, double epsilon);

// margins for each row of `rows` (rows act on the covariance's space)
Vec tighten_margins(const Mat& rows, const Mat& sigma, double epsilon);

// rows come in +/- pairs (2k, 2k+1); throws OverTightened when a tightened
// pair has empty intersection
void check_tightened_pairs(const Vec& bounds, const Vec& margins);

// --------------------------------------------------------------- constraints

// symmetric bounds |rows_x * x| <= bounds on the physical state
struct ConstraintSpec {
  Mat rows_x;  // k x 7
  Vec bounds;  // k

  // expands to +/- row pairs in a model state space via map (n_model x 7)'
  void expand(const Mat& state_from_x, Mat* rows, Vec* b) const;
  static ConstraintSpec lane_keeping_defaults();
};

// ------------------------------------------------------------ condensed SMPC

struct SmpcModel {
  Mat a_cl;    // n x n
  Mat b;       // n x 1
  Mat b_phi;   // n x d_phi
  Mat k_gain;  // 1 x n, u = -K s + v
  Mat q;       // n x n stage cost
  Vec q_xv;    // n, cross term (zero allowed)
  double r = 1.0;
  Mat p_term;  // n x n terminal cost
};

struct SoftInput {
  double u_min, u_max;            // hard bounds
  double u_soft_min, u_soft_max;  // first-step soft bounds
  double slack_weight;
};

// Dense condensation of the SMPC QP over [v_0..v_{Np-1}, sig_lo, sig_hi].
// All constraint LHS rows are constant; only gradients/RHS depend on (s0, phi).
class CondensedSmpc {
 public:
  CondensedSmpc(const SmpcModel& m, int horizon, const Mat& state_rows,
                const Vec& state_bounds, const std::vector<Vec>& margins,
                const SoftInput& soft, const Mat& first_step_rows,
                const Vec& first_step_bounds);

  qp::Problem assemble(const Vec& s0, const Mat& phi) const;
  bool step0_feasible(const Vec& s0, double tol = 1e-9) const;
  int horizon() const { return np_; }
  int num_vars() const { return np_ + 2; }
  const SmpcModel& model() const { return model_; }

 private:
  SmpcModel model_;
  int np_, n_, d_phi_, nv_;
  Mat hessian_;
  Mat grad_z_, grad_phi_;
  Mat con_rows_;
  Vec rhs_0_;
  Mat rhs_z_, rhs_phi_;
  Mat state_rows_;
  Vec state_bounds_, margin0_;
};

// ------------------------------------------------------------- controllers

struct StepDiagnostics {
  bool feasible = true;
  qp::Status status = qp::Status::Optimal;
  double objective = 0.0;
  double v0 = 0.0;
  double sigma_lo = 0.0, sigma_hi = 0.0;
  int iterations = 0;
  double solve_time_ms = 0.0;
  bool fallback = false;
  Vec v_seq;
};

struct SmpcOptions {
  int horizon = 20;
  Vec q_diag;  // 7 entries; defaulted in ctor when empty
  double q_vv = 50.0;
  double slack_weight = 1e4;
  double epsilon = 0.1;
  double terminal_epsilon = 0.1;
  double u_bound = deg2rad(30.0);
  double u_soft = deg2rad(10.0);
  ConstraintSpec constraints;  // defaulted when empty
  bool sigma_diag_projection = true;
  bool cov_transposed_compat = false;
  bool sigma0_is_sigma_w = false;
  qp::Settings qp;

  void apply_defaults();
};

// first-step constraint rows acting on t_r * s_1 (lifted-to-reduced)
struct FirstStepConstraint {
  Mat t_r;      // r x N
  Mat h;        // rows x r
  Vec h_eroded; // already eroded by GW (and phi envelope)
};

class KsmpcController {
 public:
  KsmpcController(const koopman::KoopmanModel& model, const RiccatiResult& ric,
                  const SmpcOptions& opt, const Mat& sigma_w,
                  std::optional<FirstStepConstraint> first_step);

  std::pair<double, StepDiagnostics> step(const plant::VehicleState& x,
                                          const std::vector<track::ExternalSignal>& phi);
  std::pair<double, StepDiagnostics> step_lifted(const Vec& z,
                                                 const std::vector<track::ExternalSignal>& phi);
  void reset() { prev_.reset(); }

  const RiccatiResult& riccati() const { return ric_; }
  const CondensedSmpc& condensed() const { return *smpc_; }
  const std::vector<Mat>& covariance_schedule() const { return sigmas_; }
  const std::vector<Vec>& margins() const { return margins_; }
  const koopman::KoopmanModel& model() const { return model_; }
  const SmpcOptions& options() const { return opt_; }

 private:
  koopman::KoopmanModel model_;
  RiccatiResult ric_;
  SmpcOptions opt_;
  std::vector<Mat> sigmas_;
  std::vector<Vec> margins_;
  std::optional<CondensedSmpc> smpc_;
  std::optional<qp::Solution> prev_;
};

// 4-state look-ahead lateral model [e_yL, e_y_dot, e_psi, psi_dot];
// external signal [psi_dot_des, c3]
struct LinearLateralModel {
  Mat a;      // 4 x 4 continuous
  Mat b;      // 4 x 1
  Mat b_phi;  // 4 x 2
};
LinearLateralModel lateral_linear_model(const plant::VehicleParams& p, double v_x,
                                        double l_dist);

void zoh_discretize(const Mat& a, const Mat& b, double dt, Mat* ad, Mat* bd);

struct LsmpcOptions {
  int horizon = 20;
  Vec q_diag4;  // weights on [e_yL, e_y_dot, e_psi, psi_dot]
  double q_vv = 50.0;
  double slack_weight = 1e4;
  double epsilon = 0.1;
  double terminal_epsilon = 0.1;
  double u_bound = deg2rad(30.0);
  double u_soft = deg2rad(10.0);
  Vec state_bounds4;  // |x_i| bounds
  Vec sigma_diag4;    // residual variances of the discrete linear model
  double l_dist = 10.0;
  double dt = 0.01;
  double vx_quantum = 0.25;
  qp::Settings qp;

  void apply_defaults();
};

class LsmpcController {
 public:
  LsmpcController(const plant::VehicleParams& p, const LsmpcOptions& opt);

  // phi entries are the shared (v_x, c2, c3) preview; the model's external
  // signal [psi_dot_des, c3] is derived internally
  std::pair<double, StepDiagnostics> step(const plant::VehicleState& x,
                                          const std::vector<track::ExternalSignal>& phi);
  void reset() { prev_.reset(); }
  const LsmpcOptions& options() const { return opt_; }

 private:
  struct Entry {
    CondensedSmpc smpc;
    RiccatiResult ric;
  };
  const Entry& entry_for(double v_x);

  plant::VehicleParams params_;
  LsmpcOptions opt_;
  std::map<long, Entry> cache_;
  std::optional<qp::Solution> prev_;
  long prev_key_ = std::numeric_limits<long>::min();
};

// residual statistics of the discretized linear model over a dataset
struct LinearResidualStats {
  Vec variance4;
  Vec max_abs4;
};
LinearResidualStats linear_model_residuals(const koopman::Dataset& ds,
                                           const plant::VehicleParams& p,
                                           double l_dist, double dt);

class KlqController {
 public:
  KlqController(const koopman::KoopmanModel& model, const RiccatiResult& ric,
                double u_bound)
      : model_(model), ric_(ric), u_bound_(u_bound) {}
  double step(const plant::VehicleState& x) const;
  double step_lifted(const Vec& z) const;

 private:
  koopman::KoopmanModel model_;
  RiccatiResult ric_;
  double u_bound_;
};

// paper-parity diagonal residual covariance (physical block)
Mat paper_sigma_w(int n_lift);

}  // namespace ksmpc::ctrl
