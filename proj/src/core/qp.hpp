#pragma once

#include <limits>
#include <optional>

#include "core/common.hpp"

namespace ksmpc::qp {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Convex QP:  min 1/2 x'Hx + g'x
//             s.t. ineq_mat x <= ineq_vec,  eq_mat x = eq_vec,  lb <= x <= ub
// Empty matrices/vectors mean the block is absent.
struct Problem {
  Mat hessian;
  Vec gradient;
  Mat ineq_mat;
  Vec ineq_vec;
  Mat eq_mat;
  Vec eq_vec;
  Vec lb, ub;

  int num_vars() const { return static_cast<int>(gradient.size()); }
  void check() const;
};

struct Settings {
  double eps_abs = 1e-6;
  double eps_rel = 1e-6;
  double eps_infeas = 1e-7;
  int max_iter = 4000;
  double rho = 0.1;
  double sigma = 1e-6;
  double alpha = 1.6;  // over-relaxation
  bool adaptive_rho = true;
  int check_interval = 25;
  bool polish = true;
  double lp_regularization = 1e-9;
  bool scale = true;
  // warm start (dimensions must match the problem; see warm_start())
  std::optional<Vec> x0;
  std::optional<Vec> y0;
};

enum class Status { Optimal, PrimalInfeasible, DualInfeasible, MaxIter };

const char* status_name(Status s);

struct Solution {
  Vec x;
  double objective = 0.0;
  Status status = Status::MaxIter;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  // multipliers for the stacked rows [ineq; eq; active bounds], >= 0 for ineq
  Vec y;
  // Farkas-type certificate over the stacked rows when infeasible
  Vec certificate;
};

class Solver {
 public:
  Solver(const Problem& p, const Settings& s = Settings());
  Solution solve();

 private:
  void build_stack(const Problem& p);
  void scale_problem();
  void factorize();
  void compute_residuals(const Vec& x, const Vec& z, const Vec& y,
                         double& rp, double& rd, double& eps_p, double& eps_d,
                         double& rp_rel, double& rd_rel) const;
  bool primal_infeasibility(const Vec& dy, Vec& cert) const;
  bool dual_infeasibility(const Vec& dx) const;
  void polish(Solution& sol) const;

  Settings st_;
  bool lp_mode_ = false;
  int n_ = 0, m_ = 0;
  int n_ineq_ = 0, n_eq_ = 0;
  Mat p_;   // scaled hessian
  Vec q_;   // scaled gradient
  Mat a_;   // scaled stacked constraint matrix (m x n)
  Vec l_, u_;
  Vec rho_vec_, rho_inv_;
  Vec d_scale_, e_scale_;  // Ruiz diagonals
  double c_scale_ = 1.0;
  Mat p_orig_;
  Vec q_orig_;
  Mat a_orig_;
  Vec l_orig_, u_orig_;
  Eigen::LLT<Mat> llt_;
};

Solution solve(const Problem& p, const Settings& s = Settings());

// Seeds iterates from a previous solution of a same-shaped problem.
Settings warm_start(const Problem& p, const Solution& prev,
                    const Settings& base = Settings());

// LP helper: min c'x s.t. a x <= b. Uses the zero-Hessian QP path.
struct LpResult {
  Status status;
  Vec x;
  double value = 0.0;
};
LpResult solve_lp(const Vec& c, const Mat& a, const Vec& b,
                  const Settings& s = Settings());

}  // namespace ksmpc::qp
