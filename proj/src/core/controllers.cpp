#include "core/controllers.hpp"

#include <chrono>
#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

namespace ksmpc::ctrl {

std::vector<Mat> propagate_covariance(const Mat& a_cl, const Mat& g,
                                      const Mat& sigma_w, const Mat& sigma_0,
                                      int n_steps, bool transposed) {
  Mat gw;
  if (transposed) gw = g.transpose() * sigma_w * g;
  else gw = g * sigma_w * g.transpose();
  std::vector<Mat> out;
  out.reserve(n_steps + 1);
  out.push_back(0.5 * (sigma_0 + sigma_0.transpose()));
  for (int i = 0; i < n_steps; ++i) {
    Mat next;
    if (transposed) next = a_cl.transpose() * out.back() * a_cl + gw;
    else next = a_cl * out.back() * a_cl.transpose() + gw;
    out.push_back(0.5 * (next + next.transpose()));
  }
  return out;
}

double cc_margin(double h_sigma_h, double epsilon) {
  require(epsilon > 0.0 && epsilon < 1.0, ErrorCode::Config,
          "tighten: epsilon must be in (0,1)");
  require(h_sigma_h >= -1e-12, ErrorCode::Numeric, "tighten: negative variance");
  return std::sqrt(std::max(0.0, h_sigma_h)) *
         std::sqrt((1.0 - epsilon) / epsilon);
}

Vec tighten_margins(const Mat& rows, const Mat& sigma, double epsilon) {
  Vec m(rows.rows());
  for (int i = 0; i < rows.rows(); ++i)
    m[i] = cc_margin(rows.row(i) * sigma * rows.row(i).transpose(), epsilon);
  return m;
}

void check_tightened_pairs(const Vec& bounds, const Vec& margins) {
  require(bounds.size() == margins.size() && bounds.size() % 2 == 0,
          ErrorCode::DimensionMismatch, "tighten: expected +/- row pairs");
  for (int k = 0; k + 1 < bounds.size(); k += 2) {
    const double width = (bounds[k] - margins[k]) + (bounds[k + 1] - margins[k + 1]);
    require(width >= 0.0, ErrorCode::OverTightened,
            "tighten: row pair " + std::to_string(k / 2) +
                " is infeasible after tightening");
  }
}

void ConstraintSpec::expand(const Mat& state_from_x, Mat* rows, Vec* b) const {
  const int k = static_cast<int>(rows_x.rows());
  require(bounds.size() == k, ErrorCode::DimensionMismatch,
          "constraints: rows/bounds mismatch");
  rows->resize(2 * k, state_from_x.cols());
  b->resize(2 * k);
  for (int i = 0; i < k; ++i) {
    rows->row(2 * i) = rows_x.row(i) * state_from_x;
    rows->row(2 * i + 1) = -rows_x.row(i) * state_from_x;
    (*b)[2 * i] = bounds[i];
    (*b)[2 * i + 1] = bounds[i];
  }
}

ConstraintSpec ConstraintSpec::lane_keeping_defaults() {
  ConstraintSpec c;
  c.rows_x = Mat::Zero(5, kNumStates);
  for (int i = 0; i < 5; ++i) c.rows_x(i, i) = 1.0;
  c.bounds.resize(5);
  c.bounds << 1.0, 1.0, 0.95, deg2rad(10.0), deg2rad(30.0);
  return c;
}

// ------------------------------------------------------------ condensed SMPC

CondensedSmpc::CondensedSmpc(const SmpcModel& m, int horizon, const Mat& state_rows,
                             const Vec& state_bounds,
                             const std::vector<Vec>& margins, const SoftInput& soft,
                             const Mat& first_step_rows, const Vec& first_step_bounds)
    : model_(m),
      np_(horizon),
      n_(static_cast<int>(m.a_cl.rows())),
      d_phi_(static_cast<int>(m.b_phi.cols())),
      nv_(horizon + 2),
      state_rows_(state_rows),
      state_bounds_(state_bounds) {
  require(np_ >= 1, ErrorCode::Config, "smpc: horizon must be >= 1");
  require(static_cast<int>(margins.size()) == np_ + 1, ErrorCode::DimensionMismatch,
          "smpc: need margins for steps 0..Np");
  require(soft.u_min <= soft.u_soft_min && soft.u_soft_min <= soft.u_soft_max &&
              soft.u_soft_max <= soft.u_max,
          ErrorCode::Config, "smpc: bound ordering u_min <= soft <= u_max");
  margin0_ = margins[0];

  // state transition powers and input maps
  std::vector<Mat> f(np_ + 1);
  f[0] = Mat::Identity(n_, n_);
  for (int i = 1; i <= np_; ++i) f[i] = m.a_cl * f[i - 1];
  // p[i]: s_i as a function of theta; phimap[i]: s_i as a function of vec(phi)
  std::vector<Mat> p(np_ + 1), phimap(np_ + 1);
  for (int i = 0; i <= np_; ++i) {
    p[i] = Mat::Zero(n_, nv_);
    phimap[i] = Mat::Zero(n_, d_phi_ * np_);
    for (int j = 0; j < i; ++j) {
      p[i].col(j) = f[i - 1 - j] * m.b;
      phimap[i].middleCols(d_phi_ * j, d_phi_) = f[i - 1 - j] * m.b_phi;
    }
  }

  const int i_lo = np_, i_hi = np_ + 1;  // slack variable indices
  Mat jmat = Mat::Zero(nv_, nv_);
  grad_z_ = Mat::Zero(nv_, n_);
  grad_phi_ = Mat::Zero(nv_, d_phi_ * np_);
  for (int i = 0; i < np_; ++i) {
    jmat.noalias() += p[i].transpose() * m.q * p[i];
    jmat(i, i) += m.r;
    grad_z_.noalias() += 2.0 * p[i].transpose() * m.q * f[i];
    grad_phi_.noalias() += 2.0 * p[i].transpose() * m.q * phimap[i];
    if (m.q_xv.size()) {
      const Vec px_qxv = p[i].transpose() * m.q_xv;  // nv
      for (int c = 0; c < nv_; ++c) {
        jmat(c, i) += 0.5 * px_qxv[c];
        jmat(i, c) += 0.5 * px_qxv[c];
      }
      grad_z_.row(i) += m.q_xv.transpose() * f[i];
      grad_phi_.row(i) += m.q_xv.transpose() * phimap[i];
    }
  }
  jmat.noalias() += p[np_].transpose() * m.p_term * p[np_];
  grad_z_.noalias() += 2.0 * p[np_].transpose() * m.p_term * f[np_];
  grad_phi_.noalias() += 2.0 * p[np_].transpose() * m.p_term * phimap[np_];
  jmat(i_lo, i_lo) += soft.slack_weight;
  jmat(i_hi, i_hi) += soft.slack_weight;
  hessian_ = jmat + jmat.transpose();

  // constraint stack
  const int k_state = static_cast<int>(state_rows.rows());
  const int n_first = static_cast<int>(first_step_rows.rows());
  const int n_rows = k_state * (np_ - 1)  // steps 1..Np-1
                     + k_state            // terminal
                     + 2 * np_            // hard input bounds
                     + n_first            // first-step set
                     + 2                  // soft first input
                     + 4;                 // slack caps
  con_rows_ = Mat::Zero(n_rows, nv_);
  rhs_0_.resize(n_rows);
  rhs_z_ = Mat::Zero(n_rows, n_);
  rhs_phi_ = Mat::Zero(n_rows, d_phi_ * np_);
  int r = 0;
  // steps 1..Np-1 use stage margins, Np the terminal margins
  for (int i = 1; i <= np_; ++i) {
    for (int c = 0; c < k_state; ++c) {
      con_rows_.row(r) = state_rows.row(c) * p[i];
      rhs_0_[r] = state_bounds[c] - margins[i][c];
      rhs_z_.row(r) = -state_rows.row(c) * f[i];
      rhs_phi_.row(r) = -state_rows.row(c) * phimap[i];
      ++r;
    }
  }
  for (int i = 0; i < np_; ++i) {
    // u_i = -K s_i + v_i within hard bounds
    const Mat ks = m.k_gain * p[i];  // 1 x nv
    con_rows_.row(r) = -ks;
    con_rows_(r, i) += 1.0;
    rhs_0_[r] = soft.u_max;
    rhs_z_.row(r) = m.k_gain * f[i];
    rhs_phi_.row(r) = m.k_gain * phimap[i];
    ++r;
    con_rows_.row(r) = ks;
    con_rows_(r, i) -= 1.0;
    rhs_0_[r] = -soft.u_min;
    rhs_z_.row(r) = -m.k_gain * f[i];
    rhs_phi_.row(r) = -m.k_gain * phimap[i];
    ++r;
  }
  for (int c = 0; c < n_first; ++c) {
    con_rows_.row(r) = first_step_rows.row(c) * p[1];
    rhs_0_[r] = first_step_bounds[c];
    rhs_z_.row(r) = -first_step_rows.row(c) * f[1];
    rhs_phi_.row(r) = -first_step_rows.row(c) * phimap[1];
    ++r;
  }
  // soft first input: u_soft_min - sig_lo <= u_0 <= u_soft_max + sig_hi
  {
    const Mat k0 = m.k_gain * f[0];  // 1 x n
    con_rows_(r, 0) = 1.0;
    con_rows_(r, i_hi) = -1.0;
    rhs_0_[r] = soft.u_soft_max;
    rhs_z_.row(r) = k0;
    ++r;
    con_rows_(r, 0) = -1.0;
    con_rows_(r, i_lo) = -1.0;
    rhs_0_[r] = -soft.u_soft_min;
    rhs_z_.row(r) = -k0;
    ++r;
  }
  // slack caps: 0 <= sig_lo <= u_soft_min - u_min, 0 <= sig_hi <= u_max - u_soft_max
  con_rows_(r, i_lo) = -1.0;
  rhs_0_[r] = 0.0;
  ++r;
  con_rows_(r, i_lo) = 1.0;
  rhs_0_[r] = soft.u_soft_min - soft.u_min;
  ++r;
  con_rows_(r, i_hi) = -1.0;
  rhs_0_[r] = 0.0;
  ++r;
  con_rows_(r, i_hi) = 1.0;
  rhs_0_[r] = soft.u_max - soft.u_soft_max;
  ++r;
  require(r == n_rows, ErrorCode::Numeric, "smpc: row count bookkeeping");
}

qp::Problem CondensedSmpc::assemble(const Vec& s0, const Mat& phi) const {
  require(s0.size() == n_, ErrorCode::DimensionMismatch, "smpc: state size");
  require(phi.rows() == d_phi_ && phi.cols() == np_, ErrorCode::DimensionMismatch,
          "smpc: phi preview must be d_phi x Np");
  const Eigen::Map<const Vec> phi_vec(phi.data(), d_phi_ * np_);
  qp::Problem p;
  p.hessian = hessian_;
  p.gradient = grad_z_ * s0 + grad_phi_ * phi_vec;
  p.ineq_mat = con_rows_;
  p.ineq_vec = rhs_0_ + rhs_z_ * s0 + rhs_phi_ * phi_vec;
  return p;
}

bool CondensedSmpc::step0_feasible(const Vec& s0, double tol) const {
  if (!state_rows_.rows()) return true;
  const Vec slack = (state_bounds_ - margin0_) - state_rows_ * s0;
  return slack.minCoeff() >= -tol;
}

// ---------------------------------------------------------------- K-SMPC

void SmpcOptions::apply_defaults() {
  if (q_diag.size() == 0) {
    q_diag.resize(kNumStates);
    q_diag << 10.0, 10.0, 1.0, 5.0, 1.0, 0.01, 0.1;
  }
  if (constraints.rows_x.rows() == 0)
    constraints = ConstraintSpec::lane_keeping_defaults();
}

KsmpcController::KsmpcController(const koopman::KoopmanModel& model,
                                 const RiccatiResult& ric, const SmpcOptions& opt,
                                 const Mat& sigma_w,
                                 std::optional<FirstStepConstraint> first_step)
    : model_(model), ric_(ric), opt_(opt) {
  opt_.apply_defaults();
  const int n = model_.n_lift();
  Mat sw = sigma_w;
  if (opt_.sigma_diag_projection) sw = sigma_w.diagonal().asDiagonal();
  const Mat sigma0 = opt_.sigma0_is_sigma_w ? sw : Mat::Zero(n, n);
  sigmas_ = propagate_covariance(ric_.a_cl, model_.g, sw, sigma0, opt_.horizon,
                                 opt_.cov_transposed_compat);

  Mat rows;
  Vec bounds;
  opt_.constraints.expand(model_.c, &rows, &bounds);
  margins_.resize(opt_.horizon + 1);
  for (int i = 0; i <= opt_.horizon; ++i) {
    const double eps = (i == opt_.horizon) ? opt_.terminal_epsilon : opt_.epsilon;
    margins_[i] = tighten_margins(rows, sigmas_[i], eps);
    check_tightened_pairs(bounds, margins_[i]);
  }

  SmpcModel m;
  m.a_cl = ric_.a_cl;
  m.b = model_.b;
  m.b_phi = model_.b_phi;
  m.k_gain = ric_.k;
  m.q = model_.c.transpose() * opt_.q_diag.asDiagonal() * model_.c;
  m.q_xv = Vec();
  m.r = opt_.q_vv;
  m.p_term = ric_.p;
  SoftInput soft{-opt_.u_bound, opt_.u_bound, -opt_.u_soft, opt_.u_soft,
                 opt_.slack_weight};

  Mat fs_rows(0, n);
  Vec fs_bounds(0);
  if (first_step) {
    fs_rows = first_step->h * first_step->t_r;
    fs_bounds = first_step->h_eroded;
  }
  smpc_.emplace(m, opt_.horizon, rows, bounds, margins_, soft, fs_rows, fs_bounds);
}

std::pair<double, StepDiagnostics> KsmpcController::step(
    const plant::VehicleState& x, const std::vector<track::ExternalSignal>& phi) {
  return step_lifted(model_.lift(x.to_vec()), phi);
}

std::pair<double, StepDiagnostics> KsmpcController::step_lifted(
    const Vec& z, const std::vector<track::ExternalSignal>& phi) {
  require(static_cast<int>(phi.size()) == opt_.horizon, ErrorCode::DimensionMismatch,
          "ksmpc: preview length != horizon");
  Mat phim(kNumExternal, opt_.horizon);
  for (int i = 0; i < opt_.horizon; ++i)
    phim.col(i) << phi[i].vx, phi[i].c2, phi[i].c3;

  qp::Problem p = smpc_->assemble(z, phim);
  qp::Settings settings = opt_.qp;
  if (prev_) {
    Vec x0 = prev_->x;
    x0.head(opt_.horizon - 1) = prev_->x.segment(1, opt_.horizon - 1);
    settings.x0 = x0;
    if (prev_->y.size()) settings.y0 = prev_->y;
  }
  const auto t0 = std::chrono::steady_clock::now();
  qp::Solution sol = qp::solve(p, settings);
  const auto t1 = std::chrono::steady_clock::now();

  StepDiagnostics d;
  d.status = sol.status;
  d.iterations = sol.iterations;
  d.solve_time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  d.objective = sol.objective;

  const double u_ff = (-ric_.k * z)(0);
  double delta;
  if (sol.status == qp::Status::Optimal) {
    prev_ = sol;
    d.v0 = sol.x[0];
    d.sigma_lo = sol.x[opt_.horizon];
    d.sigma_hi = sol.x[opt_.horizon + 1];
    d.v_seq = sol.x.head(opt_.horizon);
    d.feasible = smpc_->step0_feasible(z);
    delta = u_ff + d.v0;
  } else {
    prev_.reset();
    d.feasible = false;
    d.fallback = true;
    delta = u_ff;
  }
  delta = std::clamp(delta, -opt_.u_bound, opt_.u_bound);
  return {delta, d};
}

// ---------------------------------------------------------------- L-SMPC

LinearLateralModel lateral_linear_model(const plant::VehicleParams& p, double v_x,
                                        double l_dist) {
  require(v_x > p.v_x_min, ErrorCode::DegenerateSpeed,
          "linear model: speed too low");
  const double cf2 = 2.0 * p.tire.c_alpha_front_nominal;
  const double cr2 = 2.0 * p.tire.c_alpha_rear_nominal;
  const double a22 = -(cf2 + cr2) / (p.m * v_x);
  const double a23 = a22 * v_x;
  const double a24 = -(cf2 * p.lf - cr2 * p.lr) / (p.m * v_x);
  const double a42 = -(cf2 * p.lf - cr2 * p.lr) / p.iz;
  const double a42p = a42 / v_x;
  const double a43 = a42;
  const double a44 = -(cf2 * p.lf * p.lf + cr2 * p.lr * p.lr) / (p.iz * v_x);
  const double b21 = cf2 / p.m;
  const double b41 = cf2 * p.lf / p.iz;

  LinearLateralModel m;
  m.a.setZero(4, 4);
  m.a << 0, 1, 0, l_dist,
         0, a22, a23, a24,
         0, 0, 0, -1,
         0, a42p, a43, a44;
  m.b.setZero(4, 1);
  m.b << 0, b21, 0, b41;
  m.b_phi.setZero(4, 2);
  m.b_phi << -l_dist, -3.0 * v_x * l_dist * l_dist,
             -v_x, 0,
             1, 0,
             0, 0;
  return m;
}

void zoh_discretize(const Mat& a, const Mat& b, double dt, Mat* ad, Mat* bd) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(b.cols());
  Mat big = Mat::Zero(n + m, n + m);
  big.topLeftCorner(n, n) = a * dt;
  big.topRightCorner(n, m) = b * dt;
  const Mat e = big.exp();
  *ad = e.topLeftCorner(n, n);
  *bd = e.topRightCorner(n, m);
}

void LsmpcOptions::apply_defaults() {
  if (q_diag4.size() == 0) {
    q_diag4.resize(4);
    q_diag4 << 10.0, 1.0, 5.0, 1.0;
  }
  if (state_bounds4.size() == 0) {
    state_bounds4.resize(4);
    state_bounds4 << 1.0, 0.95, deg2rad(10.0), deg2rad(30.0);
  }
  if (sigma_diag4.size() == 0) sigma_diag4 = Vec::Zero(4);
}

LsmpcController::LsmpcController(const plant::VehicleParams& p,
                                 const LsmpcOptions& opt)
    : params_(p), opt_(opt) {
  opt_.apply_defaults();
}

const LsmpcController::Entry& LsmpcController::entry_for(double v_x) {
  const long key = std::lround(v_x / opt_.vx_quantum);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;

  const double vq = std::max(key * opt_.vx_quantum, params_.v_x_min + 0.5);
  const LinearLateralModel lin = lateral_linear_model(params_, vq, opt_.l_dist);
  Mat bu_bphi(4, 3);
  bu_bphi << lin.b, lin.b_phi;
  Mat ad, bd_all;
  zoh_discretize(lin.a, bu_bphi, opt_.dt, &ad, &bd_all);
  const Mat bd = bd_all.leftCols(1);
  const Mat bphid = bd_all.rightCols(2);

  const Mat q4 = opt_.q_diag4.asDiagonal();
  const Mat r1 = Mat::Constant(1, 1, opt_.q_vv);
  RiccatiResult ric = solve_dare(ad, bd, q4, r1);

  const Mat sigma_w4 = opt_.sigma_diag4.asDiagonal();
  const auto sigmas = propagate_covariance(ric.a_cl, Mat::Identity(4, 4), sigma_w4,
                                           Mat::Zero(4, 4), opt_.horizon, false);
  ConstraintSpec spec;
  spec.rows_x = Mat::Identity(4, 4);
  spec.bounds = opt_.state_bounds4;
  Mat rows(8, 4);
  Vec bounds(8);
  for (int i = 0; i < 4; ++i) {
    rows.row(2 * i) = Mat::Identity(4, 4).row(i);
    rows.row(2 * i + 1) = -Mat::Identity(4, 4).row(i);
    bounds[2 * i] = opt_.state_bounds4[i];
    bounds[2 * i + 1] = opt_.state_bounds4[i];
  }
  std::vector<Vec> margins(opt_.horizon + 1);
  for (int i = 0; i <= opt_.horizon; ++i) {
    const double eps = (i == opt_.horizon) ? opt_.terminal_epsilon : opt_.epsilon;
    margins[i] = tighten_margins(rows, sigmas[i], eps);
    check_tightened_pairs(bounds, margins[i]);
  }

  SmpcModel m;
  m.a_cl = ric.a_cl;
  m.b = bd;
  m.b_phi = bphid;
  m.k_gain = ric.k;
  m.q = q4;
  m.q_xv = Vec();
  m.r = opt_.q_vv;
  m.p_term = ric.p;
  SoftInput soft{-opt_.u_bound, opt_.u_bound, -opt_.u_soft, opt_.u_soft,
                 opt_.slack_weight};
  CondensedSmpc smpc(m, opt_.horizon, rows, bounds, margins, soft, Mat(0, 4),
                     Vec(0));
  auto [ins, ok] = cache_.emplace(key, Entry{std::move(smpc), std::move(ric)});
  (void)ok;
  return ins->second;
}

std::pair<double, StepDiagnostics> LsmpcController::step(
    const plant::VehicleState& x, const std::vector<track::ExternalSignal>& phi) {
  require(static_cast<int>(phi.size()) == opt_.horizon, ErrorCode::DimensionMismatch,
          "lsmpc: preview length != horizon");
  const double v_x = phi.front().vx;
  const Entry& e = entry_for(v_x);
  const long key = std::lround(v_x / opt_.vx_quantum);

  Vec xl(4);
  xl << x.e_yl, x.e_y_dot, x.e_psi, x.psi_dot;
  Mat phim(2, opt_.horizon);
  for (int i = 0; i < opt_.horizon; ++i)
    phim.col(i) << phi[i].vx * 2.0 * phi[i].c2, phi[i].c3;

  qp::Problem p = e.smpc.assemble(xl, phim);
  qp::Settings settings = opt_.qp;
  if (prev_ && prev_key_ == key) {
    Vec x0 = prev_->x;
    x0.head(opt_.horizon - 1) = prev_->x.segment(1, opt_.horizon - 1);
    settings.x0 = x0;
    if (prev_->y.size()) settings.y0 = prev_->y;
  }
  const auto t0 = std::chrono::steady_clock::now();
  qp::Solution sol = qp::solve(p, settings);
  const auto t1 = std::chrono::steady_clock::now();

  StepDiagnostics d;
  d.status = sol.status;
  d.iterations = sol.iterations;
  d.solve_time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  d.objective = sol.objective;

  const double u_ff = (-e.ric.k * xl)(0);
  double delta;
  if (sol.status == qp::Status::Optimal) {
    prev_ = sol;
    prev_key_ = key;
    d.v0 = sol.x[0];
    d.sigma_lo = sol.x[opt_.horizon];
    d.sigma_hi = sol.x[opt_.horizon + 1];
    d.feasible = e.smpc.step0_feasible(xl);
    delta = u_ff + d.v0;
  } else {
    prev_.reset();
    d.feasible = false;
    d.fallback = true;
    delta = u_ff;
  }
  delta = std::clamp(delta, -opt_.u_bound, opt_.u_bound);
  return {delta, d};
}

LinearResidualStats linear_model_residuals(const koopman::Dataset& ds,
                                           const plant::VehicleParams& p,
                                           double l_dist, double dt) {
  ds.check();
  const int m = ds.size();
  require(m > 1, ErrorCode::InsufficientData, "linear residuals: empty dataset");
  std::map<long, std::pair<Mat, Mat>> cache;  // vx key -> (Ad, Bd_all)
  const double quantum = 0.25;
  Vec sum = Vec::Zero(4), sumsq = Vec::Zero(4), maxabs = Vec::Zero(4);
  const int idx[4] = {1, 2, 3, 4};  // e_yL, e_y_dot, e_psi, psi_dot rows of x
  for (int i = 0; i < m; ++i) {
    const double vx = ds.d(0, i);
    const long key = std::lround(vx / quantum);
    auto it = cache.find(key);
    if (it == cache.end()) {
      const double vq = std::max(key * quantum, p.v_x_min + 0.5);
      const LinearLateralModel lin = lateral_linear_model(p, vq, l_dist);
      Mat bu(4, 3);
      bu << lin.b, lin.b_phi;
      Mat ad, bd;
      zoh_discretize(lin.a, bu, dt, &ad, &bd);
      it = cache.emplace(key, std::make_pair(ad, bd)).first;
    }
    Vec xl(4), yl(4);
    for (int k = 0; k < 4; ++k) {
      xl[k] = ds.x(idx[k], i);
      yl[k] = ds.y(idx[k], i);
    }
    Vec in(3);
    in << ds.u(0, i), ds.d(0, i) * 2.0 * ds.d(1, i), ds.d(2, i);
    const Vec resid = yl - it->second.first * xl - it->second.second * in;
    sum += resid;
    sumsq += resid.cwiseProduct(resid);
    maxabs = maxabs.cwiseMax(resid.cwiseAbs());
  }
  LinearResidualStats st;
  const Vec mean = sum / m;
  st.variance4 = sumsq / m - mean.cwiseProduct(mean);
  st.max_abs4 = maxabs;
  return st;
}

double KlqController::step(const plant::VehicleState& x) const {
  return step_lifted(model_.lift(x.to_vec()));
}

double KlqController::step_lifted(const Vec& z) const {
  const double u = (-ric_.k * z)(0);
  return std::clamp(u, -u_bound_, u_bound_);
}

Mat paper_sigma_w(int n_lift) {
  Vec d = Vec::Zero(n_lift);
  d.head(kNumStates) << 1.43e-5, 2.70e-5, 1.31e-3, 7.64e-6, 2.46e-3, 1.5, 1.41e-3;
  return d.asDiagonal();
}

}  // namespace ksmpc::ctrl
