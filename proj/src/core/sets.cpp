#include "core/sets.hpp"

namespace ksmpc::sets {

ctrl::FirstStepConstraint InvariantSets::first_step_constraint() const {
  return {t_r, first_h, first_h_eroded};
}

InvariantSets compute_sets(const koopman::KoopmanModel& model,
                           const ctrl::RiccatiResult& ric,
                           const ctrl::SmpcOptions& opt_in, const Mat& sigma_w,
                           const SetsConfig& cfg) {
  ctrl::SmpcOptions opt = opt_in;
  opt.apply_defaults();
  const int n = model.n_lift();

  InvariantSets out;
  out.w_bar_used = cfg.wbar_safety * model.w_bar;

  // reduce on the closed loop driven by input and disturbance directions
  Mat b_ext(n, 1 + n);
  b_ext << model.b, Mat(out.w_bar_used.asDiagonal());
  ctrl::Reduction red =
      ctrl::balanced_truncation(ric.a_cl, b_ext, model.c, cfg.reduced_dim);

  // round the reduced coordinates: scale each axis by the constraint-set
  // support so the polytope recursions run on well-conditioned sets
  {
    Mat rows_r0;
    Vec bounds0;
    const Mat c_r0 = model.c * red.t_inv;
    opt.constraints.expand(c_r0, &rows_r0, &bounds0);
    poly::HPolytope probe;
    probe.h_mat.resize(rows_r0.rows() + 4, cfg.reduced_dim);
    probe.h_vec.resize(rows_r0.rows() + 4);
    probe.h_mat << rows_r0, c_r0.row(5), -c_r0.row(5), c_r0.row(6), -c_r0.row(6);
    probe.h_vec << bounds0, cfg.ay_envelope, cfg.ay_envelope, cfg.vy_envelope,
        cfg.vy_envelope;
    Vec scale(cfg.reduced_dim);
    for (int k = 0; k < cfg.reduced_dim; ++k) {
      Vec dir = Vec::Zero(cfg.reduced_dim);
      dir[k] = 1.0;
      const auto hi = poly::support(probe, dir);
      const auto lo = poly::support(probe, -dir);
      double ext = 1.0;
      if (hi && lo) ext = std::max({*hi, *lo, 1e-6});
      scale[k] = 1.0 / ext;
    }
    red.t = scale.asDiagonal() * red.t;
    red.t_inv = red.t_inv * scale.cwiseInverse().asDiagonal();
  }
  out.t_r = red.t;
  out.t_inv_r = red.t_inv;
  out.hankel = red.hankel;
  out.mismatch_bound = red.tail_bound;

  const Mat a_cl_r = red.t * ric.a_cl * red.t_inv;
  out.b_red = red.t * model.b;
  const Mat k_r = ric.k * red.t_inv;  // 1 x r
  out.a_red = a_cl_r + out.b_red * k_r;  // open-loop A in reduced coordinates
  const Mat c_r = model.c * red.t_inv;   // 7 x r

  // tightened per-step sets in reduced coordinates
  Mat sw = sigma_w;
  if (opt.sigma_diag_projection) sw = sigma_w.diagonal().asDiagonal();
  const Mat sigma0 = opt.sigma0_is_sigma_w ? sw : Mat::Zero(n, n);
  const auto sigmas = ctrl::propagate_covariance(ric.a_cl, model.g, sw, sigma0,
                                                 opt.horizon,
                                                 opt.cov_transposed_compat);
  Mat rows_l, rows_r;
  Vec bounds;
  opt.constraints.expand(model.c, &rows_l, &bounds);        // lifted rows (for Sigma)
  opt.constraints.expand(c_r, &rows_r, &bounds);            // reduced rows

  // envelope rows keep the reduced polytopes compact (a_y and v_y have no
  // chance constraints of their own)
  Mat env_rows(4, cfg.reduced_dim);
  Vec env_bounds(4);
  env_rows.row(0) = c_r.row(5);
  env_rows.row(1) = -c_r.row(5);
  env_rows.row(2) = c_r.row(6);
  env_rows.row(3) = -c_r.row(6);
  env_bounds << cfg.ay_envelope, cfg.ay_envelope, cfg.vy_envelope, cfg.vy_envelope;

  auto step_set = [&](int i, double eps) {
    const Vec margins = ctrl::tighten_margins(rows_l, sigmas[i], eps);
    ctrl::check_tightened_pairs(bounds, margins);
    poly::HPolytope s;
    s.h_mat.resize(rows_r.rows() + 4, cfg.reduced_dim);
    s.h_vec.resize(rows_r.rows() + 4);
    s.h_mat << rows_r, env_rows;
    s.h_vec << (bounds - margins), env_bounds;
    return poly::normalize(s);
  };

  std::vector<poly::HPolytope> stage_sets;
  stage_sets.reserve(opt.horizon);
  for (int i = 0; i < opt.horizon; ++i) stage_sets.push_back(step_set(i, opt.epsilon));
  const poly::HPolytope terminal = step_set(opt.horizon, opt.terminal_epsilon);

  out.c_t = poly::t_step_set(stage_sets, terminal, out.a_red, out.b_red,
                             -opt.u_bound, opt.u_bound);

  const poly::Box w_box = poly::Box::symmetric(out.w_bar_used);
  auto inv = poly::robust_control_invariant_result(
      out.c_t, out.a_red, out.b_red, -opt.u_bound, opt.u_bound, w_box, red.t,
      cfg.max_iter, cfg.tol);
  require(inv.converged, ErrorCode::NoConvergence,
          "sets: invariant iteration hit max_iter=" + std::to_string(cfg.max_iter));
  out.c_inf = poly::normalize(inv.set);
  out.iterations = inv.iterations;

  // first-step constraint: C_inf eroded by GW, the phi envelope, and the
  // reported reduction mismatch margin
  out.first_h = out.c_inf.h_mat;
  out.first_h_eroded = out.c_inf.h_vec;
  const Mat t_bphi = red.t * model.b_phi;  // r x 3
  Vec phi_absmax(3);
  phi_absmax << cfg.vx_abs_max, cfg.c2_abs_max, cfg.c3_abs_max;
  for (int i = 0; i < out.first_h.rows(); ++i) {
    const Vec dir = out.first_h.row(i).transpose();
    const double gw = w_box.support(dir, red.t);
    out.gw_erosion_max = std::max(out.gw_erosion_max, gw);
    double phi_ero = 0.0;
    if (cfg.phi_erosion) {
      const Vec coef = t_bphi.transpose() * dir;
      phi_ero = coef.cwiseAbs().dot(phi_absmax);
      out.phi_erosion_max = std::max(out.phi_erosion_max, phi_ero);
    }
    out.first_h_eroded[i] -= gw + phi_ero + cfg.mismatch_margin;
  }
  poly::HPolytope first{out.first_h, out.first_h_eroded};
  require(!poly::is_empty(first), ErrorCode::EmptyPolytope,
          "sets: first-step set empty after erosion");
  return out;
}

}  // namespace ksmpc::sets
