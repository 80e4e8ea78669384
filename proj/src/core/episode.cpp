#include "core/episode.hpp"

#include <cmath>

#include "core/rng.hpp"

namespace ksmpc::harness {

namespace {

const char* const kTickColumns[] = {
    "t",       "X",        "Y",        "psi",      "v_x",      "e_y",
    "e_yl",    "ey_dot",   "e_psi",    "psi_dot",  "a_y",      "v_y",
    "delta",   "v_star",   "sigma_lo", "sigma_hi", "alpha_f",  "alpha_r",
    "feasible", "fallback", "iters",   "z_norm"};

plant::PlantState initial_plant_state(const track::Track& trk,
                                      const ScenarioConfig& sc, double v0) {
  const auto c = trk.pose_at(sc.start_s);
  plant::PlantState ps;
  // e_y = y - y_des is positive left of the lane; left normal is (-sin, cos)
  ps.x = c.x - sc.e_y0 * std::sin(c.psi);
  ps.y = c.y + sc.e_y0 * std::cos(c.psi);
  ps.psi = c.psi - sc.e_psi0;  // e_psi = psi_des - psi
  ps.v_x = v0;
  return ps;
}

plant::VehicleState initial_error_state(const ScenarioConfig& sc) {
  plant::VehicleState x;
  x.e_y = sc.e_y0;
  x.e_yl = sc.e_y0;
  x.e_psi = sc.e_psi0;
  return x;
}

struct ControllerBundle {
  std::optional<ctrl::KsmpcController> ksmpc;
  std::optional<ctrl::LsmpcController> lsmpc;
  std::optional<ctrl::KlqController> klq;
};

ControllerBundle make_controller(const Config& cfg, ControllerKind kind,
                                 const Artifacts& art) {
  ControllerBundle b;
  switch (kind) {
    case ControllerKind::Ksmpc: {
      std::optional<ctrl::FirstStepConstraint> first;
      require(art.invariant_sets.has_value(), ErrorCode::MissingSets,
              "ksmpc requires the invariant sets artifact");
      first = art.invariant_sets->first_step_constraint();
      b.ksmpc.emplace(art.model, art.riccati, cfg.controller.smpc,
                      art.sigma_w_used, first);
      break;
    }
    case ControllerKind::Lsmpc: {
      ctrl::LsmpcOptions opt = cfg.controller.lsmpc;
      opt.l_dist = cfg.lane.lookahead;
      opt.dt = cfg.plant.dt_control;
      if (cfg.controller.lsmpc_tighten_from_data)
        opt.sigma_diag4 = art.linear_residuals.variance4;
      b.lsmpc.emplace(cfg.plant.vehicle, opt);
      break;
    }
    case ControllerKind::Klq:
      b.klq.emplace(art.model, art.riccati, cfg.controller.smpc.u_bound);
      break;
  }
  return b;
}

}  // namespace

csv::Table RunLog::to_table(bool with_timing) const {
  csv::Table t;
  t.metadata = metadata;
  for (const char* c : kTickColumns) t.columns.push_back(c);
  if (with_timing) t.columns.push_back("solve_time_ms");
  for (const auto& r : ticks) {
    std::vector<double> row = {r.t,        r.x_pos,    r.y_pos,
                               r.psi,      r.v_x,      r.x.e_y,
                               r.x.e_yl,   r.x.e_y_dot, r.x.e_psi,
                               r.x.psi_dot, r.x.a_y,   r.x.v_y,
                               r.delta,    r.v0,       r.sigma_lo,
                               r.sigma_hi, r.alpha_f,  r.alpha_r,
                               static_cast<double>(r.feasible),
                               static_cast<double>(r.fallback),
                               static_cast<double>(r.iterations),
                               r.z_norm};
    if (with_timing) row.push_back(r.solve_time_ms);
    t.rows.push_back(std::move(row));
  }
  return t;
}

RunLog RunLog::from_table(const csv::Table& t) {
  RunLog log;
  log.metadata = t.metadata;
  const bool timing =
      std::find(t.columns.begin(), t.columns.end(), "solve_time_ms") != t.columns.end();
  for (const auto& row : t.rows) {
    TickRow r;
    int i = 0;
    r.t = row[i++]; r.x_pos = row[i++]; r.y_pos = row[i++]; r.psi = row[i++];
    r.v_x = row[i++];
    r.x.e_y = row[i++]; r.x.e_yl = row[i++]; r.x.e_y_dot = row[i++];
    r.x.e_psi = row[i++]; r.x.psi_dot = row[i++]; r.x.a_y = row[i++];
    r.x.v_y = row[i++];
    r.delta = row[i++]; r.v0 = row[i++]; r.sigma_lo = row[i++]; r.sigma_hi = row[i++];
    r.alpha_f = row[i++]; r.alpha_r = row[i++];
    r.feasible = static_cast<int>(row[i++]);
    r.fallback = static_cast<int>(row[i++]);
    r.iterations = static_cast<int>(row[i++]);
    r.z_norm = row[i++];
    if (timing) r.solve_time_ms = row[i++];
    log.ticks.push_back(r);
  }
  return log;
}

int RunLog::infeasible_count() const {
  int n = 0;
  for (const auto& r : ticks) n += (r.feasible == 0);
  return n;
}

Artifacts make_artifacts(const Config& cfg, const koopman::KoopmanModel& model,
                         const ctrl::LinearResidualStats& lin,
                         std::optional<sets::InvariantSets> sets_opt) {
  Artifacts art;
  art.model = model;
  art.linear_residuals = lin;
  ctrl::SmpcOptions opt = cfg.controller.smpc;
  opt.apply_defaults();
  const Mat q = model.c.transpose() * opt.q_diag.asDiagonal() * model.c;
  const Mat r = Mat::Constant(1, 1, opt.q_vv);
  art.riccati = ctrl::solve_dare(model.a, model.b, q, r);
  art.sigma_w_used = (cfg.controller.sigma_mode == SigmaMode::Paper)
                         ? ctrl::paper_sigma_w(model.n_lift())
                         : model.sigma_w;
  art.invariant_sets = std::move(sets_opt);
  return art;
}

RunLog run_episode(const Config& cfg, const ScenarioConfig& sc,
                   ControllerKind kind, const Artifacts& art) {
  const track::Track trk = track::build_track(sc.track.segments, sc.track.build);
  const auto profile = track::SpeedProfile::plan(trk, sc.speed);
  const int np = cfg.controller.smpc.horizon;
  const double dtc = cfg.plant.dt_control;
  const int n_sub = std::max(1, static_cast<int>(std::round(dtc / cfg.plant.dt_plant)));
  const double dtp = dtc / n_sub;

  ControllerBundle ctl = make_controller(cfg, kind, art);
  Rng rng(sc.seed);
  Rng lane_rng = rng.fork(0x1a4e);
  Rng dist_rng = rng.fork(0xd157);

  RunLog log;
  log.metadata.emplace_back("controller", controller_name(kind));
  log.metadata.emplace_back("seed", std::to_string(sc.seed));
  log.metadata.emplace_back("plant",
                            sc.plant_kind == PlantKind::Nonlinear ? "nonlinear"
                                                                  : "lifted-linear");
  const bool lane_noise =
      cfg.lane.coeff_noise_std.size() == 4 && cfg.lane.coeff_noise_std.norm() > 0;

  const double s_end = trk.length() - (cfg.lane.preview_m + 10.0);
  const int max_ticks = static_cast<int>(sc.duration_s / dtc);

  if (sc.plant_kind == PlantKind::Nonlinear) {
    plant::PlantState ps = initial_plant_state(trk, sc, profile.v_at(sc.start_s));
    plant::LongitudinalPd pd(cfg.plant.pd);
    double delta_applied = 0.0, a_x = 0.0;
    int hint = -1;
    for (int k = 0; k < max_ticks; ++k) {
      const double s = trk.nearest_s(ps.x, ps.y, &hint);
      if (s >= s_end) break;
      track::LaneCoefficients lane;
      try {
        lane = track::lane_coefficients(trk, {ps.x, ps.y, ps.psi}, cfg.lane.preview_m,
                                        {cfg.lane.fit_step, cfg.lane.capture_range},
                                        &hint);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::OffTrack) {
          log.metadata.emplace_back("terminal", "offtrack");
          break;
        }
        throw;
      }
      if (lane_noise) {
        lane.c0 += lane_rng.normal(0, cfg.lane.coeff_noise_std[0]);
        lane.c1 += lane_rng.normal(0, cfg.lane.coeff_noise_std[1]);
        lane.c2 += lane_rng.normal(0, cfg.lane.coeff_noise_std[2]);
        lane.c3 += lane_rng.normal(0, cfg.lane.coeff_noise_std[3]);
      }
      const plant::VehicleState x = plant::error_state(
          ps, lane, cfg.lane.lookahead, delta_applied, a_x, cfg.plant.vehicle);
      const auto phi = track::preview_external(trk, s, profile, np, dtc);

      TickRow row;
      row.t = k * dtc;
      row.x_pos = ps.x; row.y_pos = ps.y; row.psi = ps.psi; row.v_x = ps.v_x;
      row.x = x;
      row.z_norm = art.model.lift(x.to_vec()).norm();

      double delta_cmd = 0.0;
      if (ctl.ksmpc) {
        auto [d, diag] = ctl.ksmpc->step(x, phi);
        delta_cmd = d;
        row.v0 = diag.v0; row.sigma_lo = diag.sigma_lo; row.sigma_hi = diag.sigma_hi;
        row.feasible = diag.feasible; row.fallback = diag.fallback;
        row.iterations = diag.iterations; row.solve_time_ms = diag.solve_time_ms;
      } else if (ctl.lsmpc) {
        auto [d, diag] = ctl.lsmpc->step(x, phi);
        delta_cmd = d;
        row.v0 = diag.v0; row.sigma_lo = diag.sigma_lo; row.sigma_hi = diag.sigma_hi;
        row.feasible = diag.feasible; row.fallback = diag.fallback;
        row.iterations = diag.iterations; row.solve_time_ms = diag.solve_time_ms;
      } else {
        delta_cmd = ctl.klq->step(x);
      }
      row.delta = delta_cmd;
      const auto [af, ar] = plant::slip_angles(ps, delta_applied, cfg.plant.vehicle);
      row.alpha_f = af;
      row.alpha_r = ar;
      log.ticks.push_back(row);

      a_x = pd.command(ps.v_x, profile.v_at(s), dtc);
      for (int i = 0; i < n_sub; ++i) {
        delta_applied =
            plant::apply_steer_limits(delta_applied, delta_cmd, dtp, cfg.plant.vehicle);
        ps = plant::step(ps, delta_applied, a_x, dtp, cfg.plant.vehicle);
      }
    }
  } else {
    // exact lifted-linear plant: state is z itself
    const auto& m = art.model;
    Vec z = m.lift(initial_error_state(sc).to_vec());
    const Vec w_bar = art.invariant_sets ? art.invariant_sets->w_bar_used
                                         : Vec(cfg.sets.wbar_safety * m.w_bar);
    const Vec w_std = Mat(art.sigma_w_used.diagonal().asDiagonal())
                          .diagonal()
                          .cwiseMax(0.0)
                          .cwiseSqrt();
    double s = sc.start_s;
    for (int k = 0; k < max_ticks; ++k) {
      if (s >= s_end) break;
      const auto phi = track::preview_external(trk, s, profile, np, dtc);
      const Vec x7 = m.c * z;
      const plant::VehicleState x = plant::VehicleState::from_vec(x7);

      TickRow row;
      row.t = k * dtc;
      row.v_x = phi.front().vx;
      row.x = x;
      row.z_norm = z.norm();

      double delta_cmd = 0.0;
      if (ctl.ksmpc) {
        auto [d, diag] = ctl.ksmpc->step_lifted(z, phi);
        delta_cmd = d;
        row.v0 = diag.v0; row.sigma_lo = diag.sigma_lo; row.sigma_hi = diag.sigma_hi;
        row.feasible = diag.feasible; row.fallback = diag.fallback;
        row.iterations = diag.iterations; row.solve_time_ms = diag.solve_time_ms;
      } else if (ctl.lsmpc) {
        auto [d, diag] = ctl.lsmpc->step(x, phi);
        delta_cmd = d;
        row.feasible = diag.feasible; row.fallback = diag.fallback;
        row.iterations = diag.iterations; row.solve_time_ms = diag.solve_time_ms;
      } else {
        delta_cmd = ctl.klq->step_lifted(z);
      }
      row.delta = delta_cmd;
      log.ticks.push_back(row);

      Vec w = Vec::Zero(z.size());
      if (sc.disturbance == DisturbanceMode::Gaussian) {
        for (int i = 0; i < w.size(); ++i)
          w[i] = std::clamp(dist_rng.normal(0, w_std[i]), -w_bar[i], w_bar[i]);
      } else if (sc.disturbance == DisturbanceMode::BoundedAdversarial) {
        if (k % 2 == 0) {
          for (int i = 0; i < w.size(); ++i)
            w[i] = dist_rng.coin() ? w_bar[i] : -w_bar[i];
        } else {
          for (int i = 0; i < w.size(); ++i)
            w[i] = dist_rng.uniform(-w_bar[i], w_bar[i]);
        }
      }
      Vec phi0(3);
      phi0 << phi[0].vx, phi[0].c2, phi[0].c3;
      z = m.a * z + m.b * Vec::Constant(1, delta_cmd) + m.b_phi * phi0 + w;
      s += phi[0].vx * dtc;
    }
  }
  return log;
}

koopman::Dataset collect_dataset(const Config& cfg) {
  require(!cfg.collect.episodes.empty(), ErrorCode::Config,
          "collect: no episodes configured");
  const double dtc = cfg.plant.dt_control;
  const int n_sub = std::max(1, static_cast<int>(std::round(dtc / cfg.plant.dt_plant)));
  const double dtp = dtc / n_sub;
  const int np = cfg.controller.lsmpc.horizon;

  // AR(1)-filtered steering excitation
  const double ar = std::exp(-2.0 * kPi * cfg.collect.excitation.bandwidth_hz * dtc);
  const double ar_gain =
      cfg.collect.excitation.steer_noise_std * std::sqrt(1.0 - ar * ar);

  koopman::Dataset ds;
  for (const auto& ep : cfg.collect.episodes) {
    if (ds.size() >= cfg.collect.m_target) break;
    const track::Track trk = track::build_track(ep.track.segments, ep.track.build);
    const auto profile = track::SpeedProfile::plan(trk, ep.speed);

    ctrl::LsmpcOptions lopt = cfg.controller.lsmpc;
    lopt.l_dist = cfg.lane.lookahead;
    lopt.dt = dtc;
    lopt.sigma_diag4 = Vec::Zero(4);  // plain MPC while collecting
    ctrl::LsmpcController ctl(cfg.plant.vehicle, lopt);

    ScenarioConfig sc;
    sc.start_s = 5.0;
    sc.e_y0 = ep.e_y0;
    sc.e_psi0 = ep.e_psi0;
    plant::PlantState ps = initial_plant_state(trk, sc, profile.v_at(sc.start_s));
    plant::LongitudinalPd pd(cfg.plant.pd);
    Rng rng(ep.seed);
    double noise = 0.0, delta_applied = 0.0, a_x = 0.0;
    int hint = -1;

    std::vector<Vec> xs, us, phis;
    const double s_end = trk.length() - (cfg.lane.preview_m + 10.0);
    const int max_ticks = static_cast<int>(ep.duration_s / dtc);
    for (int k = 0; k < max_ticks; ++k) {
      const double s = trk.nearest_s(ps.x, ps.y, &hint);
      if (s >= s_end) break;
      track::LaneCoefficients lane;
      try {
        lane = track::lane_coefficients(trk, {ps.x, ps.y, ps.psi}, cfg.lane.preview_m,
                                        {cfg.lane.fit_step, cfg.lane.capture_range},
                                        &hint);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::OffTrack) break;  // truncate episode
        throw;
      }
      const plant::VehicleState x = plant::error_state(
          ps, lane, cfg.lane.lookahead, delta_applied, a_x, cfg.plant.vehicle);
      const auto phi = track::preview_external(trk, s, profile, np, dtc);

      auto [delta_ctl, diag] = ctl.step(x, phi);
      (void)diag;
      noise = ar * noise + ar_gain * rng.normal();
      const double u = std::clamp(delta_ctl + noise, -cfg.plant.vehicle.steer_limit,
                                  cfg.plant.vehicle.steer_limit);

      xs.push_back(x.to_vec());
      us.push_back(Vec::Constant(1, u));
      Vec ph(3);
      ph << ps.v_x, 0.5 * trk.kappa_at(s), trk.kappa_rate_at(s) / 6.0;
      phis.push_back(ph);

      a_x = pd.command(ps.v_x, profile.v_at(s), dtc);
      for (int i = 0; i < n_sub; ++i) {
        delta_applied =
            plant::apply_steer_limits(delta_applied, u, dtp, cfg.plant.vehicle);
        ps = plant::step(ps, delta_applied, a_x, dtp, cfg.plant.vehicle);
      }
    }

    // pairs stay inside the episode: T ticks give T-1 usable columns
    const int t_total = static_cast<int>(xs.size());
    if (t_total < 2) continue;
    koopman::Dataset part;
    part.x.resize(kNumStates, t_total - 1);
    part.y.resize(kNumStates, t_total - 1);
    part.u.resize(1, t_total - 1);
    part.d.resize(kNumExternal, t_total - 1);
    for (int i = 0; i + 1 < t_total; ++i) {
      part.x.col(i) = xs[i];
      part.y.col(i) = xs[i + 1];
      part.u.col(i) = us[i];
      part.d.col(i) = phis[i];
    }
    ds.append(part);
  }
  require(ds.size() >= cfg.collect.m_target, ErrorCode::InsufficientData,
          "collect: gathered " + std::to_string(ds.size()) + " of " +
              std::to_string(cfg.collect.m_target) + " samples");
  if (ds.size() > cfg.collect.m_target) ds = ds.slice(0, cfg.collect.m_target);
  return ds;
}

}  // namespace ksmpc::harness
