#include "core/scenario.hpp"

#include <fstream>

namespace ksmpc::harness {

namespace {

double get_or(const Json& j, const char* key, double dflt) {
  return j.contains(key) ? j.at(key).get<double>() : dflt;
}

track::SegmentSpec segment_from_json(const Json& j) {
  track::SegmentSpec s;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "straight") s.kind = track::SegmentSpec::Kind::Straight;
  else if (kind == "arc") s.kind = track::SegmentSpec::Kind::Arc;
  else if (kind == "clothoid") s.kind = track::SegmentSpec::Kind::Clothoid;
  else fail(ErrorCode::Config, "track: unknown segment kind '" + kind + "'");
  s.length = j.at("length").get<double>();
  s.radius = get_or(j, "radius", 0.0);
  s.kappa_end = get_or(j, "kappa_end", 0.0);
  return s;
}

TrackConfig track_from_json(const Json& j) {
  if (j.contains("name")) {
    const std::string name = j.at("name").get<std::string>();
    if (name == "benchmark") return benchmark_track();
    fail(ErrorCode::Config, "track: unknown named track '" + name + "'");
  }
  TrackConfig t;
  for (const auto& seg : j.at("segments")) t.segments.push_back(segment_from_json(seg));
  t.build.sample_step = get_or(j, "sample_step", 0.5);
  t.build.kappa_max = get_or(j, "kappa_max", 0.05);
  t.build.auto_transition_length = get_or(j, "auto_transition_length", 25.0);
  return t;
}

track::SpeedProfile::PlanParams speed_from_json(const Json& j) {
  track::SpeedProfile::PlanParams p;
  p.v_max = get_or(j, "v_max", 20.0);
  p.v_min = get_or(j, "v_min", 3.0);
  p.ay_max = get_or(j, "ay_max", 5.0);
  p.accel_limit = get_or(j, "accel_limit", 2.5);
  p.decel_limit = get_or(j, "decel_limit", 3.5);
  if (j.contains("overrides"))
    for (const auto& o : j.at("overrides"))
      p.overrides.push_back({o.at("s_begin").get<double>(),
                             o.at("s_end").get<double>(), o.at("v").get<double>()});
  return p;
}

void vehicle_from_json(const Json& j, plant::VehicleParams* v) {
  v->m = get_or(j, "m", v->m);
  v->iz = get_or(j, "iz", v->iz);
  v->lf = get_or(j, "lf", v->lf);
  v->lr = get_or(j, "lr", v->lr);
  v->steer_limit = deg2rad(get_or(j, "steer_limit_deg", rad2deg(v->steer_limit)));
  v->steer_rate_limit =
      deg2rad(get_or(j, "steer_rate_limit_dps", rad2deg(v->steer_rate_limit)));
  v->v_x_min = get_or(j, "vx_min", v->v_x_min);
  if (j.contains("tire")) {
    const Json& t = j.at("tire");
    v->tire.c_alpha_front_nominal = get_or(t, "c_alpha_front", v->tire.c_alpha_front_nominal);
    v->tire.c_alpha_rear_nominal = get_or(t, "c_alpha_rear", v->tire.c_alpha_rear_nominal);
    v->tire.mu = get_or(t, "mu", v->tire.mu);
    v->tire.shape = get_or(t, "shape", v->tire.shape);
    v->tire.saturation_angle =
        deg2rad(get_or(t, "saturation_angle_deg", rad2deg(v->tire.saturation_angle)));
  }
  v->finalize();
}

qp::Settings qp_from_json(const Json& j, qp::Settings base) {
  base.eps_abs = get_or(j, "eps_abs", base.eps_abs);
  base.eps_rel = get_or(j, "eps_rel", base.eps_rel);
  base.max_iter = static_cast<int>(get_or(j, "max_iter", base.max_iter));
  base.rho = get_or(j, "rho", base.rho);
  return base;
}

}  // namespace

const char* controller_name(ControllerKind k) {
  switch (k) {
    case ControllerKind::Ksmpc: return "ksmpc";
    case ControllerKind::Lsmpc: return "lsmpc";
    case ControllerKind::Klq: return "klq";
  }
  return "?";
}

ControllerKind controller_from_name(const std::string& name) {
  if (name == "ksmpc") return ControllerKind::Ksmpc;
  if (name == "lsmpc") return ControllerKind::Lsmpc;
  if (name == "klq") return ControllerKind::Klq;
  fail(ErrorCode::Config, "unknown controller '" + name + "'");
}

TrackConfig benchmark_track() {
  using K = track::SegmentSpec::Kind;
  TrackConfig t;
  auto straight = [](double len) { return track::SegmentSpec{K::Straight, len, 0, 0}; };
  auto arc = [](double r, double len) { return track::SegmentSpec{K::Arc, len, r, 0}; };
  t.segments = {
      straight(200),
      arc(110, 150),   // moderate corner
      straight(80),
      arc(60, 180),    // sustained tight corner (preview matters here)
      straight(60),
      arc(-75, 100),   // S-section with the speed-ramp overrides
      arc(85, 90),
      straight(150),
  };
  t.build.auto_transition_length = 25.0;
  return t;
}

track::SpeedProfile::PlanParams benchmark_speed() {
  track::SpeedProfile::PlanParams p;
  p.v_max = 20.0;
  p.ay_max = 5.0;
  p.accel_limit = 2.5;
  p.decel_limit = 3.5;
  // rapid slow-down/speed-up inside the S-section
  p.overrides.push_back({805.0, 845.0, 11.0});
  p.overrides.push_back({935.0, 965.0, 12.0});
  return p;
}

std::vector<CollectEpisode> default_collect_episodes() {
  using K = track::SegmentSpec::Kind;
  auto straight = [](double len) { return track::SegmentSpec{K::Straight, len, 0, 0}; };
  auto arc = [](double r, double len) { return track::SegmentSpec{K::Arc, len, r, 0}; };
  auto clothoid = [](double len, double k_end) {
    return track::SegmentSpec{K::Clothoid, len, 0, k_end};
  };

  std::vector<TrackConfig> tracks;
  tracks.push_back({{straight(1100)}, {}});
  tracks.push_back({{straight(120), arc(60, 600), straight(120)}, {}});
  tracks.push_back({{straight(120), arc(-100, 700), straight(120)}, {}});
  tracks.push_back({{straight(120), arc(150, 800), straight(120)}, {}});
  tracks.push_back({{straight(80), arc(70, 130), arc(-70, 130), arc(70, 130),
                     arc(-70, 130), straight(80)},
                    {}});
  tracks.push_back({{straight(100), clothoid(140, 0.012), clothoid(280, -0.012),
                     clothoid(140, 0.0), straight(100)},
                    {}});
  tracks.push_back({{straight(100), arc(90, 250), straight(100), arc(-120, 250),
                     straight(100)},
                    {}});

  struct Combo {
    double v_max, e_y0, e_psi0;
  };
  const std::vector<Combo> combos = {{12, 0.0, 0.0},
                                     {16, 0.4, 0.0},
                                     {20, -0.4, deg2rad(2.0)},
                                     {18, 0.2, deg2rad(-2.0)}};
  std::vector<CollectEpisode> eps;
  uint64_t seed = 101;
  for (const auto& tc : tracks)
    for (const auto& c : combos) {
      CollectEpisode e;
      e.track = tc;
      e.speed.v_max = c.v_max;
      e.speed.ay_max = 5.0;
      e.duration_s = 48.0;
      e.seed = seed++;
      e.e_y0 = c.e_y0;
      e.e_psi0 = c.e_psi0;
      eps.push_back(std::move(e));
    }
  return eps;
}

Config Config::defaults() {
  Config c;
  c.plant.vehicle.finalize();
  c.collect.episodes = default_collect_episodes();
  c.controller.smpc.apply_defaults();
  c.controller.lsmpc.apply_defaults();
  c.scenario.track = benchmark_track();
  c.scenario.speed = benchmark_speed();
  return c;
}

Config Config::from_json(const Json& j) {
  Config c = defaults();
  if (j.contains("plant")) {
    const Json& p = j.at("plant");
    if (p.contains("vehicle")) vehicle_from_json(p.at("vehicle"), &c.plant.vehicle);
    c.plant.dt_plant = get_or(p, "dt_plant", c.plant.dt_plant);
    c.plant.dt_control = get_or(p, "dt_control", c.plant.dt_control);
    if (p.contains("pd")) {
      c.plant.pd.kp = get_or(p.at("pd"), "kp", c.plant.pd.kp);
      c.plant.pd.kd = get_or(p.at("pd"), "kd", c.plant.pd.kd);
      c.plant.pd.accel_limit = get_or(p.at("pd"), "accel_limit", c.plant.pd.accel_limit);
    }
  }
  if (j.contains("lane")) {
    const Json& l = j.at("lane");
    c.lane.preview_m = get_or(l, "preview_m", c.lane.preview_m);
    c.lane.fit_step = get_or(l, "fit_step", c.lane.fit_step);
    c.lane.capture_range = get_or(l, "capture_range", c.lane.capture_range);
    c.lane.lookahead = get_or(l, "lookahead", c.lane.lookahead);
    if (l.contains("coeff_noise_std")) {
      c.lane.coeff_noise_std.resize(4);
      for (int i = 0; i < 4; ++i)
        c.lane.coeff_noise_std[i] = l.at("coeff_noise_std")[i].get<double>();
    }
  }
  if (j.contains("collect")) {
    const Json& col = j.at("collect");
    c.collect.m_target = static_cast<int>(get_or(col, "m_target", c.collect.m_target));
    if (col.contains("excitation")) {
      const Json& e = col.at("excitation");
      c.collect.excitation.steer_noise_std =
          deg2rad(get_or(e, "steer_noise_std_deg",
                         rad2deg(c.collect.excitation.steer_noise_std)));
      c.collect.excitation.bandwidth_hz =
          get_or(e, "bandwidth_hz", c.collect.excitation.bandwidth_hz);
    }
    if (col.contains("episodes")) {
      c.collect.episodes.clear();
      for (const auto& ej : col.at("episodes")) {
        CollectEpisode e;
        e.track = track_from_json(ej.at("track"));
        if (ej.contains("speed")) e.speed = speed_from_json(ej.at("speed"));
        e.duration_s = get_or(ej, "duration_s", e.duration_s);
        e.seed = static_cast<uint64_t>(get_or(ej, "seed", 1));
        e.e_y0 = get_or(ej, "e_y0", 0.0);
        e.e_psi0 = get_or(ej, "e_psi0", 0.0);
        c.collect.episodes.push_back(std::move(e));
      }
    }
  }
  if (j.contains("dictionary")) {
    const Json& d = j.at("dictionary");
    c.dictionary.n_rbf = static_cast<int>(get_or(d, "n_rbf", c.dictionary.n_rbf));
    c.dictionary.seed = static_cast<uint64_t>(get_or(d, "seed", c.dictionary.seed));
    c.dictionary.inflation = get_or(d, "inflation", c.dictionary.inflation);
    c.dictionary.ay_box = get_or(d, "ay_box", c.dictionary.ay_box);
    c.dictionary.vy_box = get_or(d, "vy_box", c.dictionary.vy_box);
  }
  if (j.contains("fit")) {
    const Json& f = j.at("fit");
    c.fit.ridge = get_or(f, "ridge", c.fit.ridge);
    c.fit.holdout_fraction = get_or(f, "holdout_fraction", c.fit.holdout_fraction);
    c.fit.rollout_len = static_cast<int>(get_or(f, "rollout_len", c.fit.rollout_len));
  }
  if (j.contains("controller")) {
    const Json& k = j.at("controller");
    auto& s = c.controller.smpc;
    s.horizon = static_cast<int>(get_or(k, "horizon", s.horizon));
    if (k.contains("q_diag")) {
      s.q_diag.resize(kNumStates);
      for (int i = 0; i < kNumStates; ++i) s.q_diag[i] = k.at("q_diag")[i].get<double>();
    }
    s.q_vv = get_or(k, "q_vv", s.q_vv);
    s.slack_weight = get_or(k, "slack_weight", s.slack_weight);
    s.epsilon = get_or(k, "epsilon", s.epsilon);
    s.terminal_epsilon = get_or(k, "terminal_epsilon", s.terminal_epsilon);
    s.u_bound = deg2rad(get_or(k, "u_bound_deg", rad2deg(s.u_bound)));
    s.u_soft = deg2rad(get_or(k, "u_soft_deg", rad2deg(s.u_soft)));
    if (k.contains("constraints")) {
      const Json& b = k.at("constraints");
      auto spec = ctrl::ConstraintSpec::lane_keeping_defaults();
      spec.bounds[0] = get_or(b, "e_y", spec.bounds[0]);
      spec.bounds[1] = get_or(b, "e_yl", spec.bounds[1]);
      spec.bounds[2] = get_or(b, "ey_dot", spec.bounds[2]);
      spec.bounds[3] = deg2rad(get_or(b, "e_psi_deg", rad2deg(spec.bounds[3])));
      spec.bounds[4] = deg2rad(get_or(b, "psi_dot_dps", rad2deg(spec.bounds[4])));
      s.constraints = spec;
    }
    s.sigma_diag_projection = k.value("sigma_diag_projection", s.sigma_diag_projection);
    s.cov_transposed_compat = k.value("cov_transposed_compat", s.cov_transposed_compat);
    s.sigma0_is_sigma_w = k.value("sigma0_is_sigma_w", s.sigma0_is_sigma_w);
    const std::string mode = k.value("sigma_mode", "estimated");
    if (mode == "estimated") c.controller.sigma_mode = SigmaMode::Estimated;
    else if (mode == "paper") c.controller.sigma_mode = SigmaMode::Paper;
    else fail(ErrorCode::Config, "controller: unknown sigma_mode '" + mode + "'");
    c.controller.lsmpc_tighten_from_data =
        k.value("lsmpc_tighten_from_data", c.controller.lsmpc_tighten_from_data);
    // shared fields mirrored onto the baseline
    auto& l = c.controller.lsmpc;
    l.horizon = s.horizon;
    l.q_vv = s.q_vv;
    l.slack_weight = s.slack_weight;
    l.epsilon = s.epsilon;
    l.terminal_epsilon = s.terminal_epsilon;
    l.u_bound = s.u_bound;
    l.u_soft = s.u_soft;
  }
  if (j.contains("qp")) {
    c.controller.smpc.qp = qp_from_json(j.at("qp"), c.controller.smpc.qp);
    c.controller.lsmpc.qp = qp_from_json(j.at("qp"), c.controller.lsmpc.qp);
  }
  if (j.contains("sets")) {
    const Json& s = j.at("sets");
    c.sets.reduced_dim = static_cast<int>(get_or(s, "reduced_dim", c.sets.reduced_dim));
    c.sets.wbar_safety = get_or(s, "wbar_safety", c.sets.wbar_safety);
    c.sets.ay_envelope = get_or(s, "ay_envelope", c.sets.ay_envelope);
    c.sets.vy_envelope = get_or(s, "vy_envelope", c.sets.vy_envelope);
    c.sets.max_iter = static_cast<int>(get_or(s, "max_iter", c.sets.max_iter));
    c.sets.tol = get_or(s, "tol", c.sets.tol);
    c.sets.phi_erosion = s.value("phi_erosion", c.sets.phi_erosion);
    c.sets.vx_abs_max = get_or(s, "vx_abs_max", c.sets.vx_abs_max);
    c.sets.c2_abs_max = get_or(s, "c2_abs_max", c.sets.c2_abs_max);
    c.sets.c3_abs_max = get_or(s, "c3_abs_max", c.sets.c3_abs_max);
    c.sets.mismatch_margin = get_or(s, "mismatch_margin", c.sets.mismatch_margin);
  }
  if (j.contains("scenario")) {
    const Json& sc = j.at("scenario");
    if (sc.contains("track")) c.scenario.track = track_from_json(sc.at("track"));
    if (sc.contains("speed")) c.scenario.speed = speed_from_json(sc.at("speed"));
    c.scenario.duration_s = get_or(sc, "duration_s", c.scenario.duration_s);
    c.scenario.start_s = get_or(sc, "start_s", c.scenario.start_s);
    c.scenario.e_y0 = get_or(sc, "e_y0", c.scenario.e_y0);
    c.scenario.e_psi0 = get_or(sc, "e_psi0", c.scenario.e_psi0);
    const std::string dist = sc.value("disturbance", "none");
    if (dist == "none") c.scenario.disturbance = DisturbanceMode::None;
    else if (dist == "gaussian") c.scenario.disturbance = DisturbanceMode::Gaussian;
    else if (dist == "bounded-adversarial")
      c.scenario.disturbance = DisturbanceMode::BoundedAdversarial;
    else fail(ErrorCode::Config, "scenario: unknown disturbance '" + dist + "'");
    const std::string pk = sc.value("plant", "nonlinear");
    if (pk == "nonlinear") c.scenario.plant_kind = PlantKind::Nonlinear;
    else if (pk == "lifted-linear") c.scenario.plant_kind = PlantKind::LiftedLinear;
    else fail(ErrorCode::Config, "scenario: unknown plant '" + pk + "'");
    c.scenario.seed = static_cast<uint64_t>(get_or(sc, "seed", c.scenario.seed));
    c.scenario.log_timing = sc.value("log_timing", c.scenario.log_timing);
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream probe(path);
  require(probe.good(), ErrorCode::Config, "config: cannot open " + path);
  Json j;
  try {
    probe >> j;
  } catch (const std::exception& e) {
    fail(ErrorCode::Config, std::string("config: bad json: ") + e.what());
  }
  return from_json(j);
}

}  // namespace ksmpc::harness
