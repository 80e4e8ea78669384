#include "core/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <functional>

#include "core/svg.hpp"

namespace ksmpc::pipeline {

namespace fs = std::filesystem;

void save_dataset(const std::string& path, const koopman::Dataset& ds, double dt) {
  ds.check();
  csv::Table t;
  t.metadata.emplace_back("format", "ksmpc-dataset");
  t.metadata.emplace_back("m", std::to_string(ds.size()));
  t.metadata.emplace_back("dt", csv::format_double(dt));
  t.columns = {"x0", "x1", "x2", "x3", "x4", "x5", "x6", "u", "vx", "c2", "c3",
               "y0", "y1", "y2", "y3", "y4", "y5", "y6"};
  for (int i = 0; i < ds.size(); ++i) {
    std::vector<double> row;
    row.reserve(18);
    for (int k = 0; k < kNumStates; ++k) row.push_back(ds.x(k, i));
    row.push_back(ds.u(0, i));
    for (int k = 0; k < kNumExternal; ++k) row.push_back(ds.d(k, i));
    for (int k = 0; k < kNumStates; ++k) row.push_back(ds.y(k, i));
    t.rows.push_back(std::move(row));
  }
  csv::write(path, t);
}

koopman::Dataset load_dataset(const std::string& path) {
  const csv::Table t = csv::read(path);
  require(t.columns.size() == 18, ErrorCode::Config,
          "dataset: expected 18 columns in " + path);
  const int m = static_cast<int>(t.rows.size());
  require(m > 0, ErrorCode::InsufficientData, "dataset: empty file " + path);
  koopman::Dataset ds;
  ds.x.resize(kNumStates, m);
  ds.u.resize(1, m);
  ds.d.resize(kNumExternal, m);
  ds.y.resize(kNumStates, m);
  for (int i = 0; i < m; ++i) {
    const auto& row = t.rows[i];
    for (int k = 0; k < kNumStates; ++k) ds.x(k, i) = row[k];
    ds.u(0, i) = row[7];
    for (int k = 0; k < kNumExternal; ++k) ds.d(k, i) = row[8 + k];
    for (int k = 0; k < kNumStates; ++k) ds.y(k, i) = row[11 + k];
  }
  return ds;
}

void cmd_collect(const Config& cfg, const std::string& out_path) {
  const koopman::Dataset ds = harness::collect_dataset(cfg);
  save_dataset(out_path, ds, cfg.plant.dt_control);
}

io::ModelFile fit_model(const Config& cfg, const koopman::Dataset& ds) {
  // center box: constraint set inflated, plus the a_y / v_y envelope
  const auto spec = [&] {
    auto opt = cfg.controller.smpc;
    opt.apply_defaults();
    return opt.constraints;
  }();
  Vec lower(kNumStates), upper(kNumStates);
  for (int i = 0; i < 5; ++i) {
    upper[i] = spec.bounds[i] * cfg.dictionary.inflation;
    lower[i] = -upper[i];
  }
  upper[5] = cfg.dictionary.ay_box * cfg.dictionary.inflation;
  lower[5] = -upper[5];
  upper[6] = cfg.dictionary.vy_box * cfg.dictionary.inflation;
  lower[6] = -upper[6];
  const auto dict = koopman::Dictionary::sample(cfg.dictionary.n_rbf, lower, upper,
                                                cfg.dictionary.seed);

  const auto [train, holdout] = ds.split(1.0 - cfg.fit.holdout_fraction);
  io::ModelFile mf;
  mf.dt = cfg.plant.dt_control;
  mf.model = koopman::fit(train, dict, cfg.fit.ridge);
  mf.report = koopman::validate(mf.model, holdout, cfg.fit.rollout_len);
  mf.linear_residuals = ctrl::linear_model_residuals(
      train, cfg.plant.vehicle, cfg.lane.lookahead, cfg.plant.dt_control);
  return mf;
}

void cmd_fit(const Config& cfg, const std::string& dataset_path,
             const std::string& out_model) {
  const koopman::Dataset ds = load_dataset(dataset_path);
  io::ModelFile mf = fit_model(cfg, ds);
  io::save_model(out_model, mf);
}

sets::InvariantSets build_sets(const Config& cfg, const io::ModelFile& mf) {
  auto opt = cfg.controller.smpc;
  opt.apply_defaults();
  const Mat q = mf.model.c.transpose() * opt.q_diag.asDiagonal() * mf.model.c;
  const Mat r = Mat::Constant(1, 1, opt.q_vv);
  const auto ric = ctrl::solve_dare(mf.model.a, mf.model.b, q, r);
  const Mat sigma_w = (cfg.controller.sigma_mode == harness::SigmaMode::Paper)
                          ? ctrl::paper_sigma_w(mf.model.n_lift())
                          : mf.model.sigma_w;
  return sets::compute_sets(mf.model, ric, opt, sigma_w, cfg.sets);
}

harness::Artifacts build_artifacts(const Config& cfg, const io::ModelFile& mf,
                                   std::optional<sets::InvariantSets> s) {
  return harness::make_artifacts(cfg, mf.model, mf.linear_residuals, std::move(s));
}

void cmd_sets(const Config& cfg, const std::string& model_path,
              const std::string& out_path, const std::string& projection_csv) {
  const io::ModelFile mf = io::load_model(model_path);
  const sets::InvariantSets s = build_sets(cfg, mf);
  io::save_sets(out_path, s, mf.hash);
  if (!projection_csv.empty() && cfg.sets.reduced_dim >= 3) {
    const auto verts = poly::project_2d(s.c_inf, 0, 2);
    csv::Table t;
    t.metadata.emplace_back("format", "ksmpc-set-projection");
    t.metadata.emplace_back("coords", "xi0,xi2");
    t.columns = {"x", "y"};
    for (const auto& v : verts) t.rows.push_back({v.x(), v.y()});
    csv::write(projection_csv, t);
  }
}

namespace {

harness::Artifacts load_artifacts(const Config& cfg, const std::string& model_path,
                                  const std::string& sets_path,
                                  harness::ControllerKind kind) {
  const io::ModelFile mf = io::load_model(model_path);
  std::optional<sets::InvariantSets> s;
  if (!sets_path.empty()) {
    io::SetsFile sf = io::load_sets(sets_path);
    require(sf.model_hash == mf.hash, ErrorCode::Config,
            "sets file was computed for a different model");
    s = std::move(sf.sets);
  } else {
    require(kind != harness::ControllerKind::Ksmpc, ErrorCode::MissingSets,
            "ksmpc needs --sets");
  }
  return build_artifacts(cfg, mf, std::move(s));
}

void write_runlog(const std::string& path, const harness::RunLog& log,
                  const Config& cfg, const std::string& model_hash) {
  harness::RunLog out = log;
  out.metadata.emplace_back("model_hash", model_hash);
  csv::write(path, out.to_table(cfg.scenario.log_timing));
}

}  // namespace

void cmd_simulate(const Config& cfg, const std::string& model_path,
                  const std::string& sets_path, const std::string& controller,
                  const std::string& out_csv, std::optional<uint64_t> seed) {
  const auto kind = harness::controller_from_name(controller);
  harness::Artifacts art = load_artifacts(cfg, model_path, sets_path, kind);
  harness::ScenarioConfig sc = cfg.scenario;
  if (seed) sc.seed = *seed;
  const harness::RunLog log = harness::run_episode(cfg, sc, kind, art);
  const io::ModelFile mf = io::load_model(model_path);
  write_runlog(out_csv, log, cfg, mf.hash);
}

void cmd_compare(const Config& cfg, const std::string& model_path,
                 const std::string& sets_path, const std::string& out_dir) {
  fs::create_directories(out_dir);
  harness::Artifacts art =
      load_artifacts(cfg, model_path, sets_path, harness::ControllerKind::Ksmpc);
  const io::ModelFile mf = io::load_model(model_path);
  std::vector<std::pair<std::string, harness::RunLog>> logs;
  for (auto kind : {harness::ControllerKind::Klq, harness::ControllerKind::Lsmpc,
                    harness::ControllerKind::Ksmpc}) {
    harness::RunLog log = harness::run_episode(cfg, cfg.scenario, kind, art);
    write_runlog(out_dir + "/runlog_" + harness::controller_name(kind) + ".csv",
                 log, cfg, mf.hash);
    logs.emplace_back(harness::controller_name(kind), std::move(log));
  }
  const auto rep = harness::metrics(logs);
  harness::save_metrics_json(out_dir + "/metrics.json", rep,
                             {{"model_hash", mf.hash}});
  std::ofstream md(out_dir + "/metrics.md");
  md << harness::metrics_markdown(rep);
}

void cmd_report(const Config& cfg, const std::string& run_dir,
                const std::string& out_dir) {
  (void)cfg;
  fs::create_directories(out_dir);
  std::vector<std::pair<std::string, harness::RunLog>> logs;
  for (const char* name : {"klq", "lsmpc", "ksmpc"}) {
    const std::string path = run_dir + "/runlog_" + name + ".csv";
    if (fs::exists(path))
      logs.emplace_back(name, harness::RunLog::from_table(csv::read(path)));
  }
  require(!logs.empty(), ErrorCode::Io, "report: no runlog_*.csv in " + run_dir);

  const auto rep = harness::metrics(logs);
  harness::save_metrics_json(out_dir + "/metrics.json", rep, {});
  std::ofstream md(out_dir + "/metrics.md");
  md << harness::metrics_markdown(rep);

  // per-state traces with constraint guides
  struct StateCol {
    const char* name;
    double bound;
    std::function<double(const harness::TickRow&)> get;
  };
  const std::vector<StateCol> cols = {
      {"e_y", 1.0, [](const harness::TickRow& r) { return r.x.e_y; }},
      {"e_yL", 1.0, [](const harness::TickRow& r) { return r.x.e_yl; }},
      {"ey_dot", 0.95, [](const harness::TickRow& r) { return r.x.e_y_dot; }},
      {"e_psi", deg2rad(10), [](const harness::TickRow& r) { return r.x.e_psi; }},
      {"psi_dot", deg2rad(30), [](const harness::TickRow& r) { return r.x.psi_dot; }},
  };
  for (const auto& c : cols) {
    std::vector<svg::Series> series;
    for (const auto& [name, log] : logs) {
      svg::Series s;
      s.label = name;
      for (const auto& r : log.ticks) {
        s.x.push_back(r.t);
        s.y.push_back(c.get(r));
      }
      series.push_back(std::move(s));
    }
    svg::ChartOptions opt;
    opt.title = std::string("state trace: ") + c.name;
    opt.x_label = "t [s]";
    opt.y_label = c.name;
    opt.h_lines = {c.bound, -c.bound};
    svg::line_chart(out_dir + "/trace_" + c.name + ".svg", series, opt);
  }
  // e_y histogram per controller
  for (const auto& m : rep.rows) {
    svg::ChartOptions opt;
    opt.title = "e_y histogram: " + m.name;
    opt.x_label = "e_y [m]";
    opt.y_label = "mass";
    svg::histogram(out_dir + "/hist_ey_" + m.name + ".svg", m.ey_hist,
                   -rep.params.ey_hist_half_range, rep.params.ey_hist_half_range,
                   opt);
  }
  // feasibility trace and slip scatter
  {
    std::vector<svg::Series> feas;
    for (const auto& [name, log] : logs) {
      svg::Series s;
      s.label = name;
      for (const auto& r : log.ticks) {
        s.x.push_back(r.t);
        s.y.push_back(r.feasible ? 0.0 : 1.0);
      }
      feas.push_back(std::move(s));
    }
    svg::ChartOptions opt;
    opt.title = "infeasibility trace (0 feasible, 1 infeasible)";
    opt.x_label = "t [s]";
    opt.y_label = "flag";
    svg::line_chart(out_dir + "/infeasibility.svg", feas, opt);
  }
  for (const auto& [name, log] : logs) {
    std::vector<svg::Series> slips(2);
    slips[0].label = "alpha_f";
    slips[1].label = "alpha_r";
    for (const auto& r : log.ticks) {
      slips[0].x.push_back(r.t);
      slips[0].y.push_back(rad2deg(r.alpha_f));
      slips[1].x.push_back(r.t);
      slips[1].y.push_back(rad2deg(r.alpha_r));
    }
    svg::ChartOptions opt;
    opt.title = "tire slip angles: " + name;
    opt.x_label = "t [s]";
    opt.y_label = "slip [deg]";
    svg::scatter_band(out_dir + "/slip_" + name + ".svg", slips, 3.0, opt);
  }
}

void cmd_validate(const Config& cfg, const std::string& model_path,
                  const std::string& out_json, int trials) {
  const io::ModelFile mf = io::load_model(model_path);
  const auto art = build_artifacts(cfg, mf, std::nullopt);
  auto opt = cfg.controller.smpc;
  opt.apply_defaults();
  Mat rows;
  Vec bounds;
  opt.constraints.expand(mf.model.c, &rows, &bounds);
  const Vec w_std = art.sigma_w_used.diagonal().cwiseMax(0.0).cwiseSqrt();
  const auto table = harness::validate_chance(art.riccati.a_cl, mf.model.g, w_std,
                                              rows, opt.epsilon, opt.horizon,
                                              trials, cfg.scenario.seed);
  io::Json j;
  j["format"] = "ksmpc-chance-validation";
  j["trials"] = trials;
  j["epsilon"] = opt.epsilon;
  double worst = 0.0;
  for (const auto& r : table) {
    j["rows"].push_back({{"step", r.step},
                         {"row", r.row},
                         {"margin", r.margin},
                         {"empirical", r.empirical}});
    worst = std::max(worst, r.empirical);
  }
  j["worst_empirical"] = worst;
  j["pass"] = worst <= opt.epsilon;
  io::save_json(out_json, j);
}

void cmd_track_csv(const Config& cfg, const std::string& out_csv) {
  const auto trk =
      track::build_track(cfg.scenario.track.segments, cfg.scenario.track.build);
  csv::Table t;
  t.metadata.emplace_back("format", "ksmpc-centerline");
  t.columns = {"s", "X", "Y", "psi", "kappa"};
  for (const auto& c : trk.centerline)
    t.rows.push_back({c.s, c.x, c.y, c.psi, c.kappa});
  csv::write(out_csv, t);
}

}  // namespace ksmpc::pipeline
