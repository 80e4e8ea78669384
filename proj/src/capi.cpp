#include "ksmpc/ksmpc.h"

#include <string>

#include "core/pipeline.hpp"

namespace {

thread_local std::string g_last_error;

ksmpc_status to_status(const ksmpc::Error& e) {
  switch (e.code()) {
    case ksmpc::ErrorCode::Config:
    case ksmpc::ErrorCode::EmptySpec:
    case ksmpc::ErrorCode::DimensionMismatch:
      return KSMPC_ERR_CONFIG;
    default:
      return KSMPC_ERR_RUNTIME;
  }
}

template <typename Fn>
ksmpc_status guarded(Fn&& fn) {
  try {
    fn();
    return KSMPC_OK;
  } catch (const ksmpc::Error& e) {
    g_last_error = e.what();
    return to_status(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return KSMPC_ERR_RUNTIME;
  }
}

ksmpc_status require_args(bool ok) {
  if (!ok) g_last_error = "null or invalid argument";
  return ok ? KSMPC_OK : KSMPC_ERR_INVALID_ARG;
}

ksmpc::harness::Config load_config(const char* path) {
  return path && *path ? ksmpc::harness::Config::load(path)
                       : ksmpc::harness::Config::defaults();
}

}  // namespace

struct ksmpc_controller {
  ksmpc::harness::Config cfg;
  ksmpc::harness::Artifacts artifacts;
  ksmpc::harness::ControllerKind kind;
  std::optional<ksmpc::ctrl::KsmpcController> ksmpc;
  std::optional<ksmpc::ctrl::LsmpcController> lsmpc;
  std::optional<ksmpc::ctrl::KlqController> klq;
};

extern "C" {

const char* ksmpc_last_error(void) { return g_last_error.c_str(); }

const char* ksmpc_version(void) { return "ksmpc 1.0"; }

ksmpc_status ksmpc_collect(const char* config_path, const char* out_dataset) {
  if (auto s = require_args(out_dataset)) return s;
  return guarded([&] {
    ksmpc::pipeline::cmd_collect(load_config(config_path), out_dataset);
  });
}

ksmpc_status ksmpc_fit(const char* config_path, const char* dataset_path,
                       const char* out_model) {
  if (auto s = require_args(dataset_path && out_model)) return s;
  return guarded([&] {
    ksmpc::pipeline::cmd_fit(load_config(config_path), dataset_path, out_model);
  });
}

ksmpc_status ksmpc_compute_sets(const char* config_path, const char* model_path,
                                const char* out_sets, const char* projection_csv) {
  if (auto s = require_args(model_path && out_sets)) return s;
  return guarded([&] {
    ksmpc::pipeline::cmd_sets(load_config(config_path), model_path, out_sets,
                              projection_csv ? projection_csv : "");
  });
}

ksmpc_status ksmpc_simulate(const char* config_path, const char* model_path,
                            const char* sets_path, const char* controller,
                            uint64_t seed, int use_seed, const char* out_runlog) {
  if (auto s = require_args(model_path && controller && out_runlog)) return s;
  return guarded([&] {
    std::optional<uint64_t> sd;
    if (use_seed) sd = seed;
    ksmpc::pipeline::cmd_simulate(load_config(config_path), model_path,
                                  sets_path ? sets_path : "", controller,
                                  out_runlog, sd);
  });
}

ksmpc_status ksmpc_compare(const char* config_path, const char* model_path,
                           const char* sets_path, const char* out_dir) {
  if (auto s = require_args(model_path && sets_path && out_dir)) return s;
  return guarded([&] {
    ksmpc::pipeline::cmd_compare(load_config(config_path), model_path, sets_path,
                                 out_dir);
  });
}

ksmpc_status ksmpc_report(const char* config_path, const char* run_dir,
                          const char* out_dir) {
  if (auto s = require_args(run_dir && out_dir)) return s;
  return guarded([&] {
    ksmpc::pipeline::cmd_report(load_config(config_path), run_dir, out_dir);
  });
}

ksmpc_status ksmpc_validate(const char* config_path, const char* model_path,
                            const char* out_json, int trials) {
  if (auto s = require_args(model_path && out_json && trials > 0)) return s;
  return guarded([&] {
    ksmpc::pipeline::cmd_validate(load_config(config_path), model_path, out_json,
                                  trials);
  });
}

ksmpc_status ksmpc_track_csv(const char* config_path, const char* out_csv) {
  if (auto s = require_args(out_csv)) return s;
  return guarded(
      [&] { ksmpc::pipeline::cmd_track_csv(load_config(config_path), out_csv); });
}

ksmpc_status ksmpc_controller_create(const char* config_path,
                                     const char* model_path,
                                     const char* sets_path,
                                     const char* controller,
                                     ksmpc_controller** out) {
  if (auto s = require_args(model_path && controller && out)) return s;
  *out = nullptr;
  return guarded([&] {
    auto c = std::make_unique<ksmpc_controller>();
    c->cfg = load_config(config_path);
    c->kind = ksmpc::harness::controller_from_name(controller);
    const auto mf = ksmpc::io::load_model(model_path);
    std::optional<ksmpc::sets::InvariantSets> s;
    if (sets_path && *sets_path) {
      auto sf = ksmpc::io::load_sets(sets_path);
      ksmpc::require(sf.model_hash == mf.hash, ksmpc::ErrorCode::Config,
                     "sets file was computed for a different model");
      s = std::move(sf.sets);
    }
    c->artifacts = ksmpc::pipeline::build_artifacts(c->cfg, mf, std::move(s));
    using Kind = ksmpc::harness::ControllerKind;
    switch (c->kind) {
      case Kind::Ksmpc: {
        ksmpc::require(c->artifacts.invariant_sets.has_value(),
                       ksmpc::ErrorCode::MissingSets, "ksmpc needs a sets file");
        c->ksmpc.emplace(c->artifacts.model, c->artifacts.riccati,
                         c->cfg.controller.smpc, c->artifacts.sigma_w_used,
                         c->artifacts.invariant_sets->first_step_constraint());
        break;
      }
      case Kind::Lsmpc: {
        auto opt = c->cfg.controller.lsmpc;
        opt.l_dist = c->cfg.lane.lookahead;
        opt.dt = c->cfg.plant.dt_control;
        if (c->cfg.controller.lsmpc_tighten_from_data)
          opt.sigma_diag4 = c->artifacts.linear_residuals.variance4;
        c->lsmpc.emplace(c->cfg.plant.vehicle, opt);
        break;
      }
      case Kind::Klq:
        c->klq.emplace(c->artifacts.model, c->artifacts.riccati,
                       c->cfg.controller.smpc.u_bound);
        break;
    }
    *out = c.release();
  });
}

void ksmpc_controller_free(ksmpc_controller* c) { delete c; }

ksmpc_status ksmpc_controller_reset(ksmpc_controller* c) {
  if (auto s = require_args(c)) return s;
  if (c->ksmpc) c->ksmpc->reset();
  if (c->lsmpc) c->lsmpc->reset();
  return KSMPC_OK;
}

int ksmpc_controller_horizon(const ksmpc_controller* c) {
  return c ? c->cfg.controller.smpc.horizon : 0;
}

ksmpc_status ksmpc_controller_step(ksmpc_controller* c, const double x[7],
                                   const double* phi, size_t phi_len,
                                   ksmpc_step_info* info) {
  if (auto s = require_args(c && x && info)) return s;
  const int np = c->cfg.controller.smpc.horizon;
  const bool needs_phi = c->kind != ksmpc::harness::ControllerKind::Klq;
  if (needs_phi &&
      (phi == nullptr || phi_len != static_cast<size_t>(3 * np))) {
    g_last_error = "phi must hold 3*horizon entries";
    return KSMPC_ERR_INVALID_ARG;
  }
  return guarded([&] {
    ksmpc::plant::VehicleState xs;
    ksmpc::Vec xv(7);
    for (int i = 0; i < 7; ++i) xv[i] = x[i];
    xs = ksmpc::plant::VehicleState::from_vec(xv);
    std::vector<ksmpc::track::ExternalSignal> preview;
    if (needs_phi)
      for (int i = 0; i < np; ++i)
        preview.push_back({phi[3 * i], phi[3 * i + 1], phi[3 * i + 2]});
    *info = ksmpc_step_info{};
    using Kind = ksmpc::harness::ControllerKind;
    if (c->kind == Kind::Klq) {
      info->delta = c->klq->step(xs);
      info->feasible = 1;
    } else if (c->kind == Kind::Lsmpc) {
      auto [d, diag] = c->lsmpc->step(xs, preview);
      info->delta = d;
      info->feasible = diag.feasible;
      info->fallback = diag.fallback;
      info->v0 = diag.v0;
      info->sigma_lo = diag.sigma_lo;
      info->sigma_hi = diag.sigma_hi;
      info->iterations = diag.iterations;
      info->solve_time_ms = diag.solve_time_ms;
    } else {
      auto [d, diag] = c->ksmpc->step(xs, preview);
      info->delta = d;
      info->feasible = diag.feasible;
      info->fallback = diag.fallback;
      info->v0 = diag.v0;
      info->sigma_lo = diag.sigma_lo;
      info->sigma_hi = diag.sigma_hi;
      info->iterations = diag.iterations;
      info->solve_time_ms = diag.solve_time_ms;
    }
  });
}

}  // extern "C"
