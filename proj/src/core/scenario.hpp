#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "core/controllers.hpp"
#include "core/plant.hpp"
#include "core/sets.hpp"
#include "core/track.hpp"

namespace ksmpc::harness {

using Json = nlohmann::json;

struct TrackConfig {
  std::vector<track::SegmentSpec> segments;
  track::BuildOptions build;
};

struct LaneConfig {
  double preview_m = 60.0;
  double fit_step = 1.0;
  double capture_range = 5.0;
  double lookahead = 10.0;
  Vec coeff_noise_std;  // 4 entries; zero when absent
};

struct PlantConfig {
  plant::VehicleParams vehicle;
  double dt_plant = 1e-3;
  double dt_control = 1e-2;
  plant::PdGains pd;
};

struct ExcitationConfig {
  double steer_noise_std = deg2rad(0.5);
  double bandwidth_hz = 2.0;
};

struct CollectEpisode {
  TrackConfig track;
  track::SpeedProfile::PlanParams speed;
  double duration_s = 50.0;
  uint64_t seed = 1;
  double e_y0 = 0.0;
  double e_psi0 = 0.0;
};

struct CollectConfig {
  int m_target = 122000;
  ExcitationConfig excitation;
  std::vector<CollectEpisode> episodes;  // defaulted when empty
};

struct DictionaryConfig {
  int n_rbf = 15;
  uint64_t seed = 7;
  double inflation = 1.2;  // of the constraint/envelope box
  double ay_box = 10.0;
  double vy_box = 3.0;
};

struct FitConfig {
  double ridge = -1.0;  // <0: trace-scaled default
  double holdout_fraction = 0.15;
  int rollout_len = 50;
};

enum class SigmaMode { Estimated, Paper };

struct ControllerConfig {
  ctrl::SmpcOptions smpc;
  SigmaMode sigma_mode = SigmaMode::Estimated;
  ctrl::LsmpcOptions lsmpc;
  bool lsmpc_tighten_from_data = true;
};

enum class DisturbanceMode { None, Gaussian, BoundedAdversarial };
enum class PlantKind { Nonlinear, LiftedLinear };
enum class ControllerKind { Ksmpc, Lsmpc, Klq };

const char* controller_name(ControllerKind k);
ControllerKind controller_from_name(const std::string& name);

struct ScenarioConfig {
  TrackConfig track;
  track::SpeedProfile::PlanParams speed;
  double duration_s = 120.0;
  double start_s = 5.0;
  double e_y0 = 0.0, e_psi0 = 0.0;
  DisturbanceMode disturbance = DisturbanceMode::None;
  PlantKind plant_kind = PlantKind::Nonlinear;
  uint64_t seed = 1;
  bool log_timing = true;
};

struct Config {
  PlantConfig plant;
  LaneConfig lane;
  CollectConfig collect;
  DictionaryConfig dictionary;
  FitConfig fit;
  ControllerConfig controller;
  sets::SetsConfig sets;
  ScenarioConfig scenario;

  static Config defaults();
  static Config load(const std::string& path);  // overlays defaults
  static Config from_json(const Json& j);
};

// benchmark circuit: speed-ramp stressor plus a sustained tight corner
TrackConfig benchmark_track();
track::SpeedProfile::PlanParams benchmark_speed();
std::vector<CollectEpisode> default_collect_episodes();

}  // namespace ksmpc::harness
