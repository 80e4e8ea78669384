#pragma once

#include <optional>

#include "core/csv.hpp"
#include "core/scenario.hpp"

namespace ksmpc::harness {

struct TickRow {
  double t = 0;
  double x_pos = 0, y_pos = 0, psi = 0, v_x = 0;
  plant::VehicleState x;
  double delta = 0, v0 = 0, sigma_lo = 0, sigma_hi = 0;
  double alpha_f = 0, alpha_r = 0;
  int feasible = 1, fallback = 0, iterations = 0;
  double solve_time_ms = 0;
  double z_norm = 0;
};

struct RunLog {
  std::vector<TickRow> ticks;
  std::vector<std::pair<std::string, std::string>> metadata;

  csv::Table to_table(bool with_timing) const;
  static RunLog from_table(const csv::Table& t);
  int infeasible_count() const;
};

// immutable artifacts shared by episode runs
struct Artifacts {
  koopman::KoopmanModel model;
  ctrl::RiccatiResult riccati;
  Mat sigma_w_used;  // after sigma_mode selection
  std::optional<sets::InvariantSets> invariant_sets;
  ctrl::LinearResidualStats linear_residuals;
};

Artifacts make_artifacts(const Config& cfg, const koopman::KoopmanModel& model,
                         const ctrl::LinearResidualStats& lin,
                         std::optional<sets::InvariantSets> sets_opt);

RunLog run_episode(const Config& cfg, const ScenarioConfig& sc,
                   ControllerKind kind, const Artifacts& art);

koopman::Dataset collect_dataset(const Config& cfg);

}  // namespace ksmpc::harness
