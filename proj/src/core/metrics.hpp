#pragma once

#include <string>

#include "core/episode.hpp"

namespace ksmpc::harness {

struct MetricsParams {
  int ey_hist_bins = 41;
  double ey_hist_half_range = 1.0;
  double slip_band = deg2rad(3.0);
  ctrl::ConstraintSpec constraints;  // defaulted when empty
  Vec q_diag7;                       // for the mean-square cost trace
  double q_vv = 50.0;
};

struct ControllerMetrics {
  std::string name;
  Vec rmse;      // 7 states
  Vec max_err;   // 7 states
  int infeasible_count = 0;
  int ticks = 0;
  double slip_linear_fraction = 1.0;
  std::vector<double> ey_hist;  // normalized mass
  int constraint_violation_ticks = 0;
  double max_constraint_ratio = 0.0;  // max over ticks of |row x| / bound
  double mean_sq_cost = 0.0;          // average of ||x||_q^2 + r u^2
};

struct MetricsReport {
  std::vector<ControllerMetrics> rows;
  MetricsParams params;
};

MetricsReport metrics(const std::vector<std::pair<std::string, RunLog>>& logs,
                      MetricsParams params = {});

// streaming (Welford-style) RMS of a single channel; the independent
// cross-check for the batch computation
double streaming_rms(const std::vector<double>& xs);

// running average of ||x||_q^2 + r*u^2 over an episode
std::vector<double> running_average_cost(const RunLog& log, const Vec& q_diag7,
                                         double q_vv);

std::string metrics_markdown(const MetricsReport& r);
void save_metrics_json(const std::string& path, const MetricsReport& r,
                       const std::vector<std::pair<std::string, std::string>>& manifest);

}  // namespace ksmpc::harness
