#include "core/metrics.hpp"

#include <cmath>
#include <sstream>

#include "core/model_io.hpp"

namespace ksmpc::harness {

MetricsReport metrics(const std::vector<std::pair<std::string, RunLog>>& logs,
                      MetricsParams params) {
  require(!logs.empty(), ErrorCode::Config, "metrics: no run logs");
  if (params.constraints.rows_x.rows() == 0)
    params.constraints = ctrl::ConstraintSpec::lane_keeping_defaults();
  if (params.q_diag7.size() == 0) {
    params.q_diag7.resize(kNumStates);
    params.q_diag7 << 10, 10, 1, 5, 1, 0.01, 0.1;
  }
  MetricsReport rep;
  rep.params = params;
  for (const auto& [name, log] : logs) {
    ControllerMetrics m;
    m.name = name;
    m.ticks = static_cast<int>(log.ticks.size());
    require(m.ticks > 0, ErrorCode::Config, "metrics: empty run log " + name);
    Vec sumsq = Vec::Zero(kNumStates), maxabs = Vec::Zero(kNumStates);
    m.ey_hist.assign(params.ey_hist_bins, 0.0);
    int in_band = 0;
    double cost_sum = 0.0;
    for (const auto& r : log.ticks) {
      const Vec x = r.x.to_vec();
      sumsq += x.cwiseProduct(x);
      maxabs = maxabs.cwiseMax(x.cwiseAbs());
      m.infeasible_count += (r.feasible == 0);
      if (std::abs(r.alpha_f) <= params.slip_band &&
          std::abs(r.alpha_r) <= params.slip_band)
        ++in_band;
      const double half = params.ey_hist_half_range;
      const double fr = (std::clamp(r.x.e_y, -half, half) + half) / (2 * half);
      const int bin = std::min(params.ey_hist_bins - 1,
                               static_cast<int>(fr * params.ey_hist_bins));
      m.ey_hist[bin] += 1.0;
      const Vec rowvals = params.constraints.rows_x * x;
      double worst = 0.0;
      for (int i = 0; i < rowvals.size(); ++i)
        worst = std::max(worst, std::abs(rowvals[i]) / params.constraints.bounds[i]);
      m.max_constraint_ratio = std::max(m.max_constraint_ratio, worst);
      if (worst > 1.0) ++m.constraint_violation_ticks;
      cost_sum += x.dot(params.q_diag7.asDiagonal() * x) +
                  params.q_vv * r.delta * r.delta;
    }
    m.rmse = (sumsq / m.ticks).cwiseSqrt();
    m.max_err = maxabs;
    m.slip_linear_fraction = static_cast<double>(in_band) / m.ticks;
    for (auto& v : m.ey_hist) v /= m.ticks;
    m.mean_sq_cost = cost_sum / m.ticks;
    rep.rows.push_back(std::move(m));
  }
  return rep;
}

double streaming_rms(const std::vector<double>& xs) {
  // Welford-style running mean of squares
  double mean_sq = 0.0;
  int n = 0;
  for (double v : xs) {
    ++n;
    mean_sq += (v * v - mean_sq) / n;
  }
  return std::sqrt(mean_sq);
}

std::vector<double> running_average_cost(const RunLog& log, const Vec& q_diag7,
                                         double q_vv) {
  std::vector<double> avg;
  avg.reserve(log.ticks.size());
  double acc = 0.0;
  int n = 0;
  for (const auto& r : log.ticks) {
    const Vec x = r.x.to_vec();
    acc += x.dot(q_diag7.asDiagonal() * x) + q_vv * r.delta * r.delta;
    ++n;
    avg.push_back(acc / n);
  }
  return avg;
}

static const char* kStateNames[] = {"e_y", "e_yL", "ey_dot", "e_psi",
                                    "psi_dot", "a_y", "v_y"};

std::string metrics_markdown(const MetricsReport& r) {
  std::ostringstream os;
  os << "| controller |";
  for (const char* s : kStateNames) os << " rmse " << s << " |";
  os << " max e_y | infeasible | slip<=3deg | violations |\n";
  os << "|---|";
  for (int i = 0; i < kNumStates; ++i) os << "---|";
  os << "---|---|---|---|\n";
  for (const auto& m : r.rows) {
    os << "| " << m.name << " |";
    char buf[32];
    for (int i = 0; i < kNumStates; ++i) {
      std::snprintf(buf, sizeof(buf), " %.4f |", m.rmse[i]);
      os << buf;
    }
    std::snprintf(buf, sizeof(buf), " %.4f |", m.max_err[0]);
    os << buf << " " << m.infeasible_count << " |";
    std::snprintf(buf, sizeof(buf), " %.4f |", m.slip_linear_fraction);
    os << buf << " " << m.constraint_violation_ticks << " |\n";
  }
  return os.str();
}

void save_metrics_json(const std::string& path, const MetricsReport& r,
                       const std::vector<std::pair<std::string, std::string>>& manifest) {
  io::Json j;
  j["format"] = "ksmpc-metrics";
  for (const auto& [k, v] : manifest) j["manifest"][k] = v;
  for (const auto& m : r.rows) {
    io::Json row;
    row["name"] = m.name;
    row["rmse"] = io::vec_to_json(m.rmse);
    row["max_err"] = io::vec_to_json(m.max_err);
    row["ticks"] = m.ticks;
    row["infeasible_count"] = m.infeasible_count;
    row["slip_linear_fraction"] = m.slip_linear_fraction;
    row["constraint_violation_ticks"] = m.constraint_violation_ticks;
    row["max_constraint_ratio"] = m.max_constraint_ratio;
    row["mean_sq_cost"] = m.mean_sq_cost;
    row["ey_hist"] = m.ey_hist;
    j["controllers"].push_back(row);
  }
  io::save_json(path, j);
}

}  // namespace ksmpc::harness
