#include "core/chance.hpp"

#include "core/controllers.hpp"

namespace ksmpc::harness {

std::vector<ChanceRow> validate_chance(const Mat& a_cl, const Mat& g,
                                       const Vec& w_std, const Mat& rows,
                                       double epsilon, int n_steps, int trials,
                                       uint64_t seed) {
  const int n = static_cast<int>(a_cl.rows());
  const int n_rows = static_cast<int>(rows.rows());
  const Mat sigma_w = w_std.cwiseProduct(w_std).asDiagonal();
  const auto sigmas = ctrl::propagate_covariance(a_cl, g, sigma_w,
                                                 Mat::Zero(n, n), n_steps, false);
  Mat margins(n_steps + 1, n_rows);
  for (int i = 0; i <= n_steps; ++i)
    margins.row(i) = ctrl::tighten_margins(rows, sigmas[i], epsilon).transpose();

  Mat counts = Mat::Zero(n_steps + 1, n_rows);
  Rng rng(seed);
  Vec e(n), w(n);
  for (int t = 0; t < trials; ++t) {
    e.setZero();
    for (int i = 1; i <= n_steps; ++i) {
      for (int k = 0; k < n; ++k) w[k] = rng.normal(0, w_std[k]);
      e = a_cl * e + g * w;
      const Vec he = rows * e;
      for (int r = 0; r < n_rows; ++r)
        if (he[r] > margins(i, r)) counts(i, r) += 1.0;
    }
  }
  std::vector<ChanceRow> out;
  for (int i = 1; i <= n_steps; ++i)
    for (int r = 0; r < n_rows; ++r)
      out.push_back({i, r, epsilon, margins(i, r), counts(i, r) / trials});
  return out;
}

std::vector<Mat> monte_carlo_covariance(const Mat& a_cl, const Mat& g,
                                        const Vec& w_std, int n_steps, int trials,
                                        uint64_t seed) {
  const int n = static_cast<int>(a_cl.rows());
  std::vector<Mat> acc(n_steps + 1, Mat::Zero(n, n));
  std::vector<Vec> mean(n_steps + 1, Vec::Zero(n));
  Rng rng(seed);
  Vec e(n), w(n);
  for (int t = 0; t < trials; ++t) {
    e.setZero();
    for (int i = 1; i <= n_steps; ++i) {
      for (int k = 0; k < n; ++k) w[k] = rng.normal(0, w_std[k]);
      e = a_cl * e + g * w;
      acc[i].noalias() += e * e.transpose();
      mean[i] += e;
    }
  }
  std::vector<Mat> out(n_steps + 1, Mat::Zero(n, n));
  for (int i = 1; i <= n_steps; ++i) {
    const Vec mu = mean[i] / trials;
    out[i] = acc[i] / trials - mu * mu.transpose();
  }
  return out;
}

}  // namespace ksmpc::harness
