#pragma once

#include <cstdint>
#include <vector>

#include "core/common.hpp"
#include "core/rng.hpp"

namespace ksmpc::koopman {

// identity block plus thin-plate-spline RBFs: phi_l(x) = r^2 log r,
// r = ||x - c_l||_2
struct Dictionary {
  Mat centers;  // 7 x n_rbf
  Vec box_lower, box_upper;
  uint64_t seed = 0;

  int n_lift() const { return kNumStates + static_cast<int>(centers.cols()); }
  Vec lift(const Vec& x7) const;
  static Dictionary sample(int n_rbf, const Vec& lower, const Vec& upper,
                           uint64_t seed);
};

// column-aligned snapshot matrices; Y.col(i) is the successor of X.col(i)
struct Dataset {
  Mat x;  // 7 x M
  Mat u;  // 1 x M
  Mat d;  // 3 x M
  Mat y;  // 7 x M

  int size() const { return static_cast<int>(x.cols()); }
  void check() const;
  void append(const Dataset& other);
  // deterministic contiguous split: first part keeps `fraction` of columns
  std::pair<Dataset, Dataset> split(double fraction) const;
  Dataset slice(int begin, int count) const;
};

struct KoopmanModel {
  Mat a;       // N x N
  Mat b;       // N x 1
  Mat b_phi;   // N x 3
  Mat c;       // 7 x N, [I 0]
  Mat g;       // N x N, identity
  Mat sigma_w; // N x N residual covariance
  Vec w_bar;   // per-coordinate max |training residual|
  Dictionary dict;
  double ridge = 0.0;
  int m_train = 0;

  int n_lift() const { return static_cast<int>(a.rows()); }
  Vec lift(const Vec& x7) const { return dict.lift(x7); }
};

// EDMD least squares for (A, B, B_phi); ridge < 0 picks the trace-scaled
// default, ridge == 0 demands full-rank regressors
KoopmanModel fit(const Dataset& ds, const Dictionary& dict, double ridge = -1.0);

struct FitReport {
  Vec one_step_nrmse;      // per physical state
  Vec rollout_nrmse;       // per physical state
  Vec residual_autocorr;   // lag-1, physical block
  Vec residual_mean;       // physical block
  double wbar_exceed_fraction = 0.0;
  int rollout_len = 0;
  int m_val = 0;
};

FitReport validate(const KoopmanModel& m, const Dataset& val, int rollout_len);

}  // namespace ksmpc::koopman
