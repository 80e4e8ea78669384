#include "core/koopman.hpp"

#include <cmath>

namespace ksmpc::koopman {

Vec Dictionary::lift(const Vec& x7) const {
  require(x7.size() == kNumStates, ErrorCode::DimensionMismatch,
          "lift: expected 7 states");
  require(x7.allFinite(), ErrorCode::NonFinite, "lift: non-finite state");
  Vec z(n_lift());
  z.head(kNumStates) = x7;
  for (int l = 0; l < centers.cols(); ++l) {
    const double r = (x7 - centers.col(l)).norm();
    z[kNumStates + l] = (r > 0.0) ? r * r * std::log(r) : 0.0;
  }
  return z;
}

Dictionary Dictionary::sample(int n_rbf, const Vec& lower, const Vec& upper,
                              uint64_t seed) {
  require(lower.size() == kNumStates && upper.size() == kNumStates,
          ErrorCode::DimensionMismatch, "dictionary: box must be 7-dimensional");
  require((upper - lower).minCoeff() >= 0, ErrorCode::Config,
          "dictionary: box lower > upper");
  Dictionary d;
  d.box_lower = lower;
  d.box_upper = upper;
  d.seed = seed;
  d.centers.resize(kNumStates, n_rbf);
  Rng rng(seed);
  for (int l = 0; l < n_rbf; ++l)
    for (int i = 0; i < kNumStates; ++i)
      d.centers(i, l) = rng.uniform(lower[i], upper[i]);
  return d;
}

void Dataset::check() const {
  const int m = size();
  require(u.cols() == m && d.cols() == m && y.cols() == m,
          ErrorCode::DimensionMismatch, "dataset: column counts differ");
  require(x.rows() == kNumStates && y.rows() == kNumStates && u.rows() == 1 &&
              d.rows() == kNumExternal,
          ErrorCode::DimensionMismatch, "dataset: row counts");
}

void Dataset::append(const Dataset& other) {
  if (other.size() == 0) return;
  if (size() == 0) {
    *this = other;
    return;
  }
  check();
  other.check();
  const int m0 = size(), m1 = other.size();
  Mat nx(kNumStates, m0 + m1), ny(kNumStates, m0 + m1);
  Mat nu(1, m0 + m1), nd(kNumExternal, m0 + m1);
  nx << x, other.x;
  ny << y, other.y;
  nu << u, other.u;
  nd << d, other.d;
  x = nx; y = ny; u = nu; d = nd;
}

Dataset Dataset::slice(int begin, int count) const {
  Dataset out;
  out.x = x.middleCols(begin, count);
  out.u = u.middleCols(begin, count);
  out.d = d.middleCols(begin, count);
  out.y = y.middleCols(begin, count);
  return out;
}

std::pair<Dataset, Dataset> Dataset::split(double fraction) const {
  const int m = size();
  const int m0 = std::max(1, std::min(m - 1, static_cast<int>(m * fraction)));
  return {slice(0, m0), slice(m0, m - m0)};
}

KoopmanModel fit(const Dataset& ds, const Dictionary& dict, double ridge) {
  ds.check();
  const int m = ds.size();
  const int n = dict.n_lift();
  const int p = n + 1 + kNumExternal;
  require(m > p, ErrorCode::InsufficientData, "fit: fewer samples than regressors");

  Mat z(n, m), zp(n, m);
  for (int i = 0; i < m; ++i) {
    z.col(i) = dict.lift(ds.x.col(i));
    zp.col(i) = dict.lift(ds.y.col(i));
  }
  Mat theta(p, m);
  theta.topRows(n) = z;
  theta.row(n) = ds.u;
  theta.bottomRows(kNumExternal) = ds.d;

  Mat gram = theta * theta.transpose();
  if (ridge < 0) ridge = 1e-8 * gram.trace() / p;
  if (ridge == 0.0) {
    Eigen::SelfAdjointEigenSolver<Mat> es(gram);
    require(es.eigenvalues().minCoeff() >
                1e-12 * std::max(1.0, es.eigenvalues().maxCoeff()),
            ErrorCode::RankDeficient,
            "fit: rank-deficient regressors and no ridge");
  }
  gram += ridge * Mat::Identity(p, p);

  const Mat rhs = theta * zp.transpose();          // p x n
  const Mat k_ops = gram.ldlt().solve(rhs).transpose();  // n x p

  KoopmanModel model;
  model.dict = dict;
  model.ridge = ridge;
  model.m_train = m;
  model.a = k_ops.leftCols(n);
  model.b = k_ops.middleCols(n, 1);
  model.b_phi = k_ops.rightCols(kNumExternal);
  model.c = Mat::Zero(kNumStates, n);
  model.c.leftCols(kNumStates).setIdentity();
  model.g = Mat::Identity(n, n);

  const Mat resid = zp - k_ops * theta;  // n x m
  const Vec mean = resid.rowwise().mean();
  const Mat centered = resid.colwise() - mean;
  model.sigma_w = centered * centered.transpose() / std::max(1, m - 1);
  model.sigma_w = 0.5 * (model.sigma_w + model.sigma_w.transpose()).eval();
  model.w_bar = resid.cwiseAbs().rowwise().maxCoeff();
  return model;
}

namespace {

Vec nrmse(const Mat& err, const Mat& truth) {
  // RMSE over columns, normalized per state by the spread of the true signal
  const int n = static_cast<int>(err.rows());
  Vec out(n);
  for (int i = 0; i < n; ++i) {
    const double rmse = std::sqrt(err.row(i).squaredNorm() / err.cols());
    const double mean = truth.row(i).mean();
    const double spread = std::sqrt((truth.row(i).array() - mean).square().sum() /
                                    truth.cols());
    out[i] = rmse / std::max(spread, 1e-9);
  }
  return out;
}

}  // namespace

FitReport validate(const KoopmanModel& model, const Dataset& val, int rollout_len) {
  require(rollout_len >= 1, ErrorCode::Config, "validate: rollout_len >= 1");
  val.check();
  const int m = val.size();
  const int n = model.n_lift();

  FitReport rep;
  rep.rollout_len = rollout_len;
  rep.m_val = m;

  Mat z(n, m), zp(n, m);
  for (int i = 0; i < m; ++i) {
    z.col(i) = model.lift(val.x.col(i));
    zp.col(i) = model.lift(val.y.col(i));
  }
  const Mat pred = model.a * z + model.b * val.u + model.b_phi * val.d;
  const Mat resid = zp - pred;
  const Mat err_phys = model.c * resid;
  rep.one_step_nrmse = nrmse(err_phys, val.y);

  // multi-step open-loop rollouts with the recorded inputs and externals
  Mat roll_err(kNumStates, 0), roll_truth(kNumStates, 0);
  std::vector<Vec> errs, truths;
  for (int start = 0; start + rollout_len <= m; start += rollout_len) {
    Vec zk = z.col(start);
    for (int j = 0; j < rollout_len; ++j) {
      const int i = start + j;
      zk = model.a * zk + model.b * val.u.col(i) + model.b_phi * val.d.col(i);
      errs.push_back(model.c * zk - val.y.col(i));
      truths.push_back(val.y.col(i));
    }
  }
  if (!errs.empty()) {
    Mat e(kNumStates, errs.size()), t(kNumStates, errs.size());
    for (size_t i = 0; i < errs.size(); ++i) {
      e.col(i) = errs[i];
      t.col(i) = truths[i];
    }
    rep.rollout_nrmse = nrmse(e, t);
  } else {
    rep.rollout_nrmse = Vec::Zero(kNumStates);
  }

  // residual diagnostics on the physical block
  rep.residual_mean = err_phys.rowwise().mean();
  rep.residual_autocorr.resize(kNumStates);
  for (int i = 0; i < kNumStates; ++i) {
    const auto r = err_phys.row(i);
    const double mu = r.mean();
    double num = 0, den = 0;
    for (int k = 0; k + 1 < m; ++k) num += (r[k] - mu) * (r[k + 1] - mu);
    for (int k = 0; k < m; ++k) den += (r[k] - mu) * (r[k] - mu);
    rep.residual_autocorr[i] = (den > 0) ? num / den : 0.0;
  }
  int exceed = 0;
  for (int i = 0; i < m; ++i)
    if ((resid.col(i).cwiseAbs() - model.w_bar).maxCoeff() > 0) ++exceed;
  rep.wbar_exceed_fraction = static_cast<double>(exceed) / std::max(1, m);
  return rep;
}

}  // namespace ksmpc::koopman
