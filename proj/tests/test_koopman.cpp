#include <doctest.h>

#include <cmath>

#include "core/koopman.hpp"

using namespace ksmpc;

namespace {

koopman::Dictionary rbf_dict(int n_rbf, uint64_t seed = 7) {
  Vec lo = Vec::Constant(kNumStates, -2.0);
  Vec hi = Vec::Constant(kNumStates, 2.0);
  return koopman::Dictionary::sample(n_rbf, lo, hi, seed);
}

// dataset generated by an exact linear physical system (identity lifting)
koopman::Dataset linear_dataset(const Mat& a, const Mat& b, const Mat& bphi,
                                int m, uint64_t seed) {
  Rng rng(seed);
  koopman::Dataset ds;
  ds.x.resize(kNumStates, m);
  ds.u.resize(1, m);
  ds.d.resize(kNumExternal, m);
  ds.y.resize(kNumStates, m);
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < kNumStates; ++k) ds.x(k, i) = rng.normal();
    ds.u(0, i) = rng.normal();
    for (int k = 0; k < kNumExternal; ++k) ds.d(k, i) = rng.normal();
    ds.y.col(i) = a * ds.x.col(i) + b * ds.u.col(i) + bphi * ds.d.col(i);
  }
  return ds;
}

}  // namespace

TEST_CASE("lift: thin-plate values at characteristic radii") {
  auto d = rbf_dict(3);
  // place one center exactly at a probe point
  Vec x = d.centers.col(0);
  Vec z = d.lift(x);
  CHECK(z[kNumStates + 0] == 0.0);  // r = 0 convention

  // r = 1: r^2 log r = 0
  Vec offset = Vec::Zero(kNumStates);
  offset[0] = 1.0;
  Vec z1 = d.lift(Vec(d.centers.col(1) + offset));
  CHECK(z1[kNumStates + 1] == doctest::Approx(0.0).epsilon(1e-12));

  // r = e: value e^2
  Vec ze = d.lift(Vec(d.centers.col(2) + std::exp(1.0) * offset));
  CHECK(ze[kNumStates + 2] == doctest::Approx(std::exp(2.0)).epsilon(1e-12));
}

TEST_CASE("lift: the identity block reconstructs the state exactly") {
  auto d = rbf_dict(15);
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    Vec x(kNumStates);
    for (int i = 0; i < kNumStates; ++i) x[i] = rng.normal(0, 2);
    Vec z = d.lift(x);
    CHECK((z.head(kNumStates) - x).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("fit: exact recovery of a consistent linear system") {
  Rng rng(11);
  Mat a = 0.1 * Mat::Random(kNumStates, kNumStates) +
          0.8 * Mat::Identity(kNumStates, kNumStates);
  Mat b = Mat::Random(kNumStates, 1);
  Mat bphi = Mat::Random(kNumStates, kNumExternal);
  auto ds = linear_dataset(a, b, bphi, 500, 21);
  auto dict = rbf_dict(0);  // identity lifting
  auto model = koopman::fit(ds, dict, 0.0);
  CHECK((model.a - a).norm() < 1e-8);
  CHECK((model.b - b).norm() < 1e-8);
  CHECK((model.b_phi - bphi).norm() < 1e-8);
  CHECK(model.w_bar.maxCoeff() < 1e-9);

  auto rep = koopman::validate(model, ds, 1);
  CHECK(rep.one_step_nrmse.maxCoeff() < 1e-8);
}

TEST_CASE("fit: duplicating a column leaves the minimizer unchanged") {
  Mat a = 0.05 * Mat::Random(kNumStates, kNumStates) +
          0.7 * Mat::Identity(kNumStates, kNumStates);
  Mat b = Mat::Random(kNumStates, 1);
  Mat bphi = Mat::Random(kNumStates, kNumExternal);
  auto ds = linear_dataset(a, b, bphi, 400, 5);
  auto dict = rbf_dict(0);
  auto m1 = koopman::fit(ds, dict, 0.0);

  koopman::Dataset dup = ds;
  dup.append(ds.slice(10, 1));
  auto m2 = koopman::fit(dup, dict, 0.0);
  CHECK((m1.a - m2.a).norm() < 1e-9);
  CHECK((m1.b - m2.b).norm() < 1e-9);
}

TEST_CASE("fit: unexcited data is flagged rank deficient") {
  koopman::Dataset ds;
  const int m = 100;
  ds.x = Mat::Zero(kNumStates, m);
  ds.u = Mat::Zero(1, m);
  ds.d = Mat::Zero(kNumExternal, m);
  ds.y = Mat::Zero(kNumStates, m);
  auto dict = rbf_dict(4);
  bool threw = false;
  try {
    koopman::fit(ds, dict, 0.0);
  } catch (const Error& e) {
    threw = e.code() == ErrorCode::RankDeficient;
  }
  CHECK(threw);
  // a ridge makes the same data fit without throwing
  auto model = koopman::fit(ds, dict, 1e-6);
  CHECK(model.a.allFinite());
}

TEST_CASE("fit: normal-equation residual orthogonality with ridge") {
  Rng rng(13);
  Mat a = 0.05 * Mat::Random(kNumStates, kNumStates) +
          0.6 * Mat::Identity(kNumStates, kNumStates);
  Mat b = Mat::Random(kNumStates, 1);
  Mat bphi = Mat::Random(kNumStates, kNumExternal);
  auto ds = linear_dataset(a, b, bphi, 800, 31);
  // corrupt targets so the residual is nonzero
  for (int i = 0; i < ds.size(); ++i)
    for (int k = 0; k < kNumStates; ++k) ds.y(k, i) += 0.01 * rng.normal();

  const double ridge = 1e-4;
  auto dict = rbf_dict(6);
  auto model = koopman::fit(ds, dict, ridge);

  const int n = model.n_lift();
  Mat z(n, ds.size()), zp(n, ds.size());
  for (int i = 0; i < ds.size(); ++i) {
    z.col(i) = dict.lift(ds.x.col(i));
    zp.col(i) = dict.lift(ds.y.col(i));
  }
  Mat theta(n + 1 + kNumExternal, ds.size());
  theta.topRows(n) = z;
  theta.row(n) = ds.u;
  theta.bottomRows(kNumExternal) = ds.d;
  Mat k_ops(n, n + 1 + kNumExternal);
  k_ops << model.a, model.b, model.b_phi;
  const Mat lhs = (zp - k_ops * theta) * theta.transpose();
  const Mat rhs = ridge * k_ops;
  CHECK((lhs - rhs).norm() <= 1e-6 * std::max(1.0, rhs.norm()));
}

TEST_CASE("fit: residual statistics behave like the noise that made them") {
  Rng rng(17);
  Mat a = 0.5 * Mat::Identity(kNumStates, kNumStates);
  Mat b = Mat::Random(kNumStates, 1);
  Mat bphi = Mat::Zero(kNumStates, kNumExternal);
  auto ds = linear_dataset(a, b, bphi, 6000, 41);
  const double noise = 0.02;
  for (int i = 0; i < ds.size(); ++i)
    for (int k = 0; k < kNumStates; ++k) ds.y(k, i) += noise * rng.normal();

  auto dict = rbf_dict(0);
  auto model = koopman::fit(ds, dict, -1.0);
  // empirical residual mean within 3 sigma / sqrt(M) per coordinate
  auto rep = koopman::validate(model, ds, 1);
  for (int k = 0; k < kNumStates; ++k)
    CHECK(std::abs(rep.residual_mean[k]) <= 3.0 * noise / std::sqrt(double(ds.size())) + 1e-6);
  // covariance close to the injected noise
  for (int k = 0; k < kNumStates; ++k)
    CHECK(model.sigma_w(k, k) == doctest::Approx(noise * noise).epsilon(0.15));
  // every training residual inside the recorded box
  CHECK(rep.wbar_exceed_fraction == 0.0);
}

TEST_CASE("validate: rollout of length one reproduces the one-step metric") {
  Mat a = 0.6 * Mat::Identity(kNumStates, kNumStates);
  Mat b = Mat::Random(kNumStates, 1);
  Mat bphi = Mat::Random(kNumStates, kNumExternal);
  auto ds = linear_dataset(a, b, bphi, 300, 3);
  Rng rng(9);
  for (int i = 0; i < ds.size(); ++i) ds.y(0, i) += 0.05 * rng.normal();
  auto model = koopman::fit(ds, rbf_dict(0), -1.0);
  auto rep = koopman::validate(model, ds, 1);
  CHECK((rep.one_step_nrmse - rep.rollout_nrmse).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dataset: episode bookkeeping example") {
  // two episodes of 600 ticks yield exactly 1198 usable pairs
  auto make_episode = [](int ticks, uint64_t seed) {
    Rng rng(seed);
    koopman::Dataset d;
    const int m = ticks - 1;
    d.x.setZero(kNumStates, m);
    d.u.setZero(1, m);
    d.d.setZero(kNumExternal, m);
    d.y.setZero(kNumStates, m);
    for (int i = 0; i < m; ++i) d.x(0, i) = rng.normal();
    return d;
  };
  koopman::Dataset ds = make_episode(600, 1);
  ds.append(make_episode(600, 2));
  CHECK(ds.size() == 1198);
}
