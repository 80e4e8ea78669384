#include <doctest.h>

#include "core/model_io.hpp"
#include "core/reduction.hpp"
#include "core/sets.hpp"

using namespace ksmpc;

namespace {

koopman::KoopmanModel toy_model(uint64_t seed) {
  Rng rng(seed);
  koopman::KoopmanModel m;
  const int n = kNumStates;
  Mat a = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = 0.03 * rng.normal();
  a += 0.9 * Mat::Identity(n, n);
  a *= 0.95 / std::max(0.95, ctrl::spectral_radius(a));
  m.a = a;
  m.b = Mat::Zero(n, 1);
  m.b(2, 0) = 0.2;
  m.b(4, 0) = 0.35;
  m.b(0, 0) = 0.02;
  m.b_phi = Mat::Zero(n, kNumExternal);
  m.b_phi(3, 1) = 0.02;
  m.c = Mat::Identity(n, n);
  m.g = Mat::Identity(n, n);
  m.sigma_w = 1e-6 * Mat::Identity(n, n);
  m.w_bar = 2e-4 * Vec::Ones(n);
  m.dict = koopman::Dictionary::sample(0, Vec::Constant(n, -1), Vec::Constant(n, 1), 1);
  return m;
}

}  // namespace

TEST_CASE("reduction: balanced truncation preserves the dominant response") {
  Rng rng(3);
  const int n = 10;
  Mat a = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = 0.1 * rng.normal();
  a += 0.85 * Mat::Identity(n, n);
  a *= 0.93 / std::max(0.93, ctrl::spectral_radius(a));
  Mat b(n, 2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 2; ++j) b(i, j) = rng.normal();
  Mat c(2, n);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < n; ++j) c(i, j) = rng.normal();

  const auto red = ctrl::balanced_truncation(a, b, c, 6);
  CHECK((red.t * red.t_inv - Mat::Identity(6, 6)).norm() < 1e-8);

  // compare impulse responses; the gap must respect the truncation bound scale
  const Mat ar = red.t * a * red.t_inv;
  const Mat br = red.t * b;
  const Mat cr = c * red.t_inv;
  Mat xf = b, xr = br;
  double worst = 0.0;
  for (int k = 0; k < 60; ++k) {
    worst = std::max(worst, (c * xf - cr * xr).cwiseAbs().maxCoeff());
    xf = a * xf;
    xr = ar * xr;
  }
  CHECK(worst <= red.tail_bound + 1e-9);
  CHECK(red.hankel.size() == n);
  for (int i = 1; i < red.hankel.size(); ++i)
    CHECK(red.hankel[i] <= red.hankel[i - 1] + 1e-12);
}

TEST_CASE("sets: pipeline produces a certified invariant set in reduced coordinates") {
  const auto model = toy_model(51);
  ctrl::SmpcOptions opt;
  opt.horizon = 10;
  opt.apply_defaults();
  const Mat q = model.c.transpose() * opt.q_diag.asDiagonal() * model.c;
  const auto ric = ctrl::solve_dare(model.a, model.b, q, Mat::Constant(1, 1, opt.q_vv));

  sets::SetsConfig cfg;
  cfg.reduced_dim = 4;
  cfg.phi_erosion = true;
  cfg.vx_abs_max = 25.0;
  const auto s = sets::compute_sets(model, ric, opt, model.sigma_w, cfg);

  CHECK(s.t_r.rows() == 4);
  CHECK(!poly::is_empty(s.c_inf));
  CHECK(poly::inclusion(s.c_inf, s.c_t, 1e-6));

  // invariance certificate: C_inf inside its own robust pre-set
  const auto w_box = poly::Box::symmetric(s.w_bar_used);
  const auto pre = poly::pre_set(s.c_inf, s.a_red, Vec(s.b_red), -opt.u_bound,
                                 opt.u_bound, w_box, s.t_r);
  CHECK(poly::inclusion(s.c_inf, pre, 1e-6));

  // eroded first-step bounds never exceed the invariant set bounds
  CHECK(((s.c_inf.h_vec - s.first_h_eroded).array() >= -1e-12).all());
  CHECK(s.mismatch_bound >= 0.0);

  // Monte Carlo: sampled states admit a recovery input for vertex noise
  Rng rng(7);
  const auto samples = poly::sample(poly::HPolytope{s.first_h, s.first_h_eroded},
                                    300, rng);
  const auto eroded = poly::pontryagin_diff_box(s.c_inf, s.t_r, w_box);
  int fails = 0;
  for (const auto& xi : samples) {
    double lo = -opt.u_bound, hi = opt.u_bound;
    const Vec rhs = eroded.h_vec - eroded.h_mat * (s.a_red * xi);
    const Vec coef = eroded.h_mat * s.b_red;
    for (int i = 0; i < rhs.size(); ++i) {
      if (coef[i] > 1e-12) hi = std::min(hi, rhs[i] / coef[i]);
      else if (coef[i] < -1e-12) lo = std::max(lo, rhs[i] / coef[i]);
      else if (rhs[i] < -1e-9) { lo = 1; hi = 0; }
    }
    if (lo > hi + 1e-9) ++fails;
  }
  CHECK(fails == 0);
}

TEST_CASE("sets: file round trip preserves the polytopes") {
  const auto model = toy_model(53);
  ctrl::SmpcOptions opt;
  opt.horizon = 8;
  opt.apply_defaults();
  const Mat q = model.c.transpose() * opt.q_diag.asDiagonal() * model.c;
  const auto ric = ctrl::solve_dare(model.a, model.b, q, Mat::Constant(1, 1, opt.q_vv));
  sets::SetsConfig cfg;
  cfg.reduced_dim = 3;
  const auto s = sets::compute_sets(model, ric, opt, model.sigma_w, cfg);

  io::save_sets("/tmp/ksmpc_sets_test.json", s, "deadbeef");
  const auto loaded = io::load_sets("/tmp/ksmpc_sets_test.json");
  CHECK(loaded.model_hash == "deadbeef");
  CHECK((loaded.sets.c_inf.h_mat - s.c_inf.h_mat).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.sets.first_h_eroded - s.first_h_eroded).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.sets.t_r - s.t_r).cwiseAbs().maxCoeff() == 0.0);
}
