#include <doctest.h>

#include <cmath>

#include "core/chance.hpp"
#include "core/controllers.hpp"

using namespace ksmpc;

namespace {

// small synthetic "lifted" model with identity lifting (n = 7)
koopman::KoopmanModel synthetic_model(uint64_t seed, double noise_var = 1e-6) {
  Rng rng(seed);
  koopman::KoopmanModel m;
  const int n = kNumStates;
  Mat a = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = 0.03 * rng.normal();
  a += 0.9 * Mat::Identity(n, n);
  // keep it strictly stable
  const double rho = ctrl::spectral_radius(a);
  if (rho >= 0.98) a *= 0.97 / rho;
  m.a = a;
  m.b = Mat::Zero(n, 1);
  for (int i = 0; i < n; ++i) m.b(i, 0) = 0.05 * rng.normal();
  m.b(2, 0) += 0.2;
  m.b(4, 0) += 0.3;
  m.b_phi = Mat::Zero(n, kNumExternal);
  m.b_phi(3, 1) = 0.05;
  m.b_phi(4, 1) = 0.1;
  m.c = Mat::Identity(n, n);
  m.g = Mat::Identity(n, n);
  m.sigma_w = noise_var * Mat::Identity(n, n);
  m.w_bar = std::sqrt(noise_var) * 3.0 * Vec::Ones(n);
  m.dict = koopman::Dictionary::sample(0, Vec::Constant(n, -1), Vec::Constant(n, 1), 1);
  return m;
}

ctrl::RiccatiResult riccati_for(const koopman::KoopmanModel& m,
                                const ctrl::SmpcOptions& opt) {
  auto o = opt;
  o.apply_defaults();
  const Mat q = m.c.transpose() * o.q_diag.asDiagonal() * m.c;
  return ctrl::solve_dare(m.a, m.b, q, Mat::Constant(1, 1, o.q_vv));
}

}  // namespace

TEST_CASE("dare: scalar closed form") {
  const auto res = ctrl::solve_dare(Mat::Constant(1, 1, 0.5), Mat::Ones(1, 1),
                                    Mat::Ones(1, 1), Mat::Ones(1, 1));
  const double p_expected = (0.25 + std::sqrt(4.0625)) / 2.0;
  CHECK(res.p(0, 0) == doctest::Approx(p_expected).epsilon(1e-9));
  CHECK(res.k(0, 0) == doctest::Approx(0.26556).epsilon(1e-4));
  CHECK(res.residual <= 1e-10);
}

TEST_CASE("dare: zero input channel reduces to a Lyapunov equation") {
  Mat a(2, 2);
  a << 0.8, 0.1, -0.05, 0.7;
  const Mat q = Mat::Identity(2, 2);
  const auto res = ctrl::solve_dare(a, Mat::Zero(2, 1), q, Mat::Ones(1, 1));
  CHECK(res.k.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  const Mat lyap = ctrl::solve_dlyap(a.transpose(), q);  // P = A'PA + Q
  CHECK((res.p - lyap).norm() < 1e-9 * lyap.norm());
}

TEST_CASE("dare: random stabilizable systems are self-consistent") {
  Rng rng(2);
  for (int t = 0; t < 10; ++t) {
    const int n = 5;
    Mat a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
    a *= 0.9 / ctrl::spectral_radius(a);
    Mat b(n, 2);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < 2; ++j) b(i, j) = rng.normal();
    Mat q = Mat::Identity(n, n);
    Mat r = Mat::Identity(2, 2);
    const auto res = ctrl::solve_dare(a, b, q, r);
    CHECK(res.residual <= 1e-10);
    CHECK(res.spectral_radius < 1.0);
    // plug P back into the Riccati map
    const Mat btp = b.transpose() * res.p;
    const Mat lhs = a.transpose() * res.p * a -
                    a.transpose() * res.p * b *
                        (r + btp * b).ldlt().solve(btp * a) +
                    q;
    CHECK((lhs - res.p).norm() <= 1e-10 * res.p.norm());
    // the identity used by the stability argument
    const Mat ident = res.a_cl.transpose() * res.p * res.a_cl +
                      res.k.transpose() * r * res.k + q;
    CHECK((ident - res.p).norm() <= 1e-8 * res.p.norm());
  }
}

TEST_CASE("covariance: scalar recursion arithmetic") {
  const auto s = ctrl::propagate_covariance(Mat::Constant(1, 1, 0.5),
                                            Mat::Ones(1, 1), Mat::Ones(1, 1),
                                            Mat::Ones(1, 1), 2, false);
  CHECK(s[0](0, 0) == doctest::Approx(1.0));
  CHECK(s[1](0, 0) == doctest::Approx(1.25));
  CHECK(s[2](0, 0) == doctest::Approx(1.3125));
}

TEST_CASE("covariance: zero noise from zero stays zero") {
  const auto s = ctrl::propagate_covariance(Mat::Constant(2, 2, 0.3),
                                            Mat::Identity(2, 2), Mat::Zero(2, 2),
                                            Mat::Zero(2, 2), 5, false);
  for (const auto& m : s) CHECK(m.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("covariance: Loewner-monotone from a zero start") {
  Rng rng(4);
  Mat a(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = rng.normal();
  a *= 0.8 / ctrl::spectral_radius(a);
  Mat sw = Mat::Identity(3, 3) * 0.1;
  const auto s = ctrl::propagate_covariance(a, Mat::Identity(3, 3), sw,
                                            Mat::Zero(3, 3), 10, false);
  for (size_t i = 1; i < s.size(); ++i) {
    Eigen::SelfAdjointEigenSolver<Mat> es(s[i] - s[i - 1]);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12);
  }
}

TEST_CASE("covariance: Monte Carlo of the error dynamics matches within 5%") {
  Rng rng(6);
  Mat a(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) a(i, j) = rng.normal();
  a *= 0.85 / ctrl::spectral_radius(a);
  Vec w_std(4);
  w_std << 0.05, 0.02, 0.1, 0.01;
  const Mat sw = w_std.cwiseProduct(w_std).asDiagonal();
  const auto ana = ctrl::propagate_covariance(a, Mat::Identity(4, 4), sw,
                                              Mat::Zero(4, 4), 10, false);
  const auto mc = harness::monte_carlo_covariance(a, Mat::Identity(4, 4), w_std,
                                                  10, 100000, 99);
  for (int i = 1; i <= 10; ++i)
    CHECK((mc[i] - ana[i]).norm() <= 0.05 * ana[i].norm());
}

TEST_CASE("covariance: the transposed compatibility mode uses the literal form") {
  Mat a(2, 2);
  a << 0.9, 0.3, 0.0, 0.8;
  const Mat sw = Mat::Identity(2, 2);
  const auto def = ctrl::propagate_covariance(a, Mat::Identity(2, 2), sw,
                                              sw, 1, false);
  const auto lit = ctrl::propagate_covariance(a, Mat::Identity(2, 2), sw,
                                              sw, 1, true);
  const Mat want_def = a * sw * a.transpose() + sw;
  const Mat want_lit = a.transpose() * sw * a + sw;
  CHECK((def[1] - want_def).norm() < 1e-14);
  CHECK((lit[1] - want_lit).norm() < 1e-14);
}

TEST_CASE("tighten: Chebyshev-Cantelli margins") {
  CHECK(ctrl::cc_margin(4.0, 0.5) == doctest::Approx(2.0));
  CHECK(ctrl::cc_margin(1.0, 0.2) == doctest::Approx(2.0));
  CHECK(ctrl::cc_margin(1.0, 1.0 - 1e-12) == doctest::Approx(0.0).epsilon(1e-5));
  CHECK_THROWS_AS(ctrl::cc_margin(1.0, 0.0), Error);
  // at eps = 0.5 the margin is exactly sqrt(h' Sigma h)
  Mat rows(1, 2);
  rows << 1.0, 0.5;
  Mat sigma(2, 2);
  sigma << 0.3, 0.1, 0.1, 0.2;
  const double hsh = rows.row(0) * sigma * rows.row(0).transpose();
  CHECK(ctrl::tighten_margins(rows, sigma, 0.5)[0] ==
        doctest::Approx(std::sqrt(hsh)).epsilon(1e-12));
}

TEST_CASE("tighten: an over-tightened pair is reported, not clipped") {
  Vec bounds(2);
  bounds << 1.0, 1.0;
  Vec margins(2);
  margins << 1.2, 1.2;
  bool threw = false;
  try {
    ctrl::check_tightened_pairs(bounds, margins);
  } catch (const Error& e) {
    threw = e.code() == ErrorCode::OverTightened;
  }
  CHECK(threw);
}

TEST_CASE("ksmpc: the origin with zero preview is a fixed point") {
  auto model = synthetic_model(31);
  ctrl::SmpcOptions opt;
  opt.horizon = 10;
  const auto ric = riccati_for(model, opt);
  ctrl::KsmpcController ctl(model, ric, opt, model.sigma_w, std::nullopt);
  std::vector<track::ExternalSignal> phi(10, {0.0, 0.0, 0.0});
  auto [delta, diag] = ctl.step_lifted(Vec::Zero(kNumStates), phi);
  CHECK(diag.status == qp::Status::Optimal);
  CHECK(std::abs(delta) < 1e-7);
  CHECK(std::abs(diag.v0) < 1e-7);
  CHECK(std::abs(diag.sigma_lo) < 1e-7);
  CHECK(std::abs(diag.sigma_hi) < 1e-7);
  CHECK(std::abs(diag.objective) < 1e-9);
}

TEST_CASE("ksmpc: with wide constraints the QP reproduces the batch LQ solution") {
  auto model = synthetic_model(33, 1e-8);
  ctrl::SmpcOptions opt;
  opt.horizon = 8;
  opt.apply_defaults();
  // effectively unconstrained
  opt.constraints.bounds = Vec::Constant(5, 1e6);
  opt.u_bound = 1e6;
  opt.u_soft = 1e6;
  const auto ric = riccati_for(model, opt);
  ctrl::KsmpcController ctl(model, ric, opt, model.sigma_w, std::nullopt);

  Rng rng(8);
  Vec z(kNumStates);
  for (int i = 0; i < kNumStates; ++i) z[i] = 0.3 * rng.normal();
  std::vector<track::ExternalSignal> phi;
  for (int i = 0; i < opt.horizon; ++i) phi.push_back({0.0, 0.002 * i, 1e-5});

  auto [delta, diag] = ctl.step_lifted(z, phi);
  REQUIRE(diag.status == qp::Status::Optimal);

  // independent batch oracle: backward affine Riccati recursion on
  // s+ = A_cl s + B v + d with stage cost s'Qs + r v^2, terminal P
  const int np = opt.horizon;
  const Mat q = model.c.transpose() * opt.q_diag.asDiagonal() * model.c;
  std::vector<Vec> d(np);
  for (int i = 0; i < np; ++i) {
    Vec p3(3);
    p3 << phi[i].vx, phi[i].c2, phi[i].c3;
    d[i] = model.b_phi * p3;
  }
  Mat pk = ric.p;
  Vec qk = Vec::Zero(kNumStates);
  std::vector<Mat> ks(np);
  std::vector<Vec> kv(np);
  for (int i = np - 1; i >= 0; --i) {
    const Mat bt_p = model.b.transpose() * pk;
    const double denom = (opt.q_vv + (bt_p * model.b)(0, 0));
    ks[i] = (bt_p * ric.a_cl) / denom;                       // 1 x n
    kv[i] = (bt_p * d[i] + model.b.transpose() * qk) / denom;  // 1
    const Mat acl_i = ric.a_cl - model.b * ks[i];
    const Vec affine = d[i] - model.b * kv[i];
    qk = acl_i.transpose() * (pk * affine + qk);
    pk = q + ks[i].transpose() * opt.q_vv * ks[i] + acl_i.transpose() * pk * acl_i;
    pk = 0.5 * (pk + pk.transpose()).eval();
  }
  const double v0_oracle = (-ks[0] * z - kv[0])(0);
  CHECK(diag.v0 == doctest::Approx(v0_oracle).epsilon(1e-4));
}

TEST_CASE("ksmpc: boundary start moves strictly inward of the raw bound") {
  auto model = synthetic_model(35, 1e-5);
  ctrl::SmpcOptions opt;
  opt.horizon = 12;
  opt.apply_defaults();
  const auto ric = riccati_for(model, opt);
  ctrl::KsmpcController ctl(model, ric, opt, model.sigma_w, std::nullopt);

  const auto& margins = ctl.margins();
  // start exactly on the tightened e_y bound at step 0
  Vec z = Vec::Zero(kNumStates);
  z[0] = opt.constraints.bounds[0] - margins[0][0];
  std::vector<track::ExternalSignal> phi(12, {0.0, 0.0, 0.0});
  auto [delta, diag] = ctl.step_lifted(z, phi);
  (void)delta;
  REQUIRE(diag.status == qp::Status::Optimal);
  CHECK(diag.feasible);
  // predicted first step satisfies the stage-1 tightened constraint, which
  // sits strictly inside the raw bound
  const Vec s1 = ric.a_cl * z + model.b * Vec::Constant(1, diag.v0);
  CHECK(s1[0] <= opt.constraints.bounds[0] - margins[1][0] + 1e-7);
  CHECK(margins[1][0] > 0.0);
}

TEST_CASE("lsmpc: the a22 entry of the continuous model") {
  plant::VehicleParams p;
  p.finalize();
  const auto lin = ctrl::lateral_linear_model(p, 20.0, 10.0);
  CHECK(lin.a(1, 1) == doctest::Approx(-3.2e5 / 3.0e4).epsilon(1e-12));
}

TEST_CASE("lsmpc: ZOH discretization of the stable model stays inside the unit circle") {
  plant::VehicleParams p;
  p.finalize();
  const auto lin = ctrl::lateral_linear_model(p, 15.0, 10.0);
  Mat ad, bd;
  ctrl::zoh_discretize(lin.a, lin.b, 0.01, &ad, &bd);
  // the error coordinates carry two kinematic integrators (e_yL and the
  // heading direction); the two vehicle modes must be strictly damped
  const auto eig = ad.eigenvalues();
  std::vector<double> mags;
  for (int i = 0; i < eig.size(); ++i) mags.push_back(std::abs(eig[i]));
  std::sort(mags.begin(), mags.end());
  CHECK(mags[3] <= 1.0 + 1e-12);
  CHECK(mags[2] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(mags[1] < 1.0);
  CHECK(mags[0] < 1.0);
}

TEST_CASE("lsmpc: zero state on a straight road commands zero steering") {
  plant::VehicleParams p;
  p.finalize();
  ctrl::LsmpcOptions opt;
  ctrl::LsmpcController ctl(p, opt);
  plant::VehicleState x;
  std::vector<track::ExternalSignal> phi(opt.horizon, {15.0, 0.0, 0.0});
  auto [delta, diag] = ctl.step(x, phi);
  CHECK(diag.status == qp::Status::Optimal);
  CHECK(std::abs(delta) < 1e-7);
}

TEST_CASE("klq: zero state gives zero steering and shares the K-SMPC weights") {
  auto model = synthetic_model(37);
  ctrl::SmpcOptions opt;
  const auto ric = riccati_for(model, opt);
  ctrl::KlqController klq(model, ric, deg2rad(30.0));
  plant::VehicleState x;
  CHECK(klq.step(x) == doctest::Approx(0.0));
  // the gain is the same Riccati object the K-SMPC uses (same Q, R)
  ctrl::KsmpcController ksmpc(model, ric, opt, model.sigma_w, std::nullopt);
  CHECK((ksmpc.riccati().k - ric.k).norm() == 0.0);
}

TEST_CASE("chance validation: empirical violation under the epsilon budget") {
  auto model = synthetic_model(39, 1e-4);
  ctrl::SmpcOptions opt;
  opt.horizon = 10;
  opt.apply_defaults();
  const auto ric = riccati_for(model, opt);
  Mat rows;
  Vec bounds;
  opt.constraints.expand(model.c, &rows, &bounds);
  const Vec w_std = model.sigma_w.diagonal().cwiseSqrt();
  const auto table = harness::validate_chance(ric.a_cl, model.g, w_std, rows,
                                              0.1, 10, 20000, 5);
  for (const auto& r : table) CHECK(r.empirical <= r.epsilon);
  // Gaussian tails are far below the Chebyshev-Cantelli budget
  double worst = 0.0;
  for (const auto& r : table) worst = std::max(worst, r.empirical);
  CHECK(worst <= 0.02);
}
