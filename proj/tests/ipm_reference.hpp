// Test-only reference QP solver: Mehrotra predictor-corrector interior point
// for min 1/2 x'Px + q'x s.t. Ax <= b. Independent of the ADMM path it checks.
#pragma once

#include <Eigen/Dense>

#include "core/common.hpp"

namespace ipm {

using ksmpc::Mat;
using ksmpc::Vec;

struct Result {
  bool ok = false;
  Vec x;
  Vec lambda;
  double objective = 0.0;
  int iterations = 0;
};

inline Result solve(const Mat& p, const Vec& q, const Mat& a, const Vec& b,
                    int max_iter = 200, double tol = 1e-9) {
  const int n = static_cast<int>(q.size());
  const int m = static_cast<int>(b.size());
  Result res;
  if (m == 0) {
    Eigen::LDLT<Mat> ldlt(p + 1e-12 * Mat::Identity(n, n));
    res.x = ldlt.solve(-q);
    res.ok = true;
    res.objective = 0.5 * res.x.dot(p * res.x) + q.dot(res.x);
    return res;
  }

  Vec x = Vec::Zero(n);
  Vec s = (b - a * x).cwiseMax(1.0);
  Vec lam = Vec::Ones(m);

  for (int it = 0; it < max_iter; ++it) {
    const Vec rd = p * x + q + a.transpose() * lam;
    const Vec rp = a * x + s - b;
    const double mu = s.dot(lam) / m;
    const double scale = 1.0 + std::max({q.cwiseAbs().maxCoeff(),
                                         b.cwiseAbs().maxCoeff(), 1.0});
    if (rd.cwiseAbs().maxCoeff() < tol * scale &&
        rp.cwiseAbs().maxCoeff() < tol * scale && mu < tol) {
      res.ok = true;
      break;
    }

    const Vec sl_inv = lam.cwiseQuotient(s);  // Lambda S^-1 diagonal
    Mat kkt = p + 1e-13 * Mat::Identity(n, n);
    kkt.noalias() += a.transpose() * sl_inv.asDiagonal() * a;
    Eigen::LDLT<Mat> ldlt(kkt);

    auto newton = [&](const Vec& rc) {
      // returns (dx, dlam, ds) for residual rc of the centrality equation
      const Vec tmp = (-rc).cwiseQuotient(s) + sl_inv.cwiseProduct(rp);
      const Vec rhs = -rd - a.transpose() * tmp;
      const Vec dx = ldlt.solve(rhs);
      const Vec ds = -rp - a * dx;
      const Vec dlam = (-rc - lam.cwiseProduct(ds)).cwiseQuotient(s);
      return std::make_tuple(dx, dlam, ds);
    };
    auto step_len = [&](const Vec& v, const Vec& dv) {
      double alpha = 1.0;
      for (int i = 0; i < v.size(); ++i)
        if (dv[i] < 0) alpha = std::min(alpha, -v[i] / dv[i]);
      return alpha;
    };

    // affine predictor
    const Vec rc_aff = lam.cwiseProduct(s);
    auto [dx_a, dlam_a, ds_a] = newton(rc_aff);
    const double a_p = step_len(s, ds_a), a_d = step_len(lam, dlam_a);
    const double mu_aff =
        (s + a_p * ds_a).dot(lam + a_d * dlam_a) / m;
    const double sigma = std::pow(mu_aff / std::max(mu, 1e-300), 3.0);

    // corrector
    const Vec rc = lam.cwiseProduct(s) + dlam_a.cwiseProduct(ds_a) -
                   Vec::Constant(m, sigma * mu);
    auto [dx, dlam, ds] = newton(rc);
    const double alpha =
        0.99 * std::min(step_len(s, ds), step_len(lam, dlam));
    x += alpha * dx;
    s += alpha * ds;
    lam += alpha * dlam;
    res.iterations = it + 1;
  }
  res.x = x;
  res.lambda = lam;
  res.objective = 0.5 * x.dot(p * x) + q.dot(x);
  return res;
}

}  // namespace ipm
