#include "core/riccati.hpp"

#include <Eigen/Eigenvalues>

namespace ksmpc::ctrl {

double spectral_radius(const Mat& a) {
  return a.eigenvalues().cwiseAbs().maxCoeff();
}

RiccatiResult solve_dare(const Mat& a, const Mat& b, const Mat& q, const Mat& r) {
  const int n = static_cast<int>(a.rows());
  require(a.cols() == n && b.rows() == n && q.rows() == n && q.cols() == n,
          ErrorCode::DimensionMismatch, "dare: A/B/Q shapes");
  require(r.rows() == b.cols() && r.cols() == b.cols(),
          ErrorCode::DimensionMismatch, "dare: R shape");

  // structure-preserving doubling on (A_k, G_k, H_k)
  Mat ak = a;
  Mat gk = b * r.ldlt().solve(b.transpose());
  Mat hk = 0.5 * (q + q.transpose());
  const Mat eye = Mat::Identity(n, n);
  bool converged = false;
  for (int it = 0; it < 120; ++it) {
    const Eigen::PartialPivLU<Mat> lu(eye + gk * hk);
    const Mat m1 = lu.solve(ak);        // (I + G H)^-1 A
    const Mat wg = lu.solve(gk);        // (I + G H)^-1 G
    const Mat a_next = ak * m1;
    const Mat g_next = gk + ak * wg * ak.transpose();
    const Mat h_next = hk + ak.transpose() * hk * m1;
    const double dh = (h_next - hk).norm();
    ak = a_next;
    gk = 0.5 * (g_next + g_next.transpose());
    hk = 0.5 * (h_next + h_next.transpose());
    if (!hk.allFinite())
      fail(ErrorCode::NotStabilizable, "dare: doubling iteration diverged");
    if (dh <= 1e-15 * std::max(1.0, hk.norm())) {
      converged = true;
      break;
    }
  }
  require(converged, ErrorCode::NotStabilizable, "dare: no convergence");

  RiccatiResult res;
  res.p = hk;
  const Mat btp = b.transpose() * res.p;
  const Mat rr = r + btp * b;
  res.k = rr.ldlt().solve(btp * a);
  res.a_cl = a - b * res.k;

  const Mat lhs = a.transpose() * res.p * a -
                  a.transpose() * res.p * b * rr.ldlt().solve(btp * a) + q;
  res.residual = (lhs - res.p).norm() / std::max(1.0, res.p.norm());
  res.spectral_radius = spectral_radius(res.a_cl);
  require(res.residual <= 1e-10, ErrorCode::NotStabilizable,
          "dare: residual too large (" + std::to_string(res.residual) + ")");
  require(res.spectral_radius < 1.0, ErrorCode::NotStabilizable,
          "dare: closed loop not strictly stable");
  return res;
}

Mat solve_dlyap(const Mat& a, const Mat& q) {
  require(spectral_radius(a) < 1.0, ErrorCode::NotStabilizable,
          "dlyap: A must be strictly stable");
  Mat ak = a;
  Mat x = 0.5 * (q + q.transpose());
  for (int it = 0; it < 100; ++it) {
    const Mat add = ak * x * ak.transpose();
    x += add;
    ak = (ak * ak).eval();
    if (add.norm() <= 1e-16 * std::max(1.0, x.norm())) break;
  }
  return 0.5 * (x + x.transpose());
}

}  // namespace ksmpc::ctrl
