#include "core/reduction.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "core/riccati.hpp"

namespace ksmpc::ctrl {

namespace {

// PSD square root via eigendecomposition, clamping small negatives
Mat psd_sqrt(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()));
  const Vec vals = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * vals.asDiagonal();
}

}  // namespace

Reduction balanced_truncation(const Mat& a, const Mat& b, const Mat& c, int order) {
  const int n = static_cast<int>(a.rows());
  require(order >= 1 && order <= n, ErrorCode::Config,
          "reduction: order out of range");
  require(spectral_radius(a) < 1.0, ErrorCode::NotStabilizable,
          "reduction: A must be strictly stable");

  const Mat wc = solve_dlyap(a, b * b.transpose());
  const Mat wo = solve_dlyap(a.transpose(), c.transpose() * c);
  const Mat s = psd_sqrt(wc);  // Wc = S S'
  const Mat rfac = psd_sqrt(wo);

  Eigen::JacobiSVD<Mat> svd(rfac.transpose() * s,
                            Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec sv = svd.singularValues();
  Reduction red;
  red.hankel = sv;
  const double floor = std::max(1e-12, 1e-10 * sv[0]);
  int usable = 0;
  while (usable < sv.size() && sv[usable] > floor) ++usable;
  require(order <= usable, ErrorCode::Config,
          "reduction: requested order exceeds numerical rank " +
              std::to_string(usable));

  const Vec inv_sqrt = sv.head(order).cwiseSqrt().cwiseInverse();
  const Mat u = svd.matrixU().leftCols(order);
  const Mat v = svd.matrixV().leftCols(order);
  red.t = inv_sqrt.asDiagonal() * u.transpose() * rfac.transpose();
  red.t_inv = s * v * inv_sqrt.asDiagonal();
  red.tail_bound = 2.0 * sv.tail(sv.size() - order).sum();
  return red;
}

}  // namespace ksmpc::ctrl
