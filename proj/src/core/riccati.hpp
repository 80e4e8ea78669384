#pragma once

#include "core/common.hpp"

namespace ksmpc::ctrl {

struct RiccatiResult {
  Mat p;     // DARE solution
  Mat k;     // m x n gain, u = -K z stabilizes
  Mat a_cl;  // A - B K
  double residual = 0.0;       // relative Riccati residual
  double spectral_radius = 0;  // of a_cl
};

// P = A'PA - A'PB (R + B'PB)^-1 B'PA + Q by structure-preserving doubling
RiccatiResult solve_dare(const Mat& a, const Mat& b, const Mat& q, const Mat& r);

// X = A X A' + Q (discrete Lyapunov), by doubling; requires rho(A) < 1
Mat solve_dlyap(const Mat& a, const Mat& q);

double spectral_radius(const Mat& a);

}  // namespace ksmpc::ctrl
