#pragma once

#include <vector>

#include "core/common.hpp"
#include "core/rng.hpp"

namespace ksmpc::harness {

struct ChanceRow {
  int step;
  int row;
  double epsilon;
  double margin;
  double empirical;  // P[H e > margin] from the Monte Carlo
};

// open-loop Monte Carlo of the error dynamics e+ = A_cl e + G w with
// Gaussian w (diagonal std), e_0 = 0; reports empirical one-sided
// violation rates against the Chebyshev-Cantelli margins
std::vector<ChanceRow> validate_chance(const Mat& a_cl, const Mat& g,
                                       const Vec& w_std, const Mat& rows,
                                       double epsilon, int n_steps, int trials,
                                       uint64_t seed);

// per-step sample covariance of the same recursion (for the propagation check)
std::vector<Mat> monte_carlo_covariance(const Mat& a_cl, const Mat& g,
                                        const Vec& w_std, int n_steps, int trials,
                                        uint64_t seed);

}  // namespace ksmpc::harness
