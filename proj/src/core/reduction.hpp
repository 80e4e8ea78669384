#pragma once

#include "core/common.hpp"

namespace ksmpc::ctrl {

// Balanced truncation of (A, B, C) to `order` states.
// t maps full -> reduced (order x n), t_inv reduced -> full (n x order).
struct Reduction {
  Mat t;
  Mat t_inv;
  Vec hankel;            // all Hankel singular values, descending
  double tail_bound = 0; // 2 * sum of truncated Hankel values
};

Reduction balanced_truncation(const Mat& a, const Mat& b, const Mat& c, int order);

}  // namespace ksmpc::ctrl
