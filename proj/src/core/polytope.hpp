#pragma once

#include <optional>
#include <vector>

#include "core/qp.hpp"
#include "core/rng.hpp"

namespace ksmpc::poly {

// {x : h_mat x <= h_vec}
struct HPolytope {
  Mat h_mat;
  Vec h_vec;

  int dim() const { return static_cast<int>(h_mat.cols()); }
  int rows() const { return static_cast<int>(h_mat.rows()); }
  bool contains(const Vec& x, double tol = 1e-9) const;

  static HPolytope box(const Vec& lower, const Vec& upper);
};

struct Box {
  Vec lower;
  Vec upper;

  int dim() const { return static_cast<int>(lower.size()); }
  static Box symmetric(const Vec& halfwidth);
  // support function of {G w : w in box} in direction d
  double support(const Vec& d, const Mat& g) const;
};

qp::Settings lp_settings();

HPolytope normalize(const HPolytope& p);
HPolytope intersect(const HPolytope& a, const HPolytope& b);

// support value of p in direction d; nullopt when unbounded
std::optional<double> support(const HPolytope& p, const Vec& d);

// Chebyshev center; radius < 0 means empty
struct CenterResult {
  Vec center;
  double radius;
};
CenterResult chebyshev_center(const HPolytope& p);
bool is_empty(const HPolytope& p);

// P (+) eroded by the set {G w : w in box}; closed-form row-wise support
HPolytope pontryagin_diff_box(const HPolytope& p, const Mat& g, const Box& w);

// LP-based irredundancy pruning; throws EmptyPolytope when infeasible
HPolytope reduce(const HPolytope& p, double tol = 1e-8);

// {s : exists v in [u_lo,u_hi] with a s + b v in target (-) GW},
// scalar input eliminated by Fourier-Motzkin, then reduced
HPolytope pre_set(const HPolytope& target, const Mat& a, const Vec& b,
                  double u_lo, double u_hi, const Box& w, const Mat& g);

// backward recursion through per-step state sets to the terminal set
HPolytope t_step_set(const std::vector<HPolytope>& state_sets,
                     const HPolytope& terminal, const Mat& a, const Vec& b,
                     double u_lo, double u_hi);

struct InvariantResult {
  HPolytope set;
  int iterations = 0;
  bool converged = false;
};
// C^{i+1} = C^i  intersect  pre_set(C^i); fixed point by mutual-inclusion LPs.
// Throws NoConvergence after max_iter (result recoverable from the exception
// message is useless, so callers wanting the last iterate use the _result
// variant below).
InvariantResult robust_control_invariant_result(const HPolytope& c_t,
                                                const Mat& a, const Vec& b,
                                                double u_lo, double u_hi,
                                                const Box& w, const Mat& g,
                                                int max_iter, double tol);
HPolytope robust_control_invariant(const HPolytope& c_t, const Mat& a,
                                   const Vec& b, double u_lo, double u_hi,
                                   const Box& w, const Mat& g,
                                   int max_iter = 50, double tol = 1e-7);

// P subseteq Q up to slack tol on each row of Q
bool inclusion(const HPolytope& p, const HPolytope& q, double tol = 1e-7);

// uniform-ish interior samples via hit-and-run from the Chebyshev center
std::vector<Vec> sample(const HPolytope& p, int count, Rng& rng, int burn = 8);

// orthogonal projection onto coordinates (i, j) as an ordered vertex polygon
std::vector<Eigen::Vector2d> project_2d(const HPolytope& p, int i, int j);

}  // namespace ksmpc::poly
