#include "core/polytope.hpp"

#include <algorithm>
#include <cmath>

namespace ksmpc::poly {

namespace {

constexpr double kZeroRow = 1e-12;

// drops vacuous rows and exact/parallel duplicates (keeps the tighter bound)
HPolytope cheap_clean(const HPolytope& p) {
  HPolytope q = normalize(p);
  std::vector<int> keep;
  for (int i = 0; i < q.rows(); ++i) {
    if (q.h_mat.row(i).cwiseAbs().maxCoeff() < kZeroRow) {
      require(q.h_vec[i] > -1e-9, ErrorCode::EmptyPolytope,
              "polytope: vacuous row with negative bound");
      continue;
    }
    bool dup = false;
    for (int j : keep) {
      if ((q.h_mat.row(i) - q.h_mat.row(j)).cwiseAbs().maxCoeff() < 1e-9) {
        if (q.h_vec[i] < q.h_vec[j]) q.h_vec[j] = q.h_vec[i];
        dup = true;
        break;
      }
    }
    if (!dup) keep.push_back(i);
  }
  HPolytope out;
  out.h_mat.resize(keep.size(), q.dim());
  out.h_vec.resize(keep.size());
  for (size_t r = 0; r < keep.size(); ++r) {
    out.h_mat.row(r) = q.h_mat.row(keep[r]);
    out.h_vec[r] = q.h_vec[keep[r]];
  }
  return out;
}

}  // namespace

bool HPolytope::contains(const Vec& x, double tol) const {
  return ((h_mat * x - h_vec).array() <= tol).all();
}

HPolytope HPolytope::box(const Vec& lower, const Vec& upper) {
  const int d = static_cast<int>(lower.size());
  HPolytope p;
  p.h_mat.setZero(2 * d, d);
  p.h_vec.resize(2 * d);
  for (int i = 0; i < d; ++i) {
    p.h_mat(2 * i, i) = 1.0;
    p.h_vec[2 * i] = upper[i];
    p.h_mat(2 * i + 1, i) = -1.0;
    p.h_vec[2 * i + 1] = -lower[i];
  }
  return p;
}

Box Box::symmetric(const Vec& halfwidth) {
  return Box{-halfwidth, halfwidth};
}

double Box::support(const Vec& d, const Mat& g) const {
  const Vec dg = g.transpose() * d;
  double s = 0.0;
  for (int k = 0; k < dg.size(); ++k)
    s += dg[k] > 0 ? dg[k] * upper[k] : dg[k] * lower[k];
  return s;
}

qp::Settings lp_settings() {
  // moderate ADMM tolerance; the active-set polish step restores precision
  qp::Settings s;
  s.eps_abs = 1e-6;
  s.eps_rel = 1e-6;
  s.max_iter = 50000;
  s.polish = true;
  return s;
}

HPolytope normalize(const HPolytope& p) {
  HPolytope q = p;
  for (int i = 0; i < q.rows(); ++i) {
    const double nrm = q.h_mat.row(i).norm();
    if (nrm > kZeroRow) {
      q.h_mat.row(i) /= nrm;
      q.h_vec[i] /= nrm;
    }
  }
  return q;
}

HPolytope intersect(const HPolytope& a, const HPolytope& b) {
  require(a.dim() == b.dim(), ErrorCode::DimensionMismatch,
          "polytope: intersect dims");
  HPolytope out;
  out.h_mat.resize(a.rows() + b.rows(), a.dim());
  out.h_mat << a.h_mat, b.h_mat;
  out.h_vec.resize(a.rows() + b.rows());
  out.h_vec << a.h_vec, b.h_vec;
  return cheap_clean(out);
}

std::optional<double> support(const HPolytope& p, const Vec& d) {
  auto settings = lp_settings();
  auto res = qp::solve_lp(-d, p.h_mat, p.h_vec, settings);
  if (res.status == qp::Status::MaxIter) {
    settings.max_iter *= 10;
    res = qp::solve_lp(-d, p.h_mat, p.h_vec, settings);
  }
  if (res.status == qp::Status::Optimal) return d.dot(res.x);
  if (res.status == qp::Status::DualInfeasible) return std::nullopt;  // unbounded
  if (res.status == qp::Status::PrimalInfeasible)
    fail(ErrorCode::EmptyPolytope, "polytope: support of empty set");
  fail(ErrorCode::Numeric, "polytope: support LP did not converge");
}

CenterResult chebyshev_center(const HPolytope& p) {
  const HPolytope q = normalize(p);
  const int d = q.dim();
  // variables (x, r): max r  s.t.  H x + r <= h,  r <= 1e6
  Mat a(q.rows() + 1, d + 1);
  a.setZero();
  a.topLeftCorner(q.rows(), d) = q.h_mat;
  a.col(d).head(q.rows()).setOnes();
  a(q.rows(), d) = 1.0;
  Vec b(q.rows() + 1);
  b.head(q.rows()) = q.h_vec;
  b[q.rows()] = 1e6;
  Vec c = Vec::Zero(d + 1);
  c[d] = -1.0;
  auto res = qp::solve_lp(c, a, b, lp_settings());
  if (res.status == qp::Status::PrimalInfeasible) return {Vec::Zero(d), -1.0};
  if (res.status != qp::Status::Optimal) {
    // an inconclusive LP is not an emptiness certificate; report a zero-radius
    // center so callers treat the set as (possibly) nonempty
    return {res.x.size() ? Vec(res.x.head(d)) : Vec::Zero(d), 0.0};
  }
  return {res.x.head(d), res.x[d]};
}

bool is_empty(const HPolytope& p) { return chebyshev_center(p).radius < -1e-9; }

HPolytope pontryagin_diff_box(const HPolytope& p, const Mat& g, const Box& w) {
  require(g.rows() == p.dim() && g.cols() == w.dim(),
          ErrorCode::DimensionMismatch, "polytope: erode dims");
  HPolytope q = p;
  for (int i = 0; i < q.rows(); ++i)
    q.h_vec[i] -= w.support(q.h_mat.row(i).transpose(), g);
  return q;
}

HPolytope reduce(const HPolytope& p, double tol) {
  HPolytope q = cheap_clean(p);

  // cheap pass: rows provably redundant against the bounding box need no LP
  if (q.rows() > 2 * q.dim()) {
    const int d = q.dim();
    Vec lo(d), hi(d);
    bool boxed = true;
    for (int k = 0; k < d && boxed; ++k) {
      Vec dir = Vec::Zero(d);
      dir[k] = 1.0;
      const auto shi = support(q, dir);
      const auto slo = support(q, -dir);
      if (!shi || !slo) {
        boxed = false;
        break;
      }
      hi[k] = *shi;
      lo[k] = -*slo;
    }
    if (boxed) {
      std::vector<int> survivors;
      for (int i = 0; i < q.rows(); ++i) {
        double ub = 0.0;
        for (int k = 0; k < d; ++k)
          ub += q.h_mat(i, k) > 0 ? q.h_mat(i, k) * hi[k] : q.h_mat(i, k) * lo[k];
        if (ub > q.h_vec[i] - 1e-9) survivors.push_back(i);
      }
      if (static_cast<int>(survivors.size()) < q.rows()) {
        HPolytope pruned;
        pruned.h_mat.resize(survivors.size(), d);
        pruned.h_vec.resize(survivors.size());
        for (size_t r = 0; r < survivors.size(); ++r) {
          pruned.h_mat.row(r) = q.h_mat.row(survivors[r]);
          pruned.h_vec[r] = q.h_vec[survivors[r]];
        }
        q = pruned;
      }
    }
  }

  require(!is_empty(q), ErrorCode::EmptyPolytope, "polytope: reduce of empty set");
  std::vector<bool> keep(q.rows(), true);
  const auto settings = lp_settings();
  for (int i = 0; i < q.rows(); ++i) {
    int others = 0;
    for (int j = 0; j < q.rows(); ++j) others += (j != i && keep[j]);
    if (others == 0) continue;
    Mat a(others, q.dim());
    Vec b(others);
    int r = 0;
    for (int j = 0; j < q.rows(); ++j) {
      if (j == i || !keep[j]) continue;
      a.row(r) = q.h_mat.row(j);
      b[r] = q.h_vec[j];
      ++r;
    }
    auto res = qp::solve_lp((-q.h_mat.row(i)).transpose(), a, b, settings);
    if (res.status == qp::Status::Optimal &&
        q.h_mat.row(i).dot(res.x) <= q.h_vec[i] + tol)
      keep[i] = false;
    // unbounded or non-converged LP: keep the row
  }
  int kept = 0;
  for (bool k : keep) kept += k;
  HPolytope out;
  out.h_mat.resize(kept, q.dim());
  out.h_vec.resize(kept);
  int r = 0;
  for (int i = 0; i < q.rows(); ++i) {
    if (!keep[i]) continue;
    out.h_mat.row(r) = q.h_mat.row(i);
    out.h_vec[r] = q.h_vec[i];
    ++r;
  }
  return out;
}

HPolytope pre_set(const HPolytope& target, const Mat& a, const Vec& b,
                  double u_lo, double u_hi, const Box& w, const Mat& g) {
  const int d = target.dim();
  require(a.rows() == d && a.cols() == d && b.size() == d,
          ErrorCode::DimensionMismatch, "polytope: pre_set dims");
  require(u_lo <= u_hi, ErrorCode::Config, "polytope: empty input interval");

  HPolytope eroded = (w.dim() > 0) ? pontryagin_diff_box(target, g, w) : target;
  eroded = normalize(eroded);

  // rows over (s, v): [H a, H b] <= h',  plus the two input bound rows
  const int p = eroded.rows();
  Mat hs(p + 2, d);
  Vec hv(p + 2), hh(p + 2);
  hs.topRows(p) = eroded.h_mat * a;
  hv.head(p) = eroded.h_mat * b;
  hh.head(p) = eroded.h_vec;
  hs.row(p).setZero();
  hv[p] = 1.0;
  hh[p] = u_hi;
  hs.row(p + 1).setZero();
  hv[p + 1] = -1.0;
  hh[p + 1] = -u_lo;

  // Fourier-Motzkin elimination of the scalar v
  std::vector<int> pos, neg, zero;
  for (int i = 0; i < p + 2; ++i) {
    const double scale = std::max(1.0, hs.row(i).cwiseAbs().maxCoeff());
    if (hv[i] > 1e-10 * scale) pos.push_back(i);
    else if (hv[i] < -1e-10 * scale) neg.push_back(i);
    else zero.push_back(i);
  }
  const int n_out = static_cast<int>(zero.size() + pos.size() * neg.size());
  HPolytope out;
  out.h_mat.resize(n_out, d);
  out.h_vec.resize(n_out);
  int r = 0;
  for (int i : zero) {
    out.h_mat.row(r) = hs.row(i);
    out.h_vec[r] = hh[i];
    ++r;
  }
  for (int i : pos)
    for (int j : neg) {
      out.h_mat.row(r) = hv[i] * hs.row(j) - hv[j] * hs.row(i);
      out.h_vec[r] = hv[i] * hh[j] - hv[j] * hh[i];
      ++r;
    }
  return reduce(out);
}

HPolytope t_step_set(const std::vector<HPolytope>& state_sets,
                     const HPolytope& terminal, const Mat& a, const Vec& b,
                     double u_lo, double u_hi) {
  require(!state_sets.empty(), ErrorCode::Config, "polytope: no state sets");
  Box none{Vec(), Vec()};
  Mat g0(terminal.dim(), 0);
  HPolytope x = terminal;
  for (int i = static_cast<int>(state_sets.size()) - 1; i >= 0; --i) {
    HPolytope pre = pre_set(x, a, b, u_lo, u_hi, none, g0);
    x = reduce(intersect(state_sets[i], pre));
  }
  return x;
}

InvariantResult robust_control_invariant_result(const HPolytope& c_t,
                                                const Mat& a, const Vec& b,
                                                double u_lo, double u_hi,
                                                const Box& w, const Mat& g,
                                                int max_iter, double tol) {
  require(!is_empty(c_t), ErrorCode::EmptyPolytope,
          "polytope: invariant iteration from empty set");
  InvariantResult res;
  res.set = reduce(c_t);
  for (int it = 1; it <= max_iter; ++it) {
    HPolytope pre = pre_set(res.set, a, b, u_lo, u_hi, w, g);
    HPolytope next = reduce(intersect(res.set, pre));
    res.iterations = it;
    if (inclusion(res.set, next, tol)) {  // next subseteq current always holds
      res.set = next;
      res.converged = true;
      return res;
    }
    res.set = next;
  }
  return res;
}

HPolytope robust_control_invariant(const HPolytope& c_t, const Mat& a,
                                   const Vec& b, double u_lo, double u_hi,
                                   const Box& w, const Mat& g, int max_iter,
                                   double tol) {
  auto res = robust_control_invariant_result(c_t, a, b, u_lo, u_hi, w, g,
                                             max_iter, tol);
  require(res.converged, ErrorCode::NoConvergence,
          "polytope: invariant set did not converge in " +
              std::to_string(max_iter) + " iterations");
  return res.set;
}

bool inclusion(const HPolytope& p, const HPolytope& q, double tol) {
  const HPolytope qn = normalize(q);
  for (int i = 0; i < qn.rows(); ++i) {
    auto s = support(p, qn.h_mat.row(i).transpose());
    if (!s) return false;  // p unbounded in this direction
    if (*s > qn.h_vec[i] + tol) return false;
  }
  return true;
}

std::vector<Vec> sample(const HPolytope& p, int count, Rng& rng, int burn) {
  auto cc = chebyshev_center(p);
  require(cc.radius > 0, ErrorCode::EmptyPolytope,
          "polytope: sampling needs a full-dimensional set");
  const HPolytope q = normalize(p);
  const int d = q.dim();
  Vec x = cc.center;
  std::vector<Vec> out;
  out.reserve(count);
  const int total = count * burn;
  for (int k = 0; k < total; ++k) {
    Vec dir(d);
    for (int i = 0; i < d; ++i) dir[i] = rng.normal();
    dir.normalize();
    // line search bounds: h (x + t dir) <= h_vec
    double t_lo = -1e12, t_hi = 1e12;
    const Vec hd = q.h_mat * dir;
    const Vec slack = q.h_vec - q.h_mat * x;
    for (int i = 0; i < q.rows(); ++i) {
      if (hd[i] > 1e-12) t_hi = std::min(t_hi, slack[i] / hd[i]);
      else if (hd[i] < -1e-12) t_lo = std::max(t_lo, slack[i] / hd[i]);
    }
    if (t_hi < t_lo) continue;
    x += rng.uniform(t_lo, t_hi) * dir;
    if ((k + 1) % burn == 0) out.push_back(x);
  }
  while (static_cast<int>(out.size()) < count) out.push_back(x);
  return out;
}

std::vector<Eigen::Vector2d> project_2d(const HPolytope& p, int i, int j) {
  require(i != j && i < p.dim() && j < p.dim(), ErrorCode::Config,
          "polytope: bad projection coordinates");
  // permute (i, j) to the front, then eliminate the remaining coordinates
  const int d = p.dim();
  std::vector<int> order = {i, j};
  for (int k = 0; k < d; ++k)
    if (k != i && k != j) order.push_back(k);
  Mat perm = Mat::Zero(d, d);
  for (int k = 0; k < d; ++k) perm(k, order[k]) = 1.0;
  HPolytope cur{p.h_mat * perm.transpose(), p.h_vec};

  for (int dim_now = d; dim_now > 2; --dim_now) {
    // Fourier-Motzkin on the last coordinate
    const int last = dim_now - 1;
    std::vector<int> pos, neg, zero;
    for (int r = 0; r < cur.rows(); ++r) {
      const double c = cur.h_mat(r, last);
      if (c > 1e-10) pos.push_back(r);
      else if (c < -1e-10) neg.push_back(r);
      else zero.push_back(r);
    }
    HPolytope next;
    next.h_mat.resize(zero.size() + pos.size() * neg.size(), last);
    next.h_vec.resize(next.h_mat.rows());
    int rr = 0;
    for (int r : zero) {
      next.h_mat.row(rr) = cur.h_mat.row(r).head(last);
      next.h_vec[rr] = cur.h_vec[r];
      ++rr;
    }
    for (int a_r : pos)
      for (int b_r : neg) {
        const double ca = cur.h_mat(a_r, last), cb = cur.h_mat(b_r, last);
        next.h_mat.row(rr) =
            ca * cur.h_mat.row(b_r).head(last) - cb * cur.h_mat.row(a_r).head(last);
        next.h_vec[rr] = ca * cur.h_vec[b_r] - cb * cur.h_vec[a_r];
        ++rr;
      }
    cur = reduce(next);
  }

  // 2-D vertex enumeration: pairwise intersections, feasibility filter
  cur = normalize(cur);
  std::vector<Eigen::Vector2d> verts;
  for (int a_r = 0; a_r < cur.rows(); ++a_r)
    for (int b_r = a_r + 1; b_r < cur.rows(); ++b_r) {
      Eigen::Matrix2d m;
      m << cur.h_mat(a_r, 0), cur.h_mat(a_r, 1), cur.h_mat(b_r, 0), cur.h_mat(b_r, 1);
      if (std::abs(m.determinant()) < 1e-10) continue;
      Eigen::Vector2d v = m.inverse() * Eigen::Vector2d(cur.h_vec[a_r], cur.h_vec[b_r]);
      if (((cur.h_mat * v - cur.h_vec).array() <= 1e-7).all()) {
        bool dup = false;
        for (const auto& w : verts)
          if ((w - v).norm() < 1e-9) { dup = true; break; }
        if (!dup) verts.push_back(v);
      }
    }
  if (verts.size() > 2) {
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (const auto& v : verts) c += v;
    c /= static_cast<double>(verts.size());
    std::sort(verts.begin(), verts.end(),
              [&](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
                return std::atan2(a.y() - c.y(), a.x() - c.x()) <
                       std::atan2(b.y() - c.y(), b.x() - c.x());
              });
  }
  return verts;
}

}  // namespace ksmpc::poly
