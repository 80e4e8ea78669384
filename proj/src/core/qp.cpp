#include "core/qp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace ksmpc::qp {

namespace {

double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double col_inf_norm(const Mat& m, int j) {
  return m.rows() ? m.col(j).cwiseAbs().maxCoeff() : 0.0;
}

Vec clamp(const Vec& v, const Vec& lo, const Vec& hi) {
  return v.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

const char* status_name(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::PrimalInfeasible: return "primal_infeasible";
    case Status::DualInfeasible: return "dual_infeasible";
    case Status::MaxIter: return "max_iter";
  }
  return "?";
}

void Problem::check() const {
  const int n = num_vars();
  require(hessian.rows() == n && hessian.cols() == n, ErrorCode::DimensionMismatch,
          "qp: hessian must be n x n");
  if (ineq_mat.size() || ineq_vec.size())
    require(ineq_mat.cols() == n && ineq_mat.rows() == ineq_vec.size(),
            ErrorCode::DimensionMismatch, "qp: inequality block shape");
  if (eq_mat.size() || eq_vec.size())
    require(eq_mat.cols() == n && eq_mat.rows() == eq_vec.size(),
            ErrorCode::DimensionMismatch, "qp: equality block shape");
  if (lb.size()) require(lb.size() == n, ErrorCode::DimensionMismatch, "qp: lb size");
  if (ub.size()) require(ub.size() == n, ErrorCode::DimensionMismatch, "qp: ub size");
}

Solver::Solver(const Problem& p, const Settings& s) : st_(s) {
  p.check();
  build_stack(p);
  if (st_.scale) scale_problem();
  rho_vec_ = Vec::Constant(m_, st_.rho);
  for (int i = 0; i < m_; ++i)
    if (l_[i] == u_[i]) rho_vec_[i] = 1e3 * st_.rho;
  rho_inv_ = rho_vec_.cwiseInverse();
}

void Solver::build_stack(const Problem& p) {
  n_ = p.num_vars();
  n_ineq_ = static_cast<int>(p.ineq_vec.size());
  n_eq_ = static_cast<int>(p.eq_vec.size());
  std::vector<int> bound_vars;
  for (int j = 0; j < n_; ++j) {
    const bool has_lb = p.lb.size() && p.lb[j] > -kInf;
    const bool has_ub = p.ub.size() && p.ub[j] < kInf;
    if (has_lb || has_ub) bound_vars.push_back(j);
  }
  m_ = n_ineq_ + n_eq_ + static_cast<int>(bound_vars.size());

  p_orig_ = 0.5 * (p.hessian + p.hessian.transpose());
  if (p_orig_.cwiseAbs().maxCoeff() == 0.0) {
    lp_mode_ = true;  // fixed rho: adaptation oscillates on degenerate LP faces
    if (st_.lp_regularization > 0.0)
      p_orig_ += st_.lp_regularization * Mat::Identity(n_, n_);
  }
  q_orig_ = p.gradient;

  a_orig_.setZero(m_, n_);
  l_orig_.setConstant(m_, -kInf);
  u_orig_.setConstant(m_, kInf);
  if (n_ineq_) {
    a_orig_.topRows(n_ineq_) = p.ineq_mat;
    u_orig_.head(n_ineq_) = p.ineq_vec;
  }
  if (n_eq_) {
    a_orig_.middleRows(n_ineq_, n_eq_) = p.eq_mat;
    l_orig_.segment(n_ineq_, n_eq_) = p.eq_vec;
    u_orig_.segment(n_ineq_, n_eq_) = p.eq_vec;
  }
  for (size_t k = 0; k < bound_vars.size(); ++k) {
    const int row = n_ineq_ + n_eq_ + static_cast<int>(k);
    const int j = bound_vars[k];
    a_orig_(row, j) = 1.0;
    if (p.lb.size()) l_orig_[row] = p.lb[j];
    if (p.ub.size()) u_orig_[row] = p.ub[j];
  }

  p_ = p_orig_;
  q_ = q_orig_;
  a_ = a_orig_;
  l_ = l_orig_;
  u_ = u_orig_;
  d_scale_ = Vec::Ones(n_);
  e_scale_ = Vec::Ones(m_);
  c_scale_ = 1.0;
}

// Ruiz equilibration on [P A'; A 0] plus cost normalization.
void Solver::scale_problem() {
  for (int pass = 0; pass < 10; ++pass) {
    Vec dd(n_), de(m_);
    for (int j = 0; j < n_; ++j) {
      double nrm = std::max(col_inf_norm(p_, j), col_inf_norm(a_, j));
      dd[j] = (nrm > 1e-12) ? 1.0 / std::sqrt(nrm) : 1.0;
    }
    for (int i = 0; i < m_; ++i) {
      double nrm = a_.row(i).cwiseAbs().maxCoeff();
      de[i] = (nrm > 1e-12) ? 1.0 / std::sqrt(nrm) : 1.0;
    }
    p_ = dd.asDiagonal() * p_ * dd.asDiagonal();
    q_ = dd.asDiagonal() * q_;
    a_ = de.asDiagonal() * a_ * dd.asDiagonal();
    for (int i = 0; i < m_; ++i) {
      if (l_[i] > -kInf) l_[i] *= de[i];
      if (u_[i] < kInf) u_[i] *= de[i];
    }
    d_scale_ = d_scale_.cwiseProduct(dd);
    e_scale_ = e_scale_.cwiseProduct(de);

    double mean_col = 0.0;
    for (int j = 0; j < n_; ++j) mean_col += col_inf_norm(p_, j);
    mean_col /= std::max(1, n_);
    double gamma = 1.0 / std::max({mean_col, inf_norm(q_), 1e-12});
    gamma = std::min(gamma, 1e6);
    p_ *= gamma;
    q_ *= gamma;
    c_scale_ *= gamma;
  }
}

void Solver::factorize() {
  Mat kkt = p_ + st_.sigma * Mat::Identity(n_, n_);
  kkt.noalias() += a_.transpose() * rho_vec_.asDiagonal() * a_;
  llt_.compute(kkt);
  require(llt_.info() == Eigen::Success, ErrorCode::Numeric,
          "qp: KKT factorization failed");
}

void Solver::compute_residuals(const Vec& x, const Vec& z, const Vec& y,
                               double& rp, double& rd, double& eps_p,
                               double& eps_d, double& rp_rel,
                               double& rd_rel) const {
  const Vec x_un = d_scale_.cwiseProduct(x);
  const Vec z_un = z.cwiseQuotient(e_scale_);
  const Vec y_un = e_scale_.cwiseProduct(y) / c_scale_;
  const Vec ax = a_orig_ * x_un;
  const Vec px = p_orig_ * x_un;
  const Vec aty = a_orig_.transpose() * y_un;
  rp = inf_norm(ax - z_un);
  rd = inf_norm(px + q_orig_ + aty);
  eps_p = st_.eps_abs + st_.eps_rel * std::max(inf_norm(ax), inf_norm(z_un));
  eps_d = st_.eps_abs +
          st_.eps_rel * std::max({inf_norm(px), inf_norm(aty), inf_norm(q_orig_)});
  rp_rel = rp / std::max({inf_norm(ax), inf_norm(z_un), 1e-10});
  rd_rel = rd / std::max({inf_norm(px), inf_norm(aty), inf_norm(q_orig_), 1e-10});
}

bool Solver::primal_infeasibility(const Vec& dy_scaled, Vec& cert) const {
  Vec dy = e_scale_.cwiseProduct(dy_scaled);
  const double norm_dy = inf_norm(dy);
  if (norm_dy < 1e-14) return false;
  dy /= norm_dy;
  const double eps = st_.eps_infeas;
  if (inf_norm(a_orig_.transpose() * dy) > eps) return false;
  double support = 0.0;
  for (int i = 0; i < m_; ++i) {
    if (dy[i] > eps) {
      if (u_orig_[i] >= kInf) return false;
      support += u_orig_[i] * dy[i];
    } else if (dy[i] < -eps) {
      if (l_orig_[i] <= -kInf) return false;
      support += l_orig_[i] * dy[i];
    }
  }
  if (support <= -eps) {
    cert = dy;
    return true;
  }
  return false;
}

bool Solver::dual_infeasibility(const Vec& dx_scaled) const {
  Vec dx = d_scale_.cwiseProduct(dx_scaled);
  const double norm_dx = inf_norm(dx);
  if (norm_dx < 1e-14) return false;
  dx /= norm_dx;
  const double eps = st_.eps_infeas;
  if (q_orig_.dot(dx) > -eps) return false;
  if (inf_norm(p_orig_ * dx) > eps) return false;
  const Vec adx = a_orig_ * dx;
  for (int i = 0; i < m_; ++i) {
    if (u_orig_[i] < kInf && adx[i] > eps) return false;
    if (l_orig_[i] > -kInf && adx[i] < -eps) return false;
  }
  return true;
}

void Solver::polish(Solution& sol) const {
  const double ytol = 1e-8 * std::max(1.0, inf_norm(sol.y));
  std::vector<int> act;
  std::vector<double> bact;
  for (int i = 0; i < m_; ++i) {
    if (sol.y[i] > ytol && u_orig_[i] < kInf) {
      act.push_back(i);
      bact.push_back(u_orig_[i]);
    } else if (sol.y[i] < -ytol && l_orig_[i] > -kInf) {
      act.push_back(i);
      bact.push_back(l_orig_[i]);
    }
  }
  const int k = static_cast<int>(act.size());
  Mat kkt = Mat::Zero(n_ + k, n_ + k);
  kkt.topLeftCorner(n_, n_) = p_orig_;
  for (int r = 0; r < k; ++r) {
    kkt.block(n_ + r, 0, 1, n_) = a_orig_.row(act[r]);
    kkt.block(0, n_ + r, n_, 1) = a_orig_.row(act[r]).transpose();
  }
  Mat kkt_reg = kkt;
  const double delta = 1e-9;
  kkt_reg.topLeftCorner(n_, n_) += delta * Mat::Identity(n_, n_);
  kkt_reg.bottomRightCorner(k, k) -= delta * Mat::Identity(k, k);
  Vec rhs(n_ + k);
  rhs.head(n_) = -q_orig_;
  for (int r = 0; r < k; ++r) rhs[n_ + r] = bact[r];

  Eigen::PartialPivLU<Mat> lu(kkt_reg);
  Vec t = lu.solve(rhs);
  for (int refine = 0; refine < 3; ++refine) t += lu.solve(rhs - kkt * t);

  Vec x_new = t.head(n_);
  Vec y_new = Vec::Zero(m_);
  for (int r = 0; r < k; ++r) y_new[act[r]] = t[n_ + r];

  // accept only if the polished point is at least as good on both residuals
  const Vec ax = a_orig_ * x_new;
  const Vec z_new = clamp(ax, l_orig_, u_orig_);
  const double rp = inf_norm(ax - z_new);
  const double rd = inf_norm(p_orig_ * x_new + q_orig_ + a_orig_.transpose() * y_new);
  if (rp <= std::max(sol.primal_residual, 1e-12) &&
      rd <= std::max(sol.dual_residual, 1e-12)) {
    sol.x = x_new;
    sol.y = y_new;
    sol.primal_residual = rp;
    sol.dual_residual = rd;
  }
}

Solution Solver::solve() {
  Solution sol;
  if (m_ == 0) {
    Eigen::LLT<Mat> llt(p_orig_ + 1e-12 * Mat::Identity(n_, n_));
    sol.x = llt.solve(-q_orig_);
    sol.y = Vec();
    sol.status = Status::Optimal;
    sol.objective = 0.5 * sol.x.dot(p_orig_ * sol.x) + q_orig_.dot(sol.x);
    return sol;
  }

  Vec x = Vec::Zero(n_), y = Vec::Zero(m_);
  if (st_.x0) {
    require(st_.x0->size() == n_, ErrorCode::DimensionMismatch, "qp: x0 size");
    x = st_.x0->cwiseQuotient(d_scale_);
  }
  if (st_.y0) {
    require(st_.y0->size() == m_, ErrorCode::DimensionMismatch, "qp: y0 size");
    y = c_scale_ * st_.y0->cwiseQuotient(e_scale_);
  }
  Vec z = clamp(a_ * x, l_, u_);
  factorize();

  Vec x_chk = x, y_chk = y;
  int iter = 0;
  int last_rho_update = 0;
  for (iter = 1; iter <= st_.max_iter; ++iter) {
    const Vec rhs = st_.sigma * x - q_ +
                    a_.transpose() * (rho_vec_.cwiseProduct(z) - y);
    const Vec xt = llt_.solve(rhs);
    const Vec zt = a_ * xt;
    const Vec x_next = st_.alpha * xt + (1.0 - st_.alpha) * x;
    const Vec z_relaxed = st_.alpha * zt + (1.0 - st_.alpha) * z;
    const Vec z_next = clamp(z_relaxed + rho_inv_.cwiseProduct(y), l_, u_);
    y += rho_vec_.cwiseProduct(z_relaxed - z_next);
    x = x_next;
    z = z_next;

    if (iter % st_.check_interval == 0 || iter == st_.max_iter) {
      double rp, rd, eps_p, eps_d, rp_rel, rd_rel;
      compute_residuals(x, z, y, rp, rd, eps_p, eps_d, rp_rel, rd_rel);
      if (std::getenv("KSMPC_QP_TRACE"))
        std::fprintf(stderr, "it=%6d rp=%9.3e rd=%9.3e eps_p=%9.3e eps_d=%9.3e rho=%9.3e\n",
                     iter, rp, rd, eps_p, eps_d, st_.rho);
      if (rp <= eps_p && rd <= eps_d) {
        sol.status = Status::Optimal;
        sol.primal_residual = rp;
        sol.dual_residual = rd;
        break;
      }
      Vec cert;
      if (primal_infeasibility(y - y_chk, cert)) {
        sol.status = Status::PrimalInfeasible;
        sol.certificate = cert;
        break;
      }
      if (dual_infeasibility(x - x_chk)) {
        sol.status = Status::DualInfeasible;
        sol.certificate = d_scale_.cwiseProduct(x - x_chk);
        break;
      }
      x_chk = x;
      y_chk = y;
      // rho adaptation on a long cadence; frequent updates destroy the
      // fixed-point convergence of the splitting
      if (st_.adaptive_rho && !lp_mode_ && rp_rel > 0 && rd_rel > 0 &&
          iter - last_rho_update >= 200) {
        const double ratio = std::sqrt(rp_rel / rd_rel);
        if (ratio > 5.0 || ratio < 0.2) {
          last_rho_update = iter;
          double rho_new = std::clamp(st_.rho * ratio, 1e-6, 1e6);
          if (rho_new != st_.rho) {
            st_.rho = rho_new;
            for (int i = 0; i < m_; ++i)
              rho_vec_[i] = (l_[i] == u_[i]) ? 1e3 * rho_new : rho_new;
            rho_inv_ = rho_vec_.cwiseInverse();
            factorize();
          }
        }
      }
    }
  }
  sol.iterations = std::min(iter, st_.max_iter);
  if (sol.status == Status::MaxIter || sol.status == Status::Optimal) {
    if (sol.status == Status::MaxIter) {
      double rp, rd, eps_p, eps_d, rp_rel, rd_rel;
      compute_residuals(x, z, y, rp, rd, eps_p, eps_d, rp_rel, rd_rel);
      sol.primal_residual = rp;
      sol.dual_residual = rd;
    }
    sol.x = d_scale_.cwiseProduct(x);
    sol.y = e_scale_.cwiseProduct(y) / c_scale_;
    if (sol.status == Status::Optimal && st_.polish) polish(sol);
    sol.objective = 0.5 * sol.x.dot(p_orig_ * sol.x) + q_orig_.dot(sol.x);
  } else {
    sol.x = d_scale_.cwiseProduct(x);
    sol.y = e_scale_.cwiseProduct(y) / c_scale_;
  }
  return sol;
}

Solution solve(const Problem& p, const Settings& s) { return Solver(p, s).solve(); }

Settings warm_start(const Problem& p, const Solution& prev, const Settings& base) {
  require(prev.x.size() == p.num_vars(), ErrorCode::DimensionMismatch,
          "qp: warm start dimension mismatch");
  Settings s = base;
  s.x0 = prev.x;
  if (prev.y.size()) s.y0 = prev.y;
  return s;
}

LpResult solve_lp(const Vec& c, const Mat& a, const Vec& b, const Settings& s) {
  Problem p;
  const int n = static_cast<int>(c.size());
  p.hessian = Mat::Zero(n, n);
  p.gradient = c;
  p.ineq_mat = a;
  p.ineq_vec = b;
  Solution sol = solve(p, s);
  return {sol.status, sol.x, sol.objective};
}

}  // namespace ksmpc::qp
