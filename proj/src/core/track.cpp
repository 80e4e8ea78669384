#include "core/track.hpp"

#include <algorithm>
#include <cmath>

namespace ksmpc::track {

double Track::length() const {
  double len = 0.0;
  for (const auto& seg : segments) len += seg.length_m;
  return len;
}

double Track::kappa_at(double s) const {
  double acc = 0.0;
  for (const auto& seg : segments) {
    if (s <= acc + seg.length_m || &seg == &segments.back()) {
      const double local = std::clamp(s - acc, 0.0, seg.length_m);
      return seg.kappa0 + seg.kappa_rate * local;
    }
    acc += seg.length_m;
  }
  return 0.0;
}

double Track::kappa_rate_at(double s) const {
  double acc = 0.0;
  for (const auto& seg : segments) {
    if (s <= acc + seg.length_m || &seg == &segments.back()) return seg.kappa_rate;
    acc += seg.length_m;
  }
  return 0.0;
}

CenterlineSample Track::pose_at(double s) const {
  require(!centerline.empty(), ErrorCode::EmptySpec, "track: empty centerline");
  const double s_max = centerline.back().s;
  s = std::clamp(s, 0.0, s_max);
  const size_t i = std::min(static_cast<size_t>(s / sample_step),
                            centerline.size() - 2);
  const auto& a = centerline[i];
  const auto& b = centerline[i + 1];
  const double t = (b.s > a.s) ? (s - a.s) / (b.s - a.s) : 0.0;
  CenterlineSample out;
  out.s = s;
  out.x = a.x + t * (b.x - a.x);
  out.y = a.y + t * (b.y - a.y);
  out.psi = a.psi + t * wrap_angle(b.psi - a.psi);
  out.kappa = a.kappa + t * (b.kappa - a.kappa);
  return out;
}

double Track::nearest_s(double x, double y, int* hint) const {
  require(!centerline.empty(), ErrorCode::EmptySpec, "track: empty centerline");
  const int n = static_cast<int>(centerline.size());
  auto d2 = [&](int i) {
    const double dx = centerline[i].x - x, dy = centerline[i].y - y;
    return dx * dx + dy * dy;
  };
  int best = -1;
  if (hint && *hint >= 0 && *hint < n) {
    const int lo = std::max(0, *hint - 120), hi = std::min(n - 1, *hint + 120);
    best = lo;
    for (int i = lo + 1; i <= hi; ++i)
      if (d2(i) < d2(best)) best = i;
    if (best == lo || best == hi) best = -1;  // window edge: fall back to full scan
  }
  if (best < 0) {
    best = 0;
    for (int i = 1; i < n; ++i)
      if (d2(i) < d2(best)) best = i;
  }
  if (hint) *hint = best;

  // refine by projecting onto the neighboring chords
  double s_best = centerline[best].s;
  double best_d2 = d2(best);
  for (int i : {best - 1, best}) {
    if (i < 0 || i + 1 >= n) continue;
    const auto& a = centerline[i];
    const auto& b = centerline[i + 1];
    const double ex = b.x - a.x, ey = b.y - a.y;
    const double len2 = ex * ex + ey * ey;
    if (len2 < 1e-12) continue;
    const double t = std::clamp(((x - a.x) * ex + (y - a.y) * ey) / len2, 0.0, 1.0);
    const double px = a.x + t * ex, py = a.y + t * ey;
    const double dd = (px - x) * (px - x) + (py - y) * (py - y);
    if (dd < best_d2) {
      best_d2 = dd;
      s_best = a.s + t * (b.s - a.s);
    }
  }
  return s_best;
}

Track build_track(const std::vector<SegmentSpec>& spec, const BuildOptions& opt) {
  require(!spec.empty(), ErrorCode::EmptySpec, "track: empty segment spec");
  require(opt.sample_step > 0, ErrorCode::Config, "track: sample_step must be > 0");

  std::vector<ClothoidSegment> segs;
  double kappa = 0.0;
  auto transition_to = [&](double kappa_target) {
    if (std::abs(kappa_target - kappa) < 1e-12) return;
    require(opt.auto_transition_length > 0, ErrorCode::CurvatureJump,
            "track: discontinuous curvature and auto transitions disabled");
    const double len = opt.auto_transition_length;
    segs.push_back({len, kappa, (kappa_target - kappa) / len});
    kappa = kappa_target;
  };

  for (const auto& s : spec) {
    require(s.length > 0, ErrorCode::Config, "track: segment length must be > 0");
    switch (s.kind) {
      case SegmentSpec::Kind::Straight:
        transition_to(0.0);
        segs.push_back({s.length, 0.0, 0.0});
        break;
      case SegmentSpec::Kind::Arc: {
        require(s.radius != 0, ErrorCode::Config, "track: arc needs a radius");
        const double k = 1.0 / s.radius;
        require(std::abs(k) <= opt.kappa_max, ErrorCode::Config,
                "track: arc curvature exceeds kappa_max");
        transition_to(k);
        segs.push_back({s.length, k, 0.0});
        kappa = k;
        break;
      }
      case SegmentSpec::Kind::Clothoid: {
        require(std::abs(s.kappa_end) <= opt.kappa_max, ErrorCode::Config,
                "track: clothoid end curvature exceeds kappa_max");
        segs.push_back({s.length, kappa, (s.kappa_end - kappa) / s.length});
        kappa = s.kappa_end;
        break;
      }
    }
  }

  Track t;
  t.segments = std::move(segs);
  t.sample_step = opt.sample_step;

  // integrate the centerline; heading is exact (quadratic in s), position by
  // Simpson within each sample step
  double x = 0.0, y = 0.0, psi = 0.0, s_acc = 0.0;
  t.centerline.push_back({0.0, 0.0, 0.0, 0.0, t.segments.front().kappa0});
  for (const auto& seg : t.segments) {
    const int n_steps = std::max(1, static_cast<int>(std::ceil(seg.length_m / opt.sample_step)));
    const double ds = seg.length_m / n_steps;
    for (int i = 0; i < n_steps; ++i) {
      const double s0 = i * ds;
      auto heading = [&](double sl) {
        return psi + seg.kappa0 * sl + 0.5 * seg.kappa_rate * sl * sl;
      };
      const double h0 = heading(s0), hm = heading(s0 + 0.5 * ds), h1 = heading(s0 + ds);
      x += ds / 6.0 * (std::cos(h0) + 4.0 * std::cos(hm) + std::cos(h1));
      y += ds / 6.0 * (std::sin(h0) + 4.0 * std::sin(hm) + std::sin(h1));
      const double s_here = s_acc + s0 + ds;
      t.centerline.push_back({s_here, x, y, h1, seg.kappa0 + seg.kappa_rate * (s0 + ds)});
    }
    psi += seg.kappa0 * seg.length_m + 0.5 * seg.kappa_rate * seg.length_m * seg.length_m;
    s_acc += seg.length_m;
  }
  require(t.length() > 0, ErrorCode::EmptySpec, "track: zero total length");
  return t;
}

LaneCoefficients lane_coefficients(const Track& t, const Pose& pose,
                                   double preview_m, const LaneOptions& opt,
                                   int* hint) {
  const double s0 = t.nearest_s(pose.x, pose.y, hint);
  const auto near = t.pose_at(s0);
  const double dist = std::hypot(near.x - pose.x, near.y - pose.y);
  require(dist <= opt.capture_range, ErrorCode::OffTrack,
          "lane: vehicle beyond capture range");

  const double s_avail = t.length() - s0;
  require(s_avail > 5.0, ErrorCode::EndOfTrack, "lane: preview past track end");
  const double window = std::min(preview_m, s_avail);
  const int n_pts = std::max(8, static_cast<int>(window / opt.fit_step) + 1);

  const double cp = std::cos(pose.psi), sp = std::sin(pose.psi);
  Mat vand(n_pts, 4);
  Vec rhs(n_pts);
  const double xs = std::max(window, 1.0);  // scale abscissa for conditioning
  for (int i = 0; i < n_pts; ++i) {
    const double s = s0 + window * i / (n_pts - 1);
    const auto p = t.pose_at(s);
    const double dx = p.x - pose.x, dy = p.y - pose.y;
    const double xl = cp * dx + sp * dy;
    const double yl = -sp * dx + cp * dy;
    const double xn = xl / xs;
    vand(i, 0) = 1.0;
    vand(i, 1) = xn;
    vand(i, 2) = xn * xn;
    vand(i, 3) = xn * xn * xn;
    rhs[i] = yl;
  }
  const Vec sol = vand.colPivHouseholderQr().solve(rhs);
  return {sol[0], sol[1] / xs, sol[2] / (xs * xs), sol[3] / (xs * xs * xs)};
}

std::pair<double, double> lookahead_errors(const LaneCoefficients& c, double l) {
  require(l >= 0, ErrorCode::Config, "lookahead distance must be >= 0");
  const double f = c.c0 + c.c1 * l + c.c2 * l * l + c.c3 * l * l * l;
  const double fp = c.c1 + 2.0 * c.c2 * l + 3.0 * c.c3 * l * l;
  return {f, fp};
}

SpeedProfile SpeedProfile::constant(double v, double length) {
  SpeedProfile p;
  p.s_grid = {0.0, length};
  p.v_grid = {v, v};
  return p;
}

SpeedProfile SpeedProfile::plan(const Track& t, const PlanParams& prm) {
  const double step = t.sample_step;
  const int n = static_cast<int>(t.length() / step) + 1;
  SpeedProfile p;
  p.s_grid.resize(n);
  p.v_grid.resize(n);
  for (int i = 0; i < n; ++i) {
    const double s = i * step;
    p.s_grid[i] = s;
    const double k = std::abs(t.kappa_at(s));
    double v = (k > 1e-9) ? std::sqrt(prm.ay_max / k) : prm.v_max;
    v = std::clamp(v, prm.v_min, prm.v_max);
    for (const auto& ov : prm.overrides)
      if (s >= ov.s_begin && s <= ov.s_end) v = std::min(v, ov.v);
    p.v_grid[i] = v;
  }
  // backward pass: respect the deceleration limit approaching slow sections
  for (int i = n - 2; i >= 0; --i) {
    const double v_reach = std::sqrt(p.v_grid[i + 1] * p.v_grid[i + 1] +
                                     2.0 * prm.decel_limit * step);
    p.v_grid[i] = std::min(p.v_grid[i], v_reach);
  }
  // forward pass: acceleration limit leaving slow sections
  for (int i = 1; i < n; ++i) {
    const double v_reach = std::sqrt(p.v_grid[i - 1] * p.v_grid[i - 1] +
                                     2.0 * prm.accel_limit * step);
    p.v_grid[i] = std::min(p.v_grid[i], v_reach);
  }
  return p;
}

double SpeedProfile::v_at(double s) const {
  require(!s_grid.empty(), ErrorCode::Config, "speed profile is empty");
  if (s <= s_grid.front()) return v_grid.front();
  if (s >= s_grid.back()) return v_grid.back();
  const auto it = std::upper_bound(s_grid.begin(), s_grid.end(), s);
  const size_t i = static_cast<size_t>(it - s_grid.begin()) - 1;
  const double t = (s - s_grid[i]) / (s_grid[i + 1] - s_grid[i]);
  return v_grid[i] + t * (v_grid[i + 1] - v_grid[i]);
}

std::vector<ExternalSignal> preview_external(const Track& t, double s0,
                                             const SpeedProfile& profile,
                                             int horizon_steps, double dt) {
  require(horizon_steps >= 1, ErrorCode::Config, "preview horizon must be >= 1");
  std::vector<ExternalSignal> out;
  out.reserve(horizon_steps);
  double s = s0;
  for (int i = 0; i < horizon_steps; ++i) {
    require(s <= t.length(), ErrorCode::EndOfTrack,
            "preview runs past the track end");
    const double vx = profile.v_at(s);
    out.push_back({vx, 0.5 * t.kappa_at(s), t.kappa_rate_at(s) / 6.0});
    s += vx * dt;
  }
  return out;
}

}  // namespace ksmpc::track
