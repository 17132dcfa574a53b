#pragma once

// Reference implementations used only by the tests. They trade speed for obviousness:
// plain loops over every triangle pair, exhaustive enumeration, brute-force hulls.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "polydepth/polydepth.hpp"

namespace testsupport {

using polydepth::TriangleCorners;
using polydepth::TriangleMesh;
using polydepth::Vec3;
namespace geom = polydepth::geom;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * polydepth::uniform01(rng);
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  const double z = uniform(rng, -1.0, 1.0);
  const double phi = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

inline polydepth::Pose random_rotation(std::mt19937_64& rng) {
  const double u1 = polydepth::uniform01(rng), u2 = polydepth::uniform01(rng), u3 = polydepth::uniform01(rng);
  const double s1 = std::sqrt(1.0 - u1), s2 = std::sqrt(u1);
  const double t = 2.0 * std::numbers::pi;
  return polydepth::Pose::from_quaternion(s2 * std::cos(t * u3), s1 * std::sin(t * u2), s1 * std::cos(t * u2),
                                          s2 * std::sin(t * u3));
}

// Closest distance between two triangles by sampling: a coarse upper bound, independent
// of the analytic routine. Barycentric grid with `n` steps per side on both triangles.
inline double sampled_triangle_distance(const TriangleCorners& a, const TriangleCorners& b, int n) {
  std::vector<Vec3> pa, pb;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; i + j <= n; ++j) {
      const double u = double(i) / n, v = double(j) / n;
      pa.push_back(a[0] + u * (a[1] - a[0]) + v * (a[2] - a[0]));
      pb.push_back(b[0] + u * (b[1] - b[0]) + v * (b[2] - b[0]));
    }
  }
  double best = kInf;
  for (const auto& x : pa)
    for (const auto& y : pb) best = std::min(best, (x - y).norm());
  return best;
}

inline double naive_min_distance(const TriangleMesh& a, const Vec3& qa, const TriangleMesh& b) {
  double best = kInf;
  for (std::size_t i = 0; i < a.triangle_count(); ++i) {
    if (a.is_degenerate(i)) continue;
    const auto ta = geom::translated(a.corners(i), qa);
    for (std::size_t j = 0; j < b.triangle_count(); ++j) {
      if (b.is_degenerate(j)) continue;
      best = std::min(best, geom::triangle_distance(ta, b.corners(j)).distance);
    }
  }
  return best;
}

// Any edge of one mesh passing through the interior of a triangle of the other.
inline bool naive_crossing(const TriangleMesh& a, const Vec3& qa, const TriangleMesh& b, double tol) {
  for (std::size_t i = 0; i < a.triangle_count(); ++i) {
    if (a.is_degenerate(i)) continue;
    const auto ta = geom::translated(a.corners(i), qa);
    for (std::size_t j = 0; j < b.triangle_count(); ++j) {
      if (b.is_degenerate(j)) continue;
      if (geom::triangles_penetrate(ta, b.corners(j), tol)) return true;
    }
  }
  return false;
}

// Axis-aligned box of a triangle swept from offset 0 to offset v, grown by pad.
inline polydepth::Aabb swept_box(const TriangleCorners& t, const Vec3& v, double pad) {
  polydepth::Aabb box;
  for (const auto& p : t) {
    box.extend(p);
    box.extend(p + v);
  }
  box.lo -= Vec3::Constant(pad);
  box.hi += Vec3::Constant(pad);
  return box;
}

inline bool boxes_overlap(const polydepth::Aabb& x, const polydepth::Aabb& y) {
  return (x.lo.array() <= y.hi.array()).all() && (y.lo.array() <= x.hi.array()).all();
}

// First t in [0, 1] at which ta + t v comes within `thr` of tb, by golden-section search
// for the minimum of the (convex) pair distance followed by bisection. nullopt: never.
inline std::optional<double> pair_first_time(const TriangleCorners& ta, const TriangleCorners& tb, const Vec3& v,
                                             double thr) {
  auto f = [&](double t) { return geom::triangle_distance(geom::translated(ta, t * v), tb).distance; };
  if (f(0.0) <= thr) return 0.0;
  double hi;
  if (f(1.0) <= thr) {
    hi = 1.0;
  } else {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = 0.0, up = 1.0;
    double x1 = up - g * (up - lo), x2 = lo + g * (up - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int k = 0; k < 200 && up - lo > 1e-15; ++k) {
      if (f1 <= thr || f2 <= thr) break;
      if (f1 < f2) {
        up = x2;
        x2 = x1;
        f2 = f1;
        x1 = up - g * (up - lo);
        f1 = f(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + g * (up - lo);
        f2 = f(x2);
      }
    }
    if (f1 <= thr) {
      hi = x1;
    } else if (f2 <= thr) {
      hi = x2;
    } else {
      return std::nullopt;
    }
  }
  double lo = 0.0;
  for (int k = 0; k < 200 && hi - lo > 1e-15; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) <= thr) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

// Naive time of contact: every triangle pair whose swept boxes meet is solved on its own.
inline std::optional<double> naive_toc(const TriangleMesh& a, const Vec3& qs, const Vec3& qt, const TriangleMesh& b,
                                       double thr) {
  const Vec3 v = qt - qs;
  std::optional<double> best;
  std::vector<polydepth::Aabb> bbox(b.triangle_count());
  for (std::size_t j = 0; j < b.triangle_count(); ++j) bbox[j] = swept_box(b.corners(j), Vec3::Zero(), 0.0);
  for (std::size_t i = 0; i < a.triangle_count(); ++i) {
    if (a.is_degenerate(i)) continue;
    const auto ta = geom::translated(a.corners(i), qs);
    const auto sweep = swept_box(ta, v, thr);
    for (std::size_t j = 0; j < b.triangle_count(); ++j) {
      if (b.is_degenerate(j) || !boxes_overlap(sweep, bbox[j])) continue;
      const auto t = pair_first_time(ta, b.corners(j), v, thr);
      if (t && (!best || *t < *best)) best = t;
    }
  }
  return best;
}

// Least-norm q with J q >= c by trying every active set: the unique KKT point of the
// strictly convex problem. Returns lambda (so q = J^T lambda / 4).
inline Eigen::VectorXd active_set_lambda(const Eigen::MatrixXd& J, const Eigen::VectorXd& c) {
  const int n = static_cast<int>(J.rows());
  const Eigen::MatrixXd M = J * J.transpose();
  const double tol = 1e-9 * (1.0 + c.cwiseAbs().maxCoeff()) * (1.0 + M.cwiseAbs().maxCoeff());
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) act.push_back(i);
    Eigen::VectorXd lam = Eigen::VectorXd::Zero(n);
    if (!act.empty()) {
      const int k = static_cast<int>(act.size());
      Eigen::MatrixXd Ms(k, k);
      Eigen::VectorXd rs(k);
      for (int r = 0; r < k; ++r) {
        rs[r] = 4.0 * c[act[r]];
        for (int s = 0; s < k; ++s) Ms(r, s) = M(act[r], act[s]);
      }
      const Eigen::VectorXd ls = Ms.ldlt().solve(rs);
      bool ok = true;
      for (int r = 0; r < k; ++r) {
        if (ls[r] < -tol) ok = false;
        lam[act[r]] = std::max(0.0, ls[r]);
      }
      if (!ok) continue;
    }
    const Eigen::VectorXd w = 0.25 * (M * lam) - c;
    bool feasible = true;
    for (int i = 0; i < n; ++i)
      if (!(mask & (1u << i)) && w[i] < -tol) feasible = false;
    if (feasible) return lam;
  }
  return Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
}

// Convex hull of points in general position by testing every triple as a supporting plane.
// Unused points are dropped.
inline TriangleMesh brute_force_hull(const std::vector<Vec3>& pts) {
  const int n = static_cast<int>(pts.size());
  Vec3 mid = Vec3::Zero();
  for (const auto& p : pts) mid += p;
  mid /= n;
  double scale = 0.0;
  for (const auto& p : pts) scale = std::max(scale, (p - mid).norm());
  const double tol = 1e-12 * scale;
  std::vector<polydepth::TriangleIndices> faces;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      for (int k = j + 1; k < n; ++k) {
        Vec3 nrm = (pts[j] - pts[i]).cross(pts[k] - pts[i]);
        if (nrm.norm() <= tol * scale) continue;
        int above = 0, below = 0;
        for (int m = 0; m < n && !(above && below); ++m) {
          if (m == i || m == j || m == k) continue;
          const double s = nrm.dot(pts[m] - pts[i]);
          if (s > tol * nrm.norm()) ++above;
          if (s < -tol * nrm.norm()) ++below;
        }
        if (above && below) continue;
        if (above) {
          faces.push_back({i, k, j});
        } else {
          faces.push_back({i, j, k});
        }
      }
    }
  }
  std::vector<int> remap(n, -1);
  std::vector<Vec3> verts;
  for (auto& f : faces) {
    for (int& v : f) {
      if (remap[v] < 0) {
        remap[v] = static_cast<int>(verts.size());
        verts.push_back(pts[v]);
      }
      v = remap[v];
    }
  }
  return TriangleMesh(std::move(verts), std::move(faces));
}

// Random convex polytope: up to `max_points` points on a jittered random ellipsoid.
inline TriangleMesh random_convex(std::mt19937_64& rng, int max_points) {
  const int n = static_cast<int>(uniform(rng, 8.0, max_points + 1.0));
  const Vec3 axes(uniform(rng, 0.5, 1.5), uniform(rng, 0.5, 1.5), uniform(rng, 0.5, 1.5));
  const auto rot = random_rotation(rng);
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i) {
    const Vec3 u = random_unit(rng);
    pts.push_back(rot.rotation * Vec3(uniform(rng, 0.7, 1.0) * axes.cwiseProduct(u)));
  }
  return brute_force_hull(pts);
}

// Fork with two prongs over an L-shaped base. The long prong sinks `depth` into the floor
// (top at z = 0); the short prong and the handle rest flush against the wall face x = 1.
struct ForkFixture {
  TriangleMesh fork;
  TriangleMesh base;
};

inline ForkFixture fork_fixture(double depth) {
  polydepth::shapes::detail::Builder f;
  f.box(Vec3(-1.0, -0.5, -depth), Vec3(-0.6, 0.5, 1.2));
  f.box(Vec3(0.6, -0.5, 0.5), Vec3(1.0, 0.5, 1.2));
  f.box(Vec3(-1.0, -0.5, 1.2), Vec3(1.0, 0.5, 1.5));
  polydepth::shapes::detail::Builder b;
  b.box(Vec3(-3.0, -1.0, -1.0), Vec3(3.0, 1.0, 0.0));
  b.box(Vec3(1.0, -1.0, 0.0), Vec3(3.0, 1.0, 2.0));
  return {f.build(), b.build()};
}

// Closed prism over a simple polygon (either winding) between z0 and z1. Caps are
// triangulated by ear clipping.
inline TriangleMesh prism(std::vector<Eigen::Vector2d> poly, double z0, double z1) {
  double area = 0.0;
  const int n = static_cast<int>(poly.size());
  for (int i = 0; i < n; ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % n];
    area += a.x() * b.y() - b.x() * a.y();
  }
  if (area < 0.0) std::reverse(poly.begin(), poly.end());
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a - o).x() * (b - o).y() - (a - o).y() * (b - o).x();
  };
  std::vector<std::array<int, 3>> caps;
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  while (idx.size() > 3) {
    const int m = static_cast<int>(idx.size());
    bool clipped = false;
    for (int k = 0; k < m && !clipped; ++k) {
      const int ia = idx[(k + m - 1) % m], ib = idx[k], ic = idx[(k + 1) % m];
      if (cross(poly[ia], poly[ib], poly[ic]) <= 0.0) continue;
      bool empty = true;
      for (int j : idx) {
        if (j == ia || j == ib || j == ic) continue;
        if (cross(poly[ia], poly[ib], poly[j]) >= 0 && cross(poly[ib], poly[ic], poly[j]) >= 0 &&
            cross(poly[ic], poly[ia], poly[j]) >= 0)
          empty = false;
      }
      if (!empty) continue;
      caps.push_back({ia, ib, ic});
      idx.erase(idx.begin() + k);
      clipped = true;
    }
    if (!clipped) throw std::runtime_error("polygon is not simple");
  }
  caps.push_back({idx[0], idx[1], idx[2]});
  std::vector<Vec3> v;
  for (const auto& p : poly) v.emplace_back(p.x(), p.y(), z0);
  for (const auto& p : poly) v.emplace_back(p.x(), p.y(), z1);
  std::vector<polydepth::TriangleIndices> f;
  for (const auto& t : caps) {
    f.push_back({t[0], t[2], t[1]});
    f.push_back({n + t[0], n + t[1], n + t[2]});
  }
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    f.push_back({i, j, n + j});
    f.push_back({i, n + j, n + i});
  }
  return TriangleMesh(std::move(v), std::move(f));
}

// Runs f and reports which error category it threw, if any.
template <class F>
std::optional<polydepth::ErrorCode> error_of(F&& f) {
  try {
    f();
  } catch (const polydepth::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace testsupport
