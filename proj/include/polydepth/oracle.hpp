#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <utility>
#include <vector>

#include "polydepth/error.hpp"
#include "polydepth/mesh.hpp"

// Reference penetration depths computed without the hierarchy or CCD code paths.
namespace polydepth::oracle {

enum class Method { ConvexHull, DirectionalSampling };

struct OracleResult {
  Vec3 pd_vector = Vec3::Zero();
  double magnitude = 0.0;
  Method method = Method::ConvexHull;
  int direction_count = 0;
};

/// True when every face plane has all vertices on one side within tol_scale * radius.
inline bool is_convex(const TriangleMesh& m, double tol_scale = 1e-9) {
  const double tol = tol_scale * std::max(m.bounding_radius(), 1e-300);
  for (std::size_t t = 0; t < m.triangle_count(); ++t) {
    if (m.is_degenerate(t)) continue;
    const Vec3 n = m.face_normal(t);
    const Vec3 p = m.corners(t)[0];
    bool above = false, below = false;
    for (const auto& v : m.vertices()) {
      const double s = n.dot(v - p);
      above |= s > tol;
      below |= s < -tol;
      if (above && below) return false;
    }
  }
  return true;
}

namespace detail {

inline std::vector<std::pair<int, int>> unique_edges(const TriangleMesh& m) {
  std::set<std::pair<int, int>> edges;
  for (std::size_t t = 0; t < m.triangle_count(); ++t) {
    if (m.is_degenerate(t)) continue;
    const auto& f = m.triangles()[t];
    for (int k = 0; k < 3; ++k) edges.insert(std::minmax(f[k], f[(k + 1) % 3]));
  }
  return {edges.begin(), edges.end()};
}

}  // namespace detail

/// Exact depth for convex A (shifted by qa) and B. The obstacle B + (-A) in translation
/// space is convex; its facet normals lie among the face normals of both meshes and the
/// cross products of their edge pairs, so the depth is the smallest support gap
///   h(n) = max_b n.b - min_a n.(a + qa)
/// over those candidates (both signs).
inline OracleResult convex_pd(const TriangleMesh& a, const Vec3& qa, const TriangleMesh& b) {
  if (!is_convex(a) || !is_convex(b)) throw Error(ErrorCode::NotConvex, "convex_pd needs convex inputs");
  std::vector<Vec3> pa;
  pa.reserve(a.vertex_count());
  for (const auto& v : a.vertices()) pa.push_back(v + qa);
  const auto& pb = b.vertices();

  OracleResult best;
  best.method = Method::ConvexHull;
  best.magnitude = std::numeric_limits<double>::infinity();
  auto try_normal = [&](const Vec3& n) {
    double hb = -std::numeric_limits<double>::infinity();
    double la = std::numeric_limits<double>::infinity();
    for (const auto& v : pb) hb = std::max(hb, n.dot(v));
    for (const auto& v : pa) la = std::min(la, n.dot(v));
    const double h = hb - la;
    if (h < best.magnitude) {
      best.magnitude = h;
      best.pd_vector = h * n;
    }
  };
  for (const TriangleMesh* m : {&a, &b}) {
    for (std::size_t t = 0; t < m->triangle_count(); ++t) {
      if (m->is_degenerate(t)) continue;
      const Vec3 n = m->face_normal(t);
      try_normal(n);
      try_normal(-n);
    }
  }
  const auto ea = detail::unique_edges(a);
  const auto eb = detail::unique_edges(b);
  for (const auto& [i0, i1] : ea) {
    const Vec3 da = a.vertices()[i1] - a.vertices()[i0];
    for (const auto& [j0, j1] : eb) {
      const Vec3 db = pb[j1] - pb[j0];
      const Vec3 c = da.cross(db);
      if (c.norm() <= 1e-12 * da.norm() * db.norm()) continue;
      const Vec3 n = c.normalized();
      try_normal(n);
      try_normal(-n);
    }
  }
  if (best.magnitude <= 0.0) {
    best.magnitude = 0.0;
    best.pd_vector = Vec3::Zero();
  }
  return best;
}

/// Prefix-consistent, roughly uniform unit directions: a two-dimensional low-discrepancy
/// sequence mapped to the sphere by an equal-area map. The first n of any longer set are
/// the set for n.
inline std::vector<Vec3> sphere_directions(int n) {
  constexpr double g = 1.32471795724474602596;  // plastic number
  constexpr double a1 = 1.0 / g;
  constexpr double a2 = 1.0 / (g * g);
  std::vector<Vec3> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double x = std::fmod(0.5 + a1 * k, 1.0);
    const double y = std::fmod(0.5 + a2 * k, 1.0);
    const double z = 1.0 - 2.0 * x;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = 2.0 * std::numbers::pi * y;
    out.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return out;
}

namespace detail {

// Parameter t where the line p + t*u meets triangle t, if it does (boundary included).
inline bool line_hits_triangle(const Vec3& p, const Vec3& u, const TriangleCorners& tri, double* t_out) {
  const Vec3 e1 = tri[1] - tri[0];
  const Vec3 e2 = tri[2] - tri[0];
  const Vec3 h = u.cross(e2);
  const double det = e1.dot(h);
  if (std::abs(det) <= 1e-14 * e1.norm() * e2.norm()) return false;
  const double inv = 1.0 / det;
  const Vec3 s = p - tri[0];
  const double bu = s.dot(h) * inv;
  if (bu < -1e-12 || bu > 1.0 + 1e-12) return false;
  const Vec3 qv = s.cross(e1);
  const double bv = u.dot(qv) * inv;
  if (bv < -1e-12 || bu + bv > 1.0 + 1e-12) return false;
  *t_out = e2.dot(qv) * inv;
  return true;
}

// Largest t with (ta + t*u) intersecting tb, or -inf. The set of such t is an interval of
// the line through the convex set tb + (-ta); its far end lies on a vertex-face,
// face-vertex or edge-edge boundary piece.
inline double exit_time(const TriangleCorners& ta, const TriangleCorners& tb, const Vec3& u) {
  double best = -std::numeric_limits<double>::infinity();
  double t;
  for (int i = 0; i < 3; ++i) {
    if (line_hits_triangle(ta[i], u, tb, &t)) best = std::max(best, t);
    if (line_hits_triangle(tb[i], -u, ta, &t)) best = std::max(best, t);
  }
  for (int i = 0; i < 3; ++i) {
    const Vec3 ea = ta[(i + 1) % 3] - ta[i];
    for (int j = 0; j < 3; ++j) {
      const Vec3 eb = tb[(j + 1) % 3] - tb[j];
      Mat3 m;
      m.col(0) = ea;
      m.col(1) = -eb;
      m.col(2) = u;
      const double det = m.determinant();
      if (std::abs(det) <= 1e-14 * ea.norm() * eb.norm()) continue;
      const Vec3 x = m.inverse() * (tb[j] - ta[i]);
      if (x[0] < -1e-12 || x[0] > 1.0 + 1e-12 || x[1] < -1e-12 || x[1] > 1.0 + 1e-12) continue;
      best = std::max(best, x[2]);
    }
  }
  return best;
}

}  // namespace detail

/// Smallest translation along unit u that separates A (shifted by qa) from B for good:
/// the largest t at which any triangle pair still meets. Pairs are culled by their shadows
/// on the plane normal to u and by the bound max(u.b) - min(u.a).
inline double directional_depth(const TriangleMesh& a, const Vec3& qa, const TriangleMesh& b, const Vec3& u) {
  Vec3 e1 = std::abs(u.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  e1 = (e1 - e1.dot(u) * u).normalized();
  const Vec3 e2 = u.cross(e1);

  struct Shadow {
    int tri;
    double x0, x1, y0, y1;
    double lo, hi;  // extent along u
  };
  auto shadow = [&](const TriangleCorners& c, int t) {
    Shadow s{t, 1e300, -1e300, 1e300, -1e300, 1e300, -1e300};
    for (const auto& p : c) {
      const double x = e1.dot(p), y = e2.dot(p), z = u.dot(p);
      s.x0 = std::min(s.x0, x), s.x1 = std::max(s.x1, x);
      s.y0 = std::min(s.y0, y), s.y1 = std::max(s.y1, y);
      s.lo = std::min(s.lo, z), s.hi = std::max(s.hi, z);
    }
    return s;
  };
  std::vector<Shadow> sb, sa;
  for (std::size_t t = 0; t < b.triangle_count(); ++t)
    if (!b.is_degenerate(t)) sb.push_back(shadow(b.corners(t), static_cast<int>(t)));
  for (std::size_t t = 0; t < a.triangle_count(); ++t) {
    if (a.is_degenerate(t)) continue;
    auto c = a.corners(t);
    for (auto& p : c) p += qa;
    sa.push_back(shadow(c, static_cast<int>(t)));
  }
  if (sa.empty() || sb.empty()) return 0.0;

  double gx0 = 1e300, gx1 = -1e300, gy0 = 1e300, gy1 = -1e300, hi_b = -1e300;
  for (const auto& s : sb) {
    gx0 = std::min(gx0, s.x0), gx1 = std::max(gx1, s.x1);
    gy0 = std::min(gy0, s.y0), gy1 = std::max(gy1, s.y1);
    hi_b = std::max(hi_b, s.hi);
  }
  const int g = std::clamp(static_cast<int>(std::sqrt(static_cast<double>(sb.size()))), 1, 256);
  const double cw = std::max((gx1 - gx0) / g, 1e-300);
  const double ch = std::max((gy1 - gy0) / g, 1e-300);
  auto cell_x = [&](double x) { return std::clamp(static_cast<int>(std::floor((x - gx0) / cw)), 0, g - 1); };
  auto cell_y = [&](double y) { return std::clamp(static_cast<int>(std::floor((y - gy0) / ch)), 0, g - 1); };
  std::vector<std::vector<int>> cells(static_cast<std::size_t>(g) * g);
  for (int i = 0; i < static_cast<int>(sb.size()); ++i) {
    for (int y = cell_y(sb[i].y0); y <= cell_y(sb[i].y1); ++y)
      for (int x = cell_x(sb[i].x0); x <= cell_x(sb[i].x1); ++x) cells[static_cast<std::size_t>(y) * g + x].push_back(i);
  }

  std::sort(sa.begin(), sa.end(), [](const Shadow& p, const Shadow& q) {
    if (p.lo != q.lo) return p.lo < q.lo;
    return p.tri < q.tri;
  });
  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> stamp(sb.size(), -1);
  for (int ia = 0; ia < static_cast<int>(sa.size()); ++ia) {
    const Shadow& s = sa[ia];
    if (hi_b - s.lo <= best) break;  // sorted by lo: no later triangle can do better
    if (s.x1 < gx0 || s.x0 > gx1 || s.y1 < gy0 || s.y0 > gy1) continue;
    auto ca = a.corners(s.tri);
    for (auto& p : ca) p += qa;
    for (int y = cell_y(s.y0); y <= cell_y(s.y1); ++y) {
      for (int x = cell_x(s.x0); x <= cell_x(s.x1); ++x) {
        for (int ib : cells[static_cast<std::size_t>(y) * g + x]) {
          if (stamp[ib] == ia) continue;
          stamp[ib] = ia;
          const Shadow& r = sb[ib];
          if (r.x1 < s.x0 || r.x0 > s.x1 || r.y1 < s.y0 || r.y0 > s.y1) continue;
          if (r.hi - s.lo <= best) continue;
          best = std::max(best, detail::exit_time(ca, b.corners(r.tri), u));
        }
      }
    }
  }
  return std::max(best, 0.0);
}

/// Upper bound on the depth: the best directional depth over `directions` sampled directions.
inline OracleResult sampled_pd(const TriangleMesh& a, const Vec3& qa, const TriangleMesh& b, int directions = 1024) {
  if (directions < 64) throw Error(ErrorCode::InvalidArgument, "sampled_pd needs at least 64 directions");
  OracleResult best;
  best.method = Method::DirectionalSampling;
  best.direction_count = directions;
  best.magnitude = std::numeric_limits<double>::infinity();
  for (const Vec3& u : sphere_directions(directions)) {
    const double t = directional_depth(a, qa, b, u);
    if (t < best.magnitude) {
      best.magnitude = t;
      best.pd_vector = t * u;
    }
  }
  return best;
}

/// |pd_approx - pd_exact| / (2 vbar_a + 2 vbar_b), vbar = mean vertex distance from the model origin.
inline double relative_error(double pd_approx, double pd_exact, const TriangleMesh& a, const TriangleMesh& b) {
  const double den = 2.0 * a.mean_vertex_magnitude() + 2.0 * b.mean_vertex_magnitude();
  if (!(den > 0.0)) throw Error(ErrorCode::ZeroDenominator, "mean vertex magnitudes are zero");
  return std::abs(pd_approx - pd_exact) / den;
}

}  // namespace polydepth::oracle
