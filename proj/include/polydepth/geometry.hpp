#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "polydepth/mesh.hpp"

// Closest-point and intersection primitives on points, segments and triangles.
namespace polydepth::geom {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Feature of a triangle on which a closest point lies.
enum class TriRegion { Face, Edge0, Edge1, Edge2, Vertex0, Vertex1, Vertex2 };

inline bool is_vertex(TriRegion r) { return r == TriRegion::Vertex0 || r == TriRegion::Vertex1 || r == TriRegion::Vertex2; }
inline bool is_edge(TriRegion r) { return r == TriRegion::Edge0 || r == TriRegion::Edge1 || r == TriRegion::Edge2; }
// Edge k joins corners k and (k+1)%3.
inline int edge_index(TriRegion r) { return static_cast<int>(r) - static_cast<int>(TriRegion::Edge0); }
inline int vertex_index(TriRegion r) { return static_cast<int>(r) - static_cast<int>(TriRegion::Vertex0); }

struct PointTriangleClosest {
  Vec3 point;
  TriRegion region;
};

/// Closest point on triangle (a, b, c) to p, with the Voronoi region it falls in.
inline PointTriangleClosest closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return {a, TriRegion::Vertex0};

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return {b, TriRegion::Vertex1};

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return {a + v * ab, TriRegion::Edge0};
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return {c, TriRegion::Vertex2};

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return {a + w * ac, TriRegion::Edge2};
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return {b + w * (c - b), TriRegion::Edge1};
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom;
  const double w = vc * denom;
  return {a + ab * v + ac * w, TriRegion::Face};
}

inline PointTriangleClosest closest_point_on_triangle(const Vec3& p, const TriangleCorners& t) {
  return closest_point_on_triangle(p, t[0], t[1], t[2]);
}

struct SegmentClosest {
  double s = 0.0;  // parameter on the first segment
  double t = 0.0;  // parameter on the second segment
  Vec3 p1;
  Vec3 p2;
  double dist2 = 0.0;
  bool parallel = false;
};

/// Closest points between segments [p1, q1] and [p2, q2].
inline SegmentClosest closest_segment_segment(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2) {
  SegmentClosest out;
  const Vec3 d1 = q1 - p1;
  const Vec3 d2 = q2 - p2;
  const Vec3 r = p1 - p2;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  constexpr double kTiny = 1e-300;

  if (a <= kTiny && e <= kTiny) {
    out.p1 = p1;
    out.p2 = p2;
    out.dist2 = (p1 - p2).squaredNorm();
    out.parallel = true;
    return out;
  }
  double s = 0.0;
  double t = 0.0;
  if (a <= kTiny) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= kTiny) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      out.parallel = denom <= 1e-14 * a * e;
      s = out.parallel ? 0.0 : std::clamp((b * f - c * e) / denom, 0.0, 1.0);
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  out.s = s;
  out.t = t;
  out.p1 = p1 + d1 * s;
  out.p2 = p2 + d2 * t;
  out.dist2 = (out.p1 - out.p2).squaredNorm();
  return out;
}

inline double segment_segment_distance(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2) {
  return std::sqrt(closest_segment_segment(p1, q1, p2, q2).dist2);
}

/// Inclusive test: does segment [p0, p1] touch triangle t at a point off the plane-parallel case?
/// Writes the crossing point. Segments lying in the triangle plane return false; callers
/// cover that case through edge/vertex distances.
inline bool segment_hits_triangle(const Vec3& p0, const Vec3& p1, const TriangleCorners& t, Vec3* hit) {
  const Vec3 n = (t[1] - t[0]).cross(t[2] - t[0]);
  const double s0 = n.dot(p0 - t[0]);
  const double s1 = n.dot(p1 - t[0]);
  if ((s0 > 0.0 && s1 > 0.0) || (s0 < 0.0 && s1 < 0.0) || s0 == s1) return false;
  const Vec3 x = p0 + (s0 / (s0 - s1)) * (p1 - p0);
  for (int k = 0; k < 3; ++k) {
    const Vec3& a = t[k];
    const Vec3& b = t[(k + 1) % 3];
    if (n.dot((b - a).cross(x - a)) < 0.0) return false;
  }
  if (hit) *hit = x;
  return true;
}

/// Which pair of features realizes a triangle-triangle distance.
enum class PairFeature { Crossing, VertexFace, FaceVertex, EdgeEdge };

struct TriangleDistance {
  double distance = kInf;
  Vec3 pa = Vec3::Zero();  // witness on the first triangle
  Vec3 pb = Vec3::Zero();  // witness on the second triangle
  PairFeature feature = PairFeature::Crossing;
};

/// Exact Euclidean distance between two triangles (0 when they touch or intersect).
inline TriangleDistance triangle_distance(const TriangleCorners& a, const TriangleCorners& b) {
  TriangleDistance best;
  Vec3 hit;
  for (int i = 0; i < 3; ++i) {
    if (segment_hits_triangle(a[i], a[(i + 1) % 3], b, &hit)) return {0.0, hit, hit, PairFeature::Crossing};
    if (segment_hits_triangle(b[i], b[(i + 1) % 3], a, &hit)) return {0.0, hit, hit, PairFeature::Crossing};
  }
  double best2 = kInf;
  for (int i = 0; i < 3; ++i) {
    const auto cb = closest_point_on_triangle(a[i], b);
    const double d2 = (a[i] - cb.point).squaredNorm();
    if (d2 < best2) {
      best2 = d2;
      best.pa = a[i];
      best.pb = cb.point;
      best.feature = PairFeature::VertexFace;
    }
    const auto ca = closest_point_on_triangle(b[i], a);
    const double e2 = (b[i] - ca.point).squaredNorm();
    if (e2 < best2) {
      best2 = e2;
      best.pa = ca.point;
      best.pb = b[i];
      best.feature = PairFeature::FaceVertex;
    }
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const auto ss = closest_segment_segment(a[i], a[(i + 1) % 3], b[j], b[(j + 1) % 3]);
      if (ss.dist2 < best2) {
        best2 = ss.dist2;
        best.pa = ss.p1;
        best.pb = ss.p2;
        best.feature = PairFeature::EdgeEdge;
      }
    }
  }
  best.distance = std::sqrt(best2);
  return best;
}

/// True when segment [p0, p1] passes through the interior of triangle t by more than
/// tol on both sides of its plane and more than tol inside its boundary.
inline bool segment_pierces_triangle(const Vec3& p0, const Vec3& p1, const TriangleCorners& t, const Vec3& unit_normal,
                                     double tol) {
  const double s0 = unit_normal.dot(p0 - t[0]);
  const double s1 = unit_normal.dot(p1 - t[0]);
  if (!((s0 > tol && s1 < -tol) || (s0 < -tol && s1 > tol))) return false;
  const Vec3 x = p0 + (s0 / (s0 - s1)) * (p1 - p0);
  for (int k = 0; k < 3; ++k) {
    const Vec3& a = t[k];
    const Vec3 edge = t[(k + 1) % 3] - a;
    const Vec3 inward = unit_normal.cross(edge);
    const double len = inward.norm();
    if (len == 0.0 || inward.dot(x - a) / len <= tol) return false;
  }
  return true;
}

/// Interpenetration beyond tol: some edge of one triangle pierces the other.
/// Touching configurations (shared boundary points, coplanar overlap) do not count.
inline bool triangles_penetrate(const TriangleCorners& a, const TriangleCorners& b, double tol) {
  const Vec3 na = (a[1] - a[0]).cross(a[2] - a[0]).normalized();
  const Vec3 nb = (b[1] - b[0]).cross(b[2] - b[0]).normalized();
  for (int i = 0; i < 3; ++i) {
    if (segment_pierces_triangle(a[i], a[(i + 1) % 3], b, nb, tol)) return true;
    if (segment_pierces_triangle(b[i], b[(i + 1) % 3], a, na, tol)) return true;
  }
  return false;
}

inline TriangleCorners translated(const TriangleCorners& t, const Vec3& d) { return {t[0] + d, t[1] + d, t[2] + d}; }

}  // namespace polydepth::geom
