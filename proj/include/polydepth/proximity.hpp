#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <tuple>
#include <utility>
#include <vector>

#include "polydepth/bvh.hpp"
#include "polydepth/error.hpp"
#include "polydepth/geometry.hpp"
#include "polydepth/mesh.hpp"

namespace polydepth {

/// A mesh together with its hierarchy. Posed copies share connectivity.
struct Body {
  TriangleMesh mesh;
  Bvh bvh;

  static Body from_mesh(TriangleMesh m, int leaf_capacity = 2) {
    Bvh h = Bvh::build(m, leaf_capacity);
    return Body{std::move(m), std::move(h)};
  }

  Body posed(const Pose& pose) const { return Body{mesh.transformed(pose), bvh.transformed(pose)}; }

  double radius() const { return mesh.bounding_radius(); }
};

enum class CollisionStatus { Free, InContact, Penetrating };

inline const char* to_string(CollisionStatus s) {
  switch (s) {
    case CollisionStatus::Free: return "free";
    case CollisionStatus::InContact: return "in-contact";
    case CollisionStatus::Penetrating: return "penetrating";
  }
  return "unknown";
}

struct ProximityOptions {
  double contact_tolerance = 1e-5;       // epsilon
  double penetration_tolerance = 1e-6;   // crossing depth that counts as interpenetration
  int feature_cap = 16;
  double dedup_angle = 1e-6;
  double dedup_bias = 1e-12;             // absolute; see for_bodies()
  double scale = 1.0;                    // max bounding radius of the pair

  /// Tolerances scaled to the pair: epsilon = epsilon_scale * max(r_a, r_b).
  static ProximityOptions for_bodies(const Body& a, const Body& b, double epsilon_scale = 1e-5, int feature_cap = 16) {
    if (!(epsilon_scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon scale must be positive");
    if (feature_cap < 1) throw Error(ErrorCode::InvalidArgument, "feature cap must be >= 1");
    ProximityOptions o;
    o.scale = std::max(a.radius(), b.radius());
    o.contact_tolerance = epsilon_scale * o.scale;
    o.penetration_tolerance = 0.1 * o.contact_tolerance;
    o.feature_cap = feature_cap;
    o.dedup_bias = 1e-7 * o.scale;
    return o;
  }
};

namespace detail {

// Visits triangle pairs whose hierarchy bounds come within `threshold`.
// The visitor returns false to stop the traversal.
template <class Visit>
void for_each_near_pair(const Body& a, const Vec3& qa, const Body& b, double threshold, QueryStats& stats,
                        Visit&& visit) {
  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [ia, ib] = stack.back();
    stack.pop_back();
    const BvhNode& na = a.bvh.node(ia);
    const BvhNode& nb = b.bvh.node(ib);
    ++stats.bv_tests;
    if (node_distance(na.volume, qa, nb.volume) > threshold) continue;
    if (na.is_leaf() && nb.is_leaf()) {
      for (int ta : a.bvh.triangles_of(na)) {
        for (int tb : b.bvh.triangles_of(nb)) {
          ++stats.primitive_tests;
          if (!visit(ta, tb)) return;
        }
      }
      continue;
    }
    const bool split_a = nb.is_leaf() || (!na.is_leaf() && na.volume.radius >= nb.volume.radius);
    if (split_a) {
      stack.push_back({na.left + 1, ib});
      stack.push_back({na.left, ib});
    } else {
      stack.push_back({ia, nb.left + 1});
      stack.push_back({ia, nb.left});
    }
  }
}

}  // namespace detail

namespace detail {

// Touching pairs hide overlap when boundaries coincide (aligned boxes). A touching triangle
// whose centroid lies inside the other closed body, farther than epsilon from its surface,
// settles it.
inline bool touching_overlap(const Body& a, const Vec3& qa, const Body& b, const ProximityOptions& opt,
                             const std::vector<std::pair<int, int>>& touching) {
  if (touching.empty() || !(a.mesh.is_closed() || b.mesh.is_closed())) return false;
  std::vector<int> ta, tb;
  for (const auto& [ia, ib] : touching) {
    ta.push_back(ia);
    tb.push_back(ib);
  }
  auto unique = [](std::vector<int>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  unique(ta);
  unique(tb);
  auto center = [](const TriangleCorners& c) { return Vec3((c[0] + c[1] + c[2]) / 3.0); };
  for (int ia : ta) {
    const Vec3 p = center(a.mesh.corners(ia)) + qa;
    if (point_inside(b.mesh, b.bvh, p) && point_mesh_distance(b.mesh, b.bvh, p) > opt.contact_tolerance) return true;
  }
  for (int ib : tb) {
    const Vec3 p = center(b.mesh.corners(ib)) - qa;
    if (point_inside(a.mesh, a.bvh, p) && point_mesh_distance(a.mesh, a.bvh, p) > opt.contact_tolerance) return true;
  }
  return false;
}

}  // namespace detail

/// Free, in contact (within epsilon) or penetrating. Penetration means some edge pierces a
/// triangle of the other body by more than the penetration tolerance. Pairs that only touch
/// (coplanar or boundary contact) get a second look when a body is closed: a touching
/// triangle whose centroid sits inside the other body, farther than epsilon from its
/// surface, also counts. That catches overlaps between aligned faces.
/// `min_gap`, when given, receives the smallest pair distance within epsilon (inf if none).
inline CollisionStatus classify(const Body& a, const Vec3& qa, const Body& b, const ProximityOptions& opt,
                                QueryStats* stats = nullptr, double* min_gap = nullptr) {
  QueryStats local;
  double gap = geom::kInf;
  bool contact = false;
  bool penetrating = false;
  std::vector<std::pair<int, int>> touching;
  detail::for_each_near_pair(a, qa, b, opt.contact_tolerance, stats ? *stats : local, [&](int ia, int ib) {
    const auto ta = geom::translated(a.mesh.corners(ia), qa);
    const auto tb = b.mesh.corners(ib);
    if (geom::triangles_penetrate(ta, tb, opt.penetration_tolerance)) {
      penetrating = true;
      return false;
    }
    const double d = geom::triangle_distance(ta, tb).distance;
    if (d <= opt.contact_tolerance) contact = true;
    if (d <= opt.penetration_tolerance) touching.emplace_back(ia, ib);
    gap = std::min(gap, d);
    return true;
  });
  if (min_gap) *min_gap = gap;
  if (penetrating || detail::touching_overlap(a, qa, b, opt, touching)) return CollisionStatus::Penetrating;
  return contact ? CollisionStatus::InContact : CollisionStatus::Free;
}

struct ClosestPair {
  double distance = geom::kInf;
  Vec3 witness_a = Vec3::Zero();
  Vec3 witness_b = Vec3::Zero();
  int triangle_a = -1;
  int triangle_b = -1;
};

/// Exact minimum triangle-pair distance, best-first over both hierarchies.
inline ClosestPair closest_pair(const Body& a, const Vec3& qa, const Body& b, QueryStats* stats = nullptr) {
  QueryStats local;
  QueryStats& st = stats ? *stats : local;
  ClosestPair best;
  struct Item {
    double bound;
    int ia;
    int ib;
  };
  std::vector<Item> stack{{0.0, 0, 0}};
  while (!stack.empty()) {
    const Item it = stack.back();
    stack.pop_back();
    if (it.bound >= best.distance) continue;
    const BvhNode& na = a.bvh.node(it.ia);
    const BvhNode& nb = b.bvh.node(it.ib);
    if (na.is_leaf() && nb.is_leaf()) {
      for (int ta : a.bvh.triangles_of(na)) {
        for (int tb : b.bvh.triangles_of(nb)) {
          ++st.primitive_tests;
          const auto td = geom::triangle_distance(geom::translated(a.mesh.corners(ta), qa), b.mesh.corners(tb));
          if (td.distance < best.distance) {
            best = {td.distance, td.pa, td.pb, ta, tb};
            if (best.distance == 0.0) return best;
          }
        }
      }
      continue;
    }
    const bool split_a = nb.is_leaf() || (!na.is_leaf() && na.volume.radius >= nb.volume.radius);
    Item c0 = split_a ? Item{0.0, na.left, it.ib} : Item{0.0, it.ia, nb.left};
    Item c1 = split_a ? Item{0.0, na.left + 1, it.ib} : Item{0.0, it.ia, nb.left + 1};
    c0.bound = node_distance(a.bvh.node(c0.ia).volume, qa, b.bvh.node(c0.ib).volume);
    c1.bound = node_distance(a.bvh.node(c1.ia).volume, qa, b.bvh.node(c1.ib).volume);
    st.bv_tests += 2;
    if (c0.bound > c1.bound) std::swap(c0, c1);
    stack.push_back(c1);
    stack.push_back(c0);
  }
  return best;
}

inline double min_distance(const Body& a, const Vec3& qa, const Body& b, QueryStats* stats = nullptr) {
  return closest_pair(a, qa, b, stats).distance;
}

enum class FeatureKind { VF, FV, EE };

inline const char* to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::VF: return "VF";
    case FeatureKind::FV: return "FV";
    case FeatureKind::EE: return "EE";
  }
  return "?";
}

/// One primitive contact and its configuration-space plane j.q = c.
///
/// index_a / index_b: VF uses (vertex of A, -1) and (triangle of B, -1); FV mirrors that;
/// EE stores the sorted vertex pair of each edge. `normal` points from B toward A.
struct ContactFeature {
  FeatureKind kind = FeatureKind::VF;
  std::array<int, 2> index_a{-1, -1};
  std::array<int, 2> index_b{-1, -1};
  Vec3 witness_a = Vec3::Zero();
  Vec3 witness_b = Vec3::Zero();
  Vec3 normal = Vec3::UnitX();
  double bias = 0.0;
  double gap = 0.0;  // normal . (witness_a - witness_b)
  int triangle_a = -1;  // triangle pair that produced the contact
  int triangle_b = -1;

  Eigen::RowVector3d row() const { return normal.transpose(); }
  auto key() const { return std::make_tuple(static_cast<int>(kind), index_a, index_b); }
};

namespace detail {

struct FeatureContext {
  const Body& a;
  const Vec3& qa;
  const Body& b;
  const ProximityOptions& opt;
  Vec3 approach;
};

// Orient n from B toward A: witnesses first, then approach direction, then triangle centroids.
inline Vec3 orient_normal(Vec3 n, const Vec3& wa, const Vec3& wb, const TriangleCorners& ta, const TriangleCorners& tb,
                          const FeatureContext& ctx) {
  const double s = n.dot(wa - wb);
  const double floor = 1e-4 * ctx.opt.contact_tolerance;
  if (std::abs(s) > floor) return s > 0.0 ? n : Vec3(-n);
  const double av = n.dot(ctx.approach);
  if (std::abs(av) > 1e-9 * ctx.approach.norm()) return av < 0.0 ? n : Vec3(-n);
  const Vec3 ca = (ta[0] + ta[1] + ta[2]) / 3.0;
  const Vec3 cb = (tb[0] + tb[1] + tb[2]) / 3.0;
  return n.dot(ca - cb) >= 0.0 ? n : Vec3(-n);
}

inline bool foot_inside(const Vec3& foot, const TriangleCorners& t, const Vec3& unit_normal, double tol) {
  for (int k = 0; k < 3; ++k) {
    const Vec3 inward = unit_normal.cross(t[(k + 1) % 3] - t[k]);
    const double len = inward.norm();
    if (len == 0.0 || inward.dot(foot - t[k]) / len < -tol) return false;
  }
  return true;
}

// A vertex-face plane only constrains motion when the vertex's one-ring stays on the
// positive side of it. Vertices sitting on the face's rim with edges reaching past it
// (flush boxes offset sideways) would otherwise lock a sliding direction.
inline bool ring_above(const TriangleMesh& vmesh, int v, const Vec3& n, double tol) {
  const Vec3 p = vmesh.vertices()[v];
  const auto [lo, hi] = vmesh.neighbors(v);
  for (const int* w = lo; w != hi; ++w) {
    const Vec3 e = vmesh.vertices()[*w] - p;
    if (n.dot(e) < -tol - 1e-6 * e.norm()) return false;
  }
  return true;
}

// Vertex p (mesh `vmesh`, id v) against triangle tri of mesh `fmesh`. Emits VF-style
// contacts with the given kind; `vertex_on_a` says which body owns the vertex.
template <class Emit>
void vertex_face_contacts(const Vec3& p, int v, const TriangleMesh& vmesh, const TriangleMesh& fmesh, int tri, const TriangleCorners& tc,
                          const Vec3& fshift, bool vertex_on_a, const TriangleCorners& other_tri,
                          const FeatureContext& ctx, Emit&& emit) {
  const double eps = ctx.opt.contact_tolerance;
  const auto cp = geom::closest_point_on_triangle(p, tc);
  if ((p - cp.point).norm() > eps) return;

  auto make = [&](int face, const Vec3& on_face, const Vec3& face_n) {
    ContactFeature f;
    f.kind = vertex_on_a ? FeatureKind::VF : FeatureKind::FV;
    const Vec3 wa = vertex_on_a ? p : on_face;
    const Vec3 wb = vertex_on_a ? on_face : p;
    const auto& ta = vertex_on_a ? other_tri : tc;
    const auto& tb = vertex_on_a ? tc : other_tri;
    f.index_a = vertex_on_a ? std::array<int, 2>{v, -1} : std::array<int, 2>{face, -1};
    f.index_b = vertex_on_a ? std::array<int, 2>{face, -1} : std::array<int, 2>{v, -1};
    f.witness_a = wa;
    f.witness_b = wb;
    // Closed faces know their outside; B's faces point toward A, A's faces away from B.
    const int sign = fmesh.orientation() * (vertex_on_a ? 1 : -1);
    f.normal = sign != 0 ? Vec3(sign * face_n) : orient_normal(face_n, wa, wb, ta, tb, ctx);
    if (!ring_above(vmesh, v, vertex_on_a ? f.normal : Vec3(-f.normal), eps)) return;
    emit(f);
  };

  const Vec3 n = (tc[1] - tc[0]).cross(tc[2] - tc[0]).normalized();
  const Vec3 foot = p - n.dot(p - tc[0]) * n;
  if (foot_inside(foot, tc, n, eps)) {
    make(tri, foot, n);
    return;
  }
  if (!geom::is_edge(cp.region)) return;  // vertex-vertex: no plane
  const int k = geom::edge_index(cp.region);
  const auto& idx = fmesh.triangles()[tri];
  for (int face : fmesh.faces_on_edge(idx[k], idx[(k + 1) % 3])) {
    const auto fc = geom::translated(fmesh.corners(face), fshift);
    const Vec3 fn = (fc[1] - fc[0]).cross(fc[2] - fc[0]).normalized();
    make(face, cp.point, fn);
  }
}

// All primitive contacts between triangle ia of A (shifted by qa) and ib of B.
template <class Emit>
void pair_features(int ia, int ib, const FeatureContext& ctx, Emit&& emit) {
  const double eps = ctx.opt.contact_tolerance;
  const auto ta = geom::translated(ctx.a.mesh.corners(ia), ctx.qa);
  const auto tb = ctx.b.mesh.corners(ib);
  const auto& fa = ctx.a.mesh.triangles()[ia];
  const auto& fb = ctx.b.mesh.triangles()[ib];

  for (int k = 0; k < 3; ++k) {
    vertex_face_contacts(ta[k], fa[k], ctx.a.mesh, ctx.b.mesh, ib, tb, Vec3::Zero(), true, ta, ctx, emit);
    vertex_face_contacts(tb[k], fb[k], ctx.b.mesh, ctx.a.mesh, ia, ta, ctx.qa, false, tb, ctx, emit);
  }
  constexpr double kInterior = 1e-9;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const Vec3& a0 = ta[i];
      const Vec3& a1 = ta[(i + 1) % 3];
      const Vec3& b0 = tb[j];
      const Vec3& b1 = tb[(j + 1) % 3];
      const auto ss = geom::closest_segment_segment(a0, a1, b0, b1);
      if (ss.parallel || std::sqrt(ss.dist2) > eps) continue;
      if (ss.s <= kInterior || ss.s >= 1.0 - kInterior || ss.t <= kInterior || ss.t >= 1.0 - kInterior) continue;
      const Vec3 cr = (a1 - a0).cross(b1 - b0);
      if (cr.norm() == 0.0) continue;
      ContactFeature f;
      f.kind = FeatureKind::EE;
      f.index_a = {std::min(fa[i], fa[(i + 1) % 3]), std::max(fa[i], fa[(i + 1) % 3])};
      f.index_b = {std::min(fb[j], fb[(j + 1) % 3]), std::max(fb[j], fb[(j + 1) % 3])};
      f.witness_a = ss.p1;
      f.witness_b = ss.p2;
      f.normal = orient_normal(cr.normalized(), ss.p1, ss.p2, ta, tb, ctx);
      emit(f);
    }
  }
}

inline void finish_feature(ContactFeature& f, const Vec3& qa) {
  f.bias = f.normal.dot(qa);
  f.gap = f.normal.dot(f.witness_a - f.witness_b);
}

}  // namespace detail

/// Every primitive contact within epsilon, one entry per distinct feature pair, in
/// traversal order. Throws when the pair penetrates or nothing is within epsilon.
inline std::vector<ContactFeature> raw_contact_features(const Body& a, const Vec3& qa, const Body& b,
                                                        const ProximityOptions& opt, const Vec3& approach = Vec3::Zero(),
                                                        QueryStats* stats = nullptr) {
  QueryStats local;
  std::vector<ContactFeature> out;
  std::set<decltype(ContactFeature{}.key())> seen;
  bool penetrating = false;
  bool near = false;
  std::vector<std::pair<int, int>> touching;
  const detail::FeatureContext ctx{a, qa, b, opt, approach};
  detail::for_each_near_pair(a, qa, b, opt.contact_tolerance, stats ? *stats : local, [&](int ia, int ib) {
    const auto ta = geom::translated(a.mesh.corners(ia), qa);
    const auto tb = b.mesh.corners(ib);
    if (geom::triangles_penetrate(ta, tb, opt.penetration_tolerance)) {
      penetrating = true;
      return false;
    }
    const double d = geom::triangle_distance(ta, tb).distance;
    if (d > opt.contact_tolerance) return true;
    if (d <= opt.penetration_tolerance) touching.emplace_back(ia, ib);
    near = true;
    detail::pair_features(ia, ib, ctx, [&](ContactFeature f) {
      if (!seen.insert(f.key()).second) return;
      f.triangle_a = ia;
      f.triangle_b = ib;
      detail::finish_feature(f, qa);
      out.push_back(f);
    });
    return true;
  });
  if (penetrating || detail::touching_overlap(a, qa, b, opt, touching)) {
    throw Error(ErrorCode::NotInContact, "configuration is penetrating");
  }
  if (!near) throw Error(ErrorCode::NotInContact, "no triangle pair within the contact tolerance");
  return out;
}

/// Sort by distance of the plane from the origin, merge coincident planes, cap the count.
inline std::vector<ContactFeature> reduce_features(std::vector<ContactFeature> raw, const ProximityOptions& opt) {
  std::stable_sort(raw.begin(), raw.end(), [](const ContactFeature& x, const ContactFeature& y) {
    const double ax = std::abs(x.bias);
    const double ay = std::abs(y.bias);
    if (ax != ay) return ax < ay;
    return x.key() < y.key();
  });
  const double cos_tol = std::cos(opt.dedup_angle);
  std::vector<ContactFeature> out;
  for (const auto& f : raw) {
    if (static_cast<int>(out.size()) >= opt.feature_cap) break;
    const bool dup = std::any_of(out.begin(), out.end(), [&](const ContactFeature& g) {
      return f.normal.dot(g.normal) >= cos_tol && std::abs(f.bias - g.bias) <= opt.dedup_bias;
    });
    if (!dup) out.push_back(f);
  }
  return out;
}

/// Contact planes at an in-contact configuration, ready for stacking into J q >= c.
/// `approach` orients normals whose witnesses coincide (A moving along it made the contact).
inline std::vector<ContactFeature> contact_features(const Body& a, const Vec3& qa, const Body& b,
                                                    const ProximityOptions& opt, const Vec3& approach = Vec3::Zero(),
                                                    QueryStats* stats = nullptr) {
  return reduce_features(raw_contact_features(a, qa, b, opt, approach, stats), opt);
}

}  // namespace polydepth
