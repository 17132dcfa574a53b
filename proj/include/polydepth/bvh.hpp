#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Eigenvalues>

#include "polydepth/error.hpp"
#include "polydepth/geometry.hpp"
#include "polydepth/mesh.hpp"

namespace polydepth {

/// Swept-sphere volume: all points within `radius` of the segment [p0, p1].
/// A point-swept sphere has p0 == p1.
struct Ssv {
  Vec3 p0 = Vec3::Zero();
  Vec3 p1 = Vec3::Zero();
  double radius = 0.0;

  bool is_sphere() const { return p0 == p1; }
  bool contains(const Vec3& p, double slack = 0.0) const {
    const Vec3 d = p1 - p0;
    const double len2 = d.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - p0).dot(d) / len2, 0.0, 1.0) : 0.0;
    return (p - (p0 + t * d)).norm() <= radius + slack;
  }
};

struct BvhNode {
  Ssv volume;
  int left = -1;  // right child is left + 1; -1 marks a leaf
  int first = 0;  // range into Bvh::triangle_order()
  int count = 0;

  bool is_leaf() const { return left < 0; }
};

/// Counters for bounding-volume and primitive pair work (N_bv and N_p).
struct QueryStats {
  std::uint64_t bv_tests = 0;
  std::uint64_t primitive_tests = 0;
  std::uint64_t ca_steps = 0;

  QueryStats& operator+=(const QueryStats& o) {
    bv_tests += o.bv_tests;
    primitive_tests += o.primitive_tests;
    ca_steps += o.ca_steps;
    return *this;
  }
};

namespace detail {

// Capsule along the principal axis, or a sphere when that is smaller.
inline Ssv fit_ssv(std::span<const Vec3> pts) {
  Vec3 mean = Vec3::Zero();
  Aabb box;
  for (const auto& p : pts) {
    mean += p;
    box.extend(p);
  }
  mean /= static_cast<double>(pts.size());

  Mat3 cov = Mat3::Zero();
  for (const auto& p : pts) {
    const Vec3 d = p - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  Vec3 axis = eig.eigenvectors().col(2);
  if (!axis.allFinite() || axis.norm() == 0.0) axis = Vec3::UnitX();
  axis.normalize();

  double r = 0.0;
  for (const auto& p : pts) {
    const Vec3 d = p - mean;
    r = std::max(r, (d - d.dot(axis) * axis).norm());
  }
  double lo_end = std::numeric_limits<double>::infinity();
  double hi_end = -std::numeric_limits<double>::infinity();
  for (const auto& p : pts) {
    const Vec3 d = p - mean;
    const double s = d.dot(axis);
    const double h = (d - s * axis).norm();
    const double w = std::sqrt(std::max(0.0, r * r - h * h));
    lo_end = std::min(lo_end, s + w);
    hi_end = std::max(hi_end, s - w);
  }
  Ssv capsule;
  if (lo_end <= hi_end) {
    capsule.p0 = mean + lo_end * axis;
    capsule.p1 = mean + hi_end * axis;
  } else {
    capsule.p0 = capsule.p1 = mean + 0.5 * (lo_end + hi_end) * axis;
  }
  capsule.radius = r;

  Ssv sphere;
  sphere.p0 = sphere.p1 = box.center();
  for (const auto& p : pts) sphere.radius = std::max(sphere.radius, (p - sphere.p0).norm());

  const double cap_len = (capsule.p1 - capsule.p0).norm();
  const double cap_size = capsule.radius * capsule.radius * (4.0 / 3.0 * capsule.radius + cap_len);
  const double sph_size = 4.0 / 3.0 * sphere.radius * sphere.radius * sphere.radius;
  Ssv out = cap_size <= sph_size ? capsule : sphere;

  // Absorb rounding in the projections above.
  const double scale = box.diagonal() + out.p0.cwiseAbs().maxCoeff();
  out.radius += 1e-12 * scale + 1e-300;
  for (const auto& p : pts) {
    const Vec3 d = out.p1 - out.p0;
    const double len2 = d.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - out.p0).dot(d) / len2, 0.0, 1.0) : 0.0;
    out.radius = std::max(out.radius, (p - (out.p0 + t * d)).norm() * (1.0 + 1e-12));
  }
  return out;
}

}  // namespace detail

/// Swept-sphere hierarchy over the non-degenerate triangles of one mesh.
/// Built top-down by median split of triangle centroids along the longest extent.
class Bvh {
 public:
  static Bvh build(const TriangleMesh& mesh, int leaf_capacity = 2) {
    if (leaf_capacity < 1) throw Error(ErrorCode::InvalidArgument, "leaf capacity must be >= 1");
    Bvh bvh;
    bvh.leaf_capacity_ = leaf_capacity;
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
      if (!mesh.is_degenerate(t)) bvh.order_.push_back(static_cast<int>(t));
    }
    if (bvh.order_.empty()) throw Error(ErrorCode::EmptyMesh, "no non-degenerate triangles");

    std::vector<Vec3> centers(mesh.triangle_count());
    for (int t : bvh.order_) {
      const auto c = mesh.corners(t);
      centers[t] = (c[0] + c[1] + c[2]) / 3.0;
    }

    struct Task {
      int node;
      int first;
      int count;
    };
    bvh.nodes_.reserve(2 * bvh.order_.size());
    bvh.nodes_.push_back({});
    std::vector<Task> work{{0, 0, static_cast<int>(bvh.order_.size())}};
    std::vector<Vec3> pts;
    while (!work.empty()) {
      const Task task = work.back();
      work.pop_back();
      pts.clear();
      for (int i = task.first; i < task.first + task.count; ++i) {
        const auto c = mesh.corners(bvh.order_[i]);
        pts.insert(pts.end(), c.begin(), c.end());
      }
      BvhNode& node = bvh.nodes_[task.node];
      node.volume = detail::fit_ssv(pts);
      node.first = task.first;
      node.count = task.count;
      if (task.count <= leaf_capacity) continue;

      Aabb cbox;
      for (int i = task.first; i < task.first + task.count; ++i) cbox.extend(centers[bvh.order_[i]]);
      int axis = 0;
      cbox.extent().maxCoeff(&axis);
      const int half = task.count / 2;
      auto begin = bvh.order_.begin() + task.first;
      std::nth_element(begin, begin + half, begin + task.count, [&](int x, int y) {
        if (centers[x][axis] != centers[y][axis]) return centers[x][axis] < centers[y][axis];
        return x < y;
      });
      const int left = static_cast<int>(bvh.nodes_.size());
      bvh.nodes_[task.node].left = left;
      bvh.nodes_.push_back({});
      bvh.nodes_.push_back({});
      work.push_back({left + 1, task.first + half, task.count - half});
      work.push_back({left, task.first, half});
    }
    return bvh;
  }

  const std::vector<BvhNode>& nodes() const { return nodes_; }
  const BvhNode& node(int i) const { return nodes_[i]; }
  const BvhNode& root() const { return nodes_.front(); }
  int leaf_capacity() const { return leaf_capacity_; }

  std::span<const int> triangles_of(const BvhNode& n) const {
    return std::span<const int>(order_).subspan(n.first, n.count);
  }
  const std::vector<int>& triangle_order() const { return order_; }

  int height() const {
    int best = 0;
    std::vector<std::pair<int, int>> stack{{0, 1}};
    while (!stack.empty()) {
      auto [i, depth] = stack.back();
      stack.pop_back();
      best = std::max(best, depth);
      if (!nodes_[i].is_leaf()) {
        stack.push_back({nodes_[i].left, depth + 1});
        stack.push_back({nodes_[i].left + 1, depth + 1});
      }
    }
    return best;
  }

  /// Same topology with every volume moved rigidly; valid for mesh.transformed(pose).
  Bvh transformed(const Pose& pose) const {
    Bvh out = *this;
    for (auto& n : out.nodes_) {
      n.volume.p0 = pose.apply(n.volume.p0);
      n.volume.p1 = pose.apply(n.volume.p1);
    }
    return out;
  }

 private:
  std::vector<BvhNode> nodes_;
  std::vector<int> order_;
  int leaf_capacity_ = 2;
};

/// Exact distance between two swept-sphere volumes (a shifted by offset_a), clamped at 0.
/// Lower-bounds the distance between any triangles they enclose.
inline double node_distance(const Ssv& a, const Vec3& offset_a, const Ssv& b) {
  const double core = geom::segment_segment_distance(a.p0 + offset_a, a.p1 + offset_a, b.p0, b.p1);
  return std::max(0.0, core - a.radius - b.radius);
}

inline double node_distance(const BvhNode& a, const BvhNode& b) { return node_distance(a.volume, Vec3::Zero(), b.volume); }

/// Lower bound on how far volume a (shifted by offset_a) travels along v before it comes
/// within `gap` of volume b. Conservative advancement with motion bound mu = v.n on the
/// core segments. Returns +inf when the pair separates along v or the bound exceeds `limit`.
inline double node_directional_distance(const Ssv& a, const Vec3& offset_a, const Ssv& b, const Vec3& v,
                                        double gap = 0.0, double limit = geom::kInf) {
  const double vlen = v.norm();
  if (!(vlen > 0.0)) throw Error(ErrorCode::InvalidArgument, "zero direction");
  const Vec3 u = v / vlen;
  const double reach = a.radius + b.radius + gap;
  double s = 0.0;
  for (int iter = 0; iter < 32; ++iter) {
    const Vec3 shift = offset_a + s * u;
    const auto cl = geom::closest_segment_segment(a.p0 + shift, a.p1 + shift, b.p0, b.p1);
    const double core = std::sqrt(cl.dist2);
    const double d = core - reach;
    if (d <= 1e-3 * gap || d <= 1e-12 * reach) return s;
    const double mu = u.dot(cl.p2 - cl.p1) / core;
    if (mu <= 0.0) return geom::kInf;
    s += d / mu;
    if (s > limit) return geom::kInf;
  }
  return s;
}

inline double node_directional_distance(const BvhNode& a, const BvhNode& b, const Vec3& v) {
  return node_directional_distance(a.volume, Vec3::Zero(), b.volume, v);
}

/// Exact distance from a point to the mesh surface.
inline double point_mesh_distance(const TriangleMesh& mesh, const Bvh& bvh, const Vec3& p) {
  double best = geom::kInf;
  auto bound = [&](const BvhNode& n) {
    const Vec3 d = n.volume.p1 - n.volume.p0;
    const double len2 = d.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - n.volume.p0).dot(d) / len2, 0.0, 1.0) : 0.0;
    return std::max(0.0, (p - (n.volume.p0 + t * d)).norm() - n.volume.radius);
  };
  std::vector<std::pair<double, int>> stack{{bound(bvh.root()), 0}};
  while (!stack.empty()) {
    auto [lb, i] = stack.back();
    stack.pop_back();
    if (lb >= best) continue;
    const BvhNode& n = bvh.node(i);
    if (n.is_leaf()) {
      for (int t : bvh.triangles_of(n)) {
        const auto c = mesh.corners(t);
        best = std::min(best, (p - geom::closest_point_on_triangle(p, c).point).norm());
      }
      continue;
    }
    const double l0 = bound(bvh.node(n.left));
    const double l1 = bound(bvh.node(n.left + 1));
    if (l0 < l1) {
      stack.push_back({l1, n.left + 1});
      stack.push_back({l0, n.left});
    } else {
      stack.push_back({l0, n.left});
      stack.push_back({l1, n.left + 1});
    }
  }
  return best;
}

/// Number of triangles hit by the ray p + t*u, t > 0 (u unit).
inline int ray_crossings(const TriangleMesh& mesh, const Bvh& bvh, const Vec3& p, const Vec3& u) {
  const Vec3 far = p + u * (4.0 * ((p - mesh.centroid()).norm() + mesh.bounding_radius()) + 1.0);
  int hits = 0;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const BvhNode& n = bvh.node(stack.back());
    stack.pop_back();
    if (geom::segment_segment_distance(p, far, n.volume.p0, n.volume.p1) > n.volume.radius) continue;
    if (n.is_leaf()) {
      for (int t : bvh.triangles_of(n)) {
        Vec3 hit;
        if (geom::segment_hits_triangle(p, far, mesh.corners(t), &hit)) ++hits;
      }
      continue;
    }
    stack.push_back(n.left);
    stack.push_back(n.left + 1);
  }
  return hits;
}

/// Parity test on a closed mesh, majority over three fixed oblique rays.
/// Always false for meshes with boundary edges.
inline bool point_inside(const TriangleMesh& mesh, const Bvh& bvh, const Vec3& p) {
  if (!mesh.is_closed()) return false;
  static const Vec3 dirs[3] = {Vec3(0.5377, 0.8143, 0.2187).normalized(), Vec3(-0.6421, 0.2913, 0.7089).normalized(),
                               Vec3(0.1732, -0.7461, -0.6428).normalized()};
  int votes = 0;
  for (const auto& u : dirs) votes += ray_crossings(mesh, bvh, p, u) % 2;
  return votes >= 2;
}

}  // namespace polydepth
