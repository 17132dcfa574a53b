#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "polydepth/error.hpp"

namespace polydepth {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using TriangleIndices = std::array<int, 3>;
using TriangleCorners = std::array<Vec3, 3>;

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  Vec3 extent() const { return hi - lo; }
  Vec3 center() const { return 0.5 * (lo + hi); }
  double diagonal() const { return extent().norm(); }
};

/// Rigid placement of a mesh: v' = rotation * v + translation.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }

  static Pose from_translation(const Vec3& t) {
    Pose p;
    p.translation = t;
    return p;
  }

  /// Unit quaternion in (w, x, y, z) order; normalized before use.
  static Pose from_quaternion(double w, double x, double y, double z, const Vec3& t = Vec3::Zero()) {
    Eigen::Quaterniond q(w, x, y, z);
    if (q.norm() == 0.0) throw Error(ErrorCode::InvalidArgument, "zero quaternion");
    q.normalize();
    Pose p;
    p.rotation = q.toRotationMatrix();
    p.translation = t;
    return p;
  }

  bool is_valid(double tol = 1e-9) const {
    const Mat3 err = rotation.transpose() * rotation - Mat3::Identity();
    return err.cwiseAbs().maxCoeff() <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
  }

  Vec3 apply(const Vec3& v) const { return rotation * v + translation; }
};

namespace detail {

inline std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

// Pose-invariant connectivity shared between a mesh and its posed copies.
struct MeshTopology {
  std::vector<TriangleIndices> triangles;
  std::vector<std::uint8_t> degenerate;
  std::vector<std::pair<std::uint64_t, int>> edge_faces;  // sorted by edge key
  std::size_t live_count = 0;
  bool closed = false;  // every edge has exactly two live faces
  int orientation = 0;  // closed meshes: +1 wound outward, -1 inward
  std::vector<int> ring_start;  // CSR vertex adjacency over live edges
  std::vector<int> ring;
};

}  // namespace detail

/// Indexed triangle soup of one rigid body. Immutable after construction.
///
/// No manifoldness is assumed. Triangles whose area falls below
/// 1e-12 * r^2 (r = enclosing radius) are flagged degenerate and are skipped
/// by every proximity query.
class TriangleMesh {
 public:
  TriangleMesh() = default;

  TriangleMesh(std::vector<Vec3> vertices, std::vector<TriangleIndices> triangles)
      : vertices_(std::move(vertices)) {
    if (vertices_.empty() || triangles.empty()) {
      throw Error(ErrorCode::EmptyMesh, "mesh needs at least one vertex and one triangle");
    }
    const int n = static_cast<int>(vertices_.size());
    for (const auto& t : triangles) {
      for (int i : t) {
        if (i < 0 || i >= n) {
          throw Error(ErrorCode::IndexOutOfRange,
                      "triangle references vertex " + std::to_string(i) + " of " + std::to_string(n));
        }
      }
    }
    auto topo = std::make_shared<detail::MeshTopology>();
    topo->triangles = std::move(triangles);
    flag_degenerate(vertices_, *topo);
    build_edge_map(*topo);
    build_rings(vertices_.size(), *topo);
    if (topo->closed) {
      double vol = 0.0;
      for (std::size_t t = 0; t < topo->triangles.size(); ++t) {
        if (topo->degenerate[t]) continue;
        const auto& f = topo->triangles[t];
        vol += vertices_[f[0]].dot(vertices_[f[1]].cross(vertices_[f[2]]));
      }
      topo->orientation = vol > 0.0 ? 1 : (vol < 0.0 ? -1 : 0);
    }
    topology_ = std::move(topo);
    refresh_cached();
  }

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<TriangleIndices>& triangles() const { return topology_->triangles; }
  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t triangle_count() const { return topology_ ? topology_->triangles.size() : 0; }
  std::size_t live_triangle_count() const { return topology_ ? topology_->live_count : 0; }
  bool is_degenerate(std::size_t t) const { return topology_->degenerate[t] != 0; }
  /// Watertight in the combinatorial sense; enables inside/outside tests.
  bool is_closed() const { return topology_ && topology_->closed; }

  const Vec3& centroid() const { return centroid_; }
  double bounding_radius() const { return bounding_radius_; }
  double mean_vertex_magnitude() const { return mean_vertex_magnitude_; }
  const Aabb& bounds() const { return bounds_; }

  TriangleCorners corners(std::size_t t) const {
    const auto& f = topology_->triangles[t];
    return {vertices_[f[0]], vertices_[f[1]], vertices_[f[2]]};
  }

  /// Unit geometric normal (right-hand rule on the stored winding).
  Vec3 face_normal(std::size_t t) const {
    const auto c = corners(t);
    return (c[1] - c[0]).cross(c[2] - c[0]).normalized();
  }

  /// Non-degenerate triangles containing the undirected edge (a, b).
  std::vector<int> faces_on_edge(int a, int b) const {
    const auto key = detail::edge_key(a, b);
    const auto& em = topology_->edge_faces;
    auto lo = std::lower_bound(em.begin(), em.end(), std::make_pair(key, std::numeric_limits<int>::min()));
    std::vector<int> out;
    for (; lo != em.end() && lo->first == key; ++lo) out.push_back(lo->second);
    return out;
  }

  /// +1 when closed and wound outward, -1 when closed and wound inward, else 0.
  int orientation() const { return topology_ ? topology_->orientation : 0; }

  /// Vertices sharing a live edge with v.
  std::pair<const int*, const int*> neighbors(int v) const {
    const auto& t = *topology_;
    return {t.ring.data() + t.ring_start[v], t.ring.data() + t.ring_start[v + 1]};
  }

  /// FNV-1a over vertex coordinates and indices; used to key cached preprocess data.
  std::uint64_t content_hash() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* data, std::size_t len) {
      const auto* p = static_cast<const unsigned char*>(data);
      for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
      }
    };
    for (const auto& v : vertices_) mix(v.data(), 3 * sizeof(double));
    for (const auto& t : topology_->triangles) mix(t.data(), 3 * sizeof(int));
    return h;
  }

  /// Copy with every vertex mapped through the pose; connectivity is shared.
  TriangleMesh transformed(const Pose& pose) const {
    TriangleMesh out;
    out.topology_ = topology_;
    out.vertices_.reserve(vertices_.size());
    for (const auto& v : vertices_) out.vertices_.push_back(pose.apply(v));
    out.refresh_cached();
    return out;
  }

 private:
  static void flag_degenerate(const std::vector<Vec3>& vertices, detail::MeshTopology& topo) {
    // Scale from the vertex-mean sphere; rotation invariant like the final radius.
    Vec3 mean = Vec3::Zero();
    for (const auto& v : vertices) mean += v;
    mean /= static_cast<double>(vertices.size());
    double r2 = 0.0;
    for (const auto& v : vertices) r2 = std::max(r2, (v - mean).squaredNorm());
    const double min_area = 1e-12 * r2;
    topo.degenerate.assign(topo.triangles.size(), 0);
    topo.live_count = 0;
    for (std::size_t t = 0; t < topo.triangles.size(); ++t) {
      const auto& f = topo.triangles[t];
      const Vec3& a = vertices[f[0]];
      const double area = 0.5 * (vertices[f[1]] - a).cross(vertices[f[2]] - a).norm();
      if (!(area >= min_area) || area == 0.0) {
        topo.degenerate[t] = 1;
      } else {
        ++topo.live_count;
      }
    }
  }

  static void build_edge_map(detail::MeshTopology& topo) {
    topo.edge_faces.clear();
    for (std::size_t t = 0; t < topo.triangles.size(); ++t) {
      if (topo.degenerate[t]) continue;
      const auto& f = topo.triangles[t];
      for (int e = 0; e < 3; ++e) {
        topo.edge_faces.emplace_back(detail::edge_key(f[e], f[(e + 1) % 3]), static_cast<int>(t));
      }
    }
    std::sort(topo.edge_faces.begin(), topo.edge_faces.end());
    topo.closed = !topo.edge_faces.empty();
    for (std::size_t i = 0; i < topo.edge_faces.size();) {
      std::size_t j = i;
      while (j < topo.edge_faces.size() && topo.edge_faces[j].first == topo.edge_faces[i].first) ++j;
      if (j - i != 2) topo.closed = false;
      i = j;
    }
  }

  static void build_rings(std::size_t vertex_count, detail::MeshTopology& topo) {
    std::vector<std::pair<int, int>> edges;
    for (std::size_t i = 0; i < topo.edge_faces.size(); ++i) {
      if (i > 0 && topo.edge_faces[i].first == topo.edge_faces[i - 1].first) continue;
      const auto key = topo.edge_faces[i].first;
      const int a = static_cast<int>(key >> 32);
      const int b = static_cast<int>(key & 0xffffffffu);
      edges.emplace_back(a, b);
      edges.emplace_back(b, a);
    }
    std::sort(edges.begin(), edges.end());
    topo.ring_start.assign(vertex_count + 1, 0);
    for (const auto& e : edges) ++topo.ring_start[e.first + 1];
    for (std::size_t v = 0; v < vertex_count; ++v) topo.ring_start[v + 1] += topo.ring_start[v];
    topo.ring.resize(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) topo.ring[i] = edges[i].second;
  }

  void refresh_cached() {
    bounds_ = Aabb{};
    double mag = 0.0;
    for (const auto& v : vertices_) {
      bounds_.extend(v);
      mag += v.norm();
    }
    mean_vertex_magnitude_ = mag / static_cast<double>(vertices_.size());

    Vec3 weighted = Vec3::Zero();
    double total = 0.0;
    for (std::size_t t = 0; t < triangle_count(); ++t) {
      if (is_degenerate(t)) continue;
      const auto c = corners(t);
      const double area = 0.5 * (c[1] - c[0]).cross(c[2] - c[0]).norm();
      weighted += area * (c[0] + c[1] + c[2]) / 3.0;
      total += area;
    }
    if (total > 0.0) {
      centroid_ = weighted / total;
    } else {
      centroid_ = Vec3::Zero();
      for (const auto& v : vertices_) centroid_ += v;
      centroid_ /= static_cast<double>(vertices_.size());
    }
    double r2 = 0.0;
    for (const auto& v : vertices_) r2 = std::max(r2, (v - centroid_).squaredNorm());
    bounding_radius_ = std::sqrt(r2);
  }

  std::vector<Vec3> vertices_;
  std::shared_ptr<const detail::MeshTopology> topology_;
  Vec3 centroid_ = Vec3::Zero();
  double bounding_radius_ = 0.0;
  double mean_vertex_magnitude_ = 0.0;
  Aabb bounds_;
};

inline TriangleMesh apply_pose(const TriangleMesh& mesh, const Pose& pose) { return mesh.transformed(pose); }

namespace detail {

inline int resolve_obj_index(const std::string& token, int vertex_count, int line_no) {
  const auto slash = token.find('/');
  const std::string head = token.substr(0, slash);
  int idx = 0;
  try {
    std::size_t used = 0;
    idx = std::stoi(head, &used);
    if (used != head.size()) throw std::invalid_argument(head);
  } catch (const std::exception&) {
    throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": bad face index '" + token + "'");
  }
  if (idx == 0) throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": face index 0");
  // Negative indices are relative to the vertices read so far.
  return idx > 0 ? idx - 1 : vertex_count + idx;
}

}  // namespace detail

/// Parses Wavefront OBJ geometry (v and f records). Polygons are fan-triangulated.
inline TriangleMesh parse_obj(std::istream& in) {
  std::vector<Vec3> vertices;
  std::vector<TriangleIndices> triangles;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) {
        throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": malformed vertex");
      }
      vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> poly;
      std::string tok;
      while (ls >> tok) poly.push_back(detail::resolve_obj_index(tok, static_cast<int>(vertices.size()), line_no));
      if (poly.size() < 3) {
        throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": face with fewer than 3 vertices");
      }
      for (std::size_t i = 1; i + 1 < poly.size(); ++i) triangles.push_back({poly[0], poly[i], poly[i + 1]});
    }
  }
  return TriangleMesh(std::move(vertices), std::move(triangles));
}

inline TriangleMesh load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  return parse_obj(in);
}

inline void write_obj(std::ostream& out, const TriangleMesh& mesh) {
  out.precision(17);
  for (const auto& v : mesh.vertices()) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles()) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

inline void save_obj(const std::string& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  write_obj(out, mesh);
}

}  // namespace polydepth
