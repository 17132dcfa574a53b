#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "polydepth/error.hpp"
#include "polydepth/mesh.hpp"

// Procedural test and benchmark geometry. All closed shapes are wound outward.
namespace polydepth::shapes {

namespace detail {

struct Builder {
  std::vector<Vec3> v;
  std::vector<TriangleIndices> f;

  int add(const Vec3& p) {
    v.push_back(p);
    return static_cast<int>(v.size()) - 1;
  }
  void tri(int a, int b, int c) { f.push_back({a, b, c}); }
  void quad(int a, int b, int c, int d) {
    tri(a, b, c);
    tri(a, c, d);
  }
  // Box with outward (or inward when flip) faces.
  void box(const Vec3& lo, const Vec3& hi, bool flip = false) {
    int c[8];
    for (int i = 0; i < 8; ++i) {
      c[i] = add(Vec3(i & 1 ? hi.x() : lo.x(), i & 2 ? hi.y() : lo.y(), i & 4 ? hi.z() : lo.z()));
    }
    const int faces[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
    for (const auto& q : faces) {
      if (flip) {
        quad(c[q[3]], c[q[2]], c[q[1]], c[q[0]]);
      } else {
        quad(c[q[0]], c[q[1]], c[q[2]], c[q[3]]);
      }
    }
  }
  TriangleMesh build() { return TriangleMesh(std::move(v), std::move(f)); }
};

}  // namespace detail

/// Axis-aligned box from lo to hi (12 triangles).
inline TriangleMesh box(const Vec3& lo, const Vec3& hi) {
  detail::Builder b;
  b.box(lo, hi);
  return b.build();
}

/// Unit cube with a corner at the origin.
inline TriangleMesh unit_cube() { return box(Vec3::Zero(), Vec3::Ones()); }

/// Subdivided icosahedron projected to a sphere: 20 * 4^level triangles.
inline TriangleMesh icosphere(double radius, int level, const Vec3& center = Vec3::Zero()) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                         {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<TriangleIndices> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                    {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                    {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                    {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int id = static_cast<int>(v.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<TriangleIndices> next;
    next.reserve(f.size() * 4);
    for (const auto& tri : f) {
      const int a = midpoint(tri[0], tri[1]);
      const int b = midpoint(tri[1], tri[2]);
      const int c = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  for (auto& p : v) p = center + radius * p;
  return TriangleMesh(std::move(v), std::move(f));
}

/// Closed surface over a (u, v) grid, u periodic in [0, 2pi), v in [0, pi] with poles.
template <class Surface>
TriangleMesh spherical_grid(int nu, int nv, Surface&& s) {
  if (nu < 3 || nv < 2) throw Error(ErrorCode::InvalidArgument, "grid too coarse");
  detail::Builder b;
  const int south = b.add(s(0.0, 0.0));
  for (int j = 1; j < nv; ++j) {
    for (int i = 0; i < nu; ++i) {
      b.add(s(2.0 * std::numbers::pi * i / nu, std::numbers::pi * j / nv));
    }
  }
  const int north = b.add(s(0.0, std::numbers::pi));
  auto id = [&](int i, int j) { return 1 + (j - 1) * nu + (i % nu); };
  for (int i = 0; i < nu; ++i) b.tri(south, id(i + 1, 1), id(i, 1));
  for (int j = 1; j < nv - 1; ++j) {
    for (int i = 0; i < nu; ++i) b.quad(id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
  }
  for (int i = 0; i < nu; ++i) b.tri(north, id(i, nv - 1), id(i + 1, nv - 1));
  return b.build();
}

/// Lumpy closed blob ("bunny-class"): a sphere of radius ~1 with smooth radial bumps.
/// Triangle count is 2 * nu * (nv - 1).
inline TriangleMesh blob(int nu, int nv) {
  return spherical_grid(nu, nv, [](double u, double v) {
    const Vec3 dir(std::sin(v) * std::cos(u), std::sin(v) * std::sin(u), -std::cos(v));
    const double r = 1.0 + 0.22 * std::sin(3.0 * dir.x() + 1.0) * std::cos(2.0 * dir.y()) +
                     0.18 * std::exp(-8.0 * (dir - Vec3(0.3, 0.2, 0.93).normalized()).squaredNorm()) +
                     0.15 * std::exp(-8.0 * (dir - Vec3(-0.3, 0.2, 0.93).normalized()).squaredNorm()) -
                     0.12 * std::cos(4.0 * dir.z());
    return Vec3(r * dir.x(), 0.8 * r * dir.y(), r * dir.z());
  });
}

/// Torus around the z axis.
inline TriangleMesh torus(double major, double minor, int nu, int nv) {
  if (nu < 3 || nv < 3) throw Error(ErrorCode::InvalidArgument, "grid too coarse");
  detail::Builder b;
  for (int i = 0; i < nu; ++i) {
    const double u = 2.0 * std::numbers::pi * i / nu;
    for (int j = 0; j < nv; ++j) {
      const double w = 2.0 * std::numbers::pi * j / nv;
      const double r = major + minor * std::cos(w);
      b.add(Vec3(r * std::cos(u), r * std::sin(u), minor * std::sin(w)));
    }
  }
  auto id = [&](int i, int j) { return (i % nu) * nv + (j % nv); };
  for (int i = 0; i < nu; ++i)
    for (int j = 0; j < nv; ++j) b.quad(id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
  return b.build();
}

/// Tube of radius `tube` around a (p, q) torus knot.
inline TriangleMesh torus_knot(int p, int q, double tube, int segments, int sides) {
  if (segments < 8 || sides < 3) throw Error(ErrorCode::InvalidArgument, "grid too coarse");
  auto curve = [&](double t) {
    const double r = 2.0 + std::cos(q * t);
    return Vec3(r * std::cos(p * t), r * std::sin(p * t), -std::sin(q * t));
  };
  detail::Builder b;
  for (int i = 0; i < segments; ++i) {
    const double t = 2.0 * std::numbers::pi * i / segments;
    const Vec3 c = curve(t);
    const Vec3 tangent = (curve(t + 1e-4) - curve(t - 1e-4)).normalized();
    const Vec3 n = tangent.cross(c.normalized().cross(Vec3::UnitZ()) + 0.5 * Vec3::UnitZ()).normalized();
    const Vec3 bn = tangent.cross(n);
    for (int j = 0; j < sides; ++j) {
      const double w = 2.0 * std::numbers::pi * j / sides;
      b.add(c + tube * (std::cos(w) * n + std::sin(w) * bn));
    }
  }
  auto id = [&](int i, int j) { return (i % segments) * sides + (j % sides); };
  for (int i = 0; i < segments; ++i)
    for (int j = 0; j < sides; ++j) b.quad(id(i, j), id(i, j + 1), id(i + 1, j + 1), id(i + 1, j));
  return b.build();
}

/// Open-topped container: outer box [-w, w]^2 x [0, h] with walls and floor of thickness t.
inline TriangleMesh cup(double w, double h, double t) {
  if (!(t > 0.0 && t < w && t < h)) throw Error(ErrorCode::InvalidArgument, "bad cup dimensions");
  detail::Builder b;
  const double wi = w - t;
  int o[4], i[4], ob[4], ib[4];
  const double xs[4] = {-1, 1, 1, -1};
  const double ys[4] = {-1, -1, 1, 1};
  for (int k = 0; k < 4; ++k) {
    ob[k] = b.add(Vec3(w * xs[k], w * ys[k], 0.0));
    o[k] = b.add(Vec3(w * xs[k], w * ys[k], h));
    i[k] = b.add(Vec3(wi * xs[k], wi * ys[k], h));
    ib[k] = b.add(Vec3(wi * xs[k], wi * ys[k], t));
  }
  b.quad(ob[3], ob[2], ob[1], ob[0]);  // floor, facing -z
  b.quad(ib[0], ib[1], ib[2], ib[3]);  // inner floor, facing +z
  for (int k = 0; k < 4; ++k) {
    const int n = (k + 1) % 4;
    b.quad(ob[k], ob[n], o[n], o[k]);  // outer wall
    b.quad(ib[n], ib[k], i[k], i[n]);  // inner wall, facing the cavity
    b.quad(o[k], o[n], i[n], i[k]);    // rim
  }
  return b.build();
}

/// Closed box shell with an enclosed cubic cavity (outer half-size w, wall thickness t).
inline TriangleMesh hollow_cube(double w, double t) {
  if (!(t > 0.0 && t < w)) throw Error(ErrorCode::InvalidArgument, "bad shell dimensions");
  detail::Builder b;
  b.box(Vec3::Constant(-w), Vec3::Constant(w));
  b.box(Vec3::Constant(-(w - t)), Vec3::Constant(w - t), true);
  return b.build();
}

/// 2 x 2 plate of thickness `thick` with three 0.5-wide slots along y, built from
/// face-sharing bars.
inline TriangleMesh grate(double thick = 0.2) {
  detail::Builder b;
  const double z0 = -0.5 * thick, z1 = 0.5 * thick;
  const double bar = 0.125, slot = 0.5;
  for (int k = 0; k < 4; ++k) {
    const double x0 = -1.0 + k * (bar + slot);
    b.box(Vec3(x0, -0.75, z0), Vec3(x0 + bar, 0.75, z1));
  }
  b.box(Vec3(-1.0, -1.0, z0), Vec3(1.0, -0.75, z1));
  b.box(Vec3(-1.0, 0.75, z0), Vec3(1.0, 1.0, z1));
  return b.build();
}

/// Mesh by name for the command line: cube, sphere, torus, knot, blob, blob-low, blob-40k,
/// cup, hollow-cube, grate.
inline TriangleMesh by_name(const std::string& name) {
  if (name == "cube") return unit_cube();
  if (name == "sphere") return icosphere(0.5, 3);
  if (name == "torus") return torus(1.0, 0.35, 40, 25);
  if (name == "knot") return torus_knot(2, 3, 0.45, 200, 12);
  if (name == "blob") return blob(32, 21);
  if (name == "blob-low") return blob(16, 11);
  if (name == "blob-40k") return blob(200, 101);
  if (name == "cup") return cup(1.0, 1.5, 0.15);
  if (name == "hollow-cube") return hollow_cube(1.0, 0.2);
  if (name == "grate") return grate();
  throw Error(ErrorCode::InvalidArgument, "unknown shape '" + name + "'");
}

}  // namespace polydepth::shapes
