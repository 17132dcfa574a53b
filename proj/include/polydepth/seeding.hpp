#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <deque>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "polydepth/bvh.hpp"
#include "polydepth/error.hpp"
#include "polydepth/mesh.hpp"
#include "polydepth/proximity.hpp"

namespace polydepth {

enum class SeedStrategy { Auto, Coherence, Clearance, Centroid, Random };

inline const char* to_string(SeedStrategy s) {
  switch (s) {
    case SeedStrategy::Auto: return "auto";
    case SeedStrategy::Coherence: return "coherence";
    case SeedStrategy::Clearance: return "clearance";
    case SeedStrategy::Centroid: return "centroid";
    case SeedStrategy::Random: return "random";
  }
  return "unknown";
}

inline SeedStrategy parse_seed_strategy(const std::string& s) {
  for (auto v : {SeedStrategy::Auto, SeedStrategy::Coherence, SeedStrategy::Clearance, SeedStrategy::Centroid,
                 SeedStrategy::Random}) {
    if (s == to_string(v)) return v;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown seeding strategy '" + s + "'");
}

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Seed translation q^s = q_in + (r_a + r_b) (o_a - o_b) / |o_a - o_b| with o the posed centroids.
inline Vec3 centroid_difference(const Body& a, const Vec3& q_in, const Body& b) {
  const Vec3 diff = (a.mesh.centroid() + q_in) - b.mesh.centroid();
  const double len = diff.norm();
  if (!(len > 1e-12 * std::max(a.radius(), b.radius()))) {
    throw Error(ErrorCode::CoincidentCentroids, "centroids coincide");
  }
  return q_in + (a.radius() + b.radius()) * diff / len;
}

/// Grid of distances over the bounding box of the static body and its maximally clear points.
struct ClearanceField {
  Vec3 origin = Vec3::Zero();
  Vec3 cell = Vec3::Zero();
  std::array<int, 3> resolution{0, 0, 0};
  std::vector<double> values;
  std::vector<Vec3> clear_points;
  std::uint64_t mesh_hash = 0;

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * resolution[1] + j) * resolution[0] + i;
  }
  Vec3 point(int i, int j, int k) const { return origin + Vec3(i * cell.x(), j * cell.y(), k * cell.z()); }
};

namespace detail {

// Marks grid points enclosed by the surface: odd number of crossings on a +x ray.
// The ray is nudged off the grid line so it misses vertices and edges of axis-aligned meshes.
inline std::vector<std::uint8_t> inside_mask(const TriangleMesh& mesh, const ClearanceField& f) {
  const auto [nx, ny, nz] = f.resolution;
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(nx) * ny * nz, 0);
  const double dy = 1e-7 * std::sqrt(2.0) * (f.cell.y() > 0 ? f.cell.y() : 1.0);
  const double dz = 1e-7 * std::sqrt(3.0) * (f.cell.z() > 0 ? f.cell.z() : 1.0);
  std::vector<std::vector<double>> crossings(static_cast<std::size_t>(ny) * nz);
  auto line_range = [](double lo, double hi, double origin, double step, int n) {
    if (step <= 0.0) return std::pair<int, int>{0, n - 1};
    const int a = std::max(0, static_cast<int>(std::floor((lo - origin) / step)) - 1);
    const int b = std::min(n - 1, static_cast<int>(std::ceil((hi - origin) / step)) + 1);
    return std::pair<int, int>{a, b};
  };
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    if (mesh.is_degenerate(t)) continue;
    const auto c = mesh.corners(t);
    const double ylo = std::min({c[0].y(), c[1].y(), c[2].y()});
    const double yhi = std::max({c[0].y(), c[1].y(), c[2].y()});
    const double zlo = std::min({c[0].z(), c[1].z(), c[2].z()});
    const double zhi = std::max({c[0].z(), c[1].z(), c[2].z()});
    const auto [j0, j1] = line_range(ylo, yhi, f.origin.y(), f.cell.y(), ny);
    const auto [k0, k1] = line_range(zlo, zhi, f.origin.z(), f.cell.z(), nz);
    for (int k = k0; k <= k1; ++k) {
      for (int j = j0; j <= j1; ++j) {
        const double y = f.origin.y() + j * f.cell.y() + dy;
        const double z = f.origin.z() + k * f.cell.z() + dz;
        // Barycentric test in the yz projection.
        const double e0 = (c[1].y() - c[0].y()) * (z - c[0].z()) - (c[1].z() - c[0].z()) * (y - c[0].y());
        const double e1 = (c[2].y() - c[1].y()) * (z - c[1].z()) - (c[2].z() - c[1].z()) * (y - c[1].y());
        const double e2 = (c[0].y() - c[2].y()) * (z - c[2].z()) - (c[0].z() - c[2].z()) * (y - c[2].y());
        const bool pos = e0 > 0 && e1 > 0 && e2 > 0;
        const bool neg = e0 < 0 && e1 < 0 && e2 < 0;
        if (!pos && !neg) continue;
        const double sum = e0 + e1 + e2;
        const double x = (e1 * c[0].x() + e2 * c[1].x() + e0 * c[2].x()) / sum;
        crossings[static_cast<std::size_t>(k) * ny + j].push_back(x);
      }
    }
  }
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      auto& xs = crossings[static_cast<std::size_t>(k) * ny + j];
      std::sort(xs.begin(), xs.end());
      for (int i = 0; i < nx; ++i) {
        const double x = f.origin.x() + i * f.cell.x();
        const auto after = xs.end() - std::upper_bound(xs.begin(), xs.end(), x);
        if (after % 2 == 1) mask[f.index(i, j, k)] = 1;
      }
    }
  }
  return mask;
}

}  // namespace detail

/// Maximally clear grid points around a static mesh:
///  1. grid over the bounding box; 2. distance to the surface at each point (enclosed points
///  count as 0); 3. drop small distances; 4. drop points beaten by an x or y neighbour;
///  5. drop the box boundary layer; 6. drop points beaten by any of the 26 neighbours.
inline ClearanceField build_clearance_field(const TriangleMesh& mesh, const Bvh& bvh, std::array<int, 3> resolution) {
  for (int r : resolution) {
    if (r < 4) throw Error(ErrorCode::InvalidArgument, "clearance grid needs at least 4 points per axis");
  }
  ClearanceField f;
  f.resolution = resolution;
  f.mesh_hash = mesh.content_hash();
  const Aabb& box = mesh.bounds();
  f.origin = box.lo;
  for (int d = 0; d < 3; ++d) f.cell[d] = box.extent()[d] / (resolution[d] - 1);
  const auto [nx, ny, nz] = resolution;

  const auto inside = detail::inside_mask(mesh, f);
  f.values.resize(static_cast<std::size_t>(nx) * ny * nz);
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const auto id = f.index(i, j, k);
        f.values[id] = inside[id] ? 0.0 : point_mesh_distance(mesh, bvh, f.point(i, j, k));
      }
    }
  }

  const double small = 1.5 * f.cell.norm();
  const double tie = 1e-9 * f.cell.norm();
  std::vector<std::uint8_t> alive(f.values.size(), 0);
  for (std::size_t id = 0; id < f.values.size(); ++id) alive[id] = f.values[id] >= small;

  auto beaten = [&](int i, int j, int k, auto&& offsets) {
    const double v = f.values[f.index(i, j, k)];
    for (const auto& o : offsets) {
      const int a = i + o[0], b = j + o[1], c = k + o[2];
      if (a < 0 || b < 0 || c < 0 || a >= nx || b >= ny || c >= nz) continue;
      if (f.values[f.index(a, b, c)] > v + tie) return true;
    }
    return false;
  };
  const std::vector<std::array<int, 3>> planar{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}};
  std::vector<std::array<int, 3>> full;
  for (int c = -1; c <= 1; ++c)
    for (int b = -1; b <= 1; ++b)
      for (int a = -1; a <= 1; ++a)
        if (a || b || c) full.push_back({a, b, c});

  auto sweep = [&](auto&& drop) {
    std::vector<std::uint8_t> next = alive;
    for (int k = 0; k < nz; ++k)
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
          if (alive[f.index(i, j, k)] && drop(i, j, k)) next[f.index(i, j, k)] = 0;
    alive.swap(next);
  };
  sweep([&](int i, int j, int k) { return beaten(i, j, k, planar); });
  sweep([&](int i, int j, int k) {
    return i == 0 || j == 0 || k == 0 || i == nx - 1 || j == ny - 1 || k == nz - 1;
  });
  sweep([&](int i, int j, int k) { return beaten(i, j, k, full); });

  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        if (alive[f.index(i, j, k)]) f.clear_points.push_back(f.point(i, j, k));
  return f;
}

inline ClearanceField build_clearance_field(const TriangleMesh& mesh, const Bvh& bvh, int resolution = 32) {
  return build_clearance_field(mesh, bvh, {resolution, resolution, resolution});
}

namespace detail {
inline constexpr char kFieldMagic[4] = {'P', 'D', 'C', 'F'};
inline constexpr std::uint32_t kFieldVersion = 1;

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error(ErrorCode::Io, "truncated clearance field file");
  return v;
}
}  // namespace detail

inline void save_clearance_field(const std::string& path, const ClearanceField& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out.write(detail::kFieldMagic, 4);
  detail::put(out, detail::kFieldVersion);
  detail::put(out, f.mesh_hash);
  for (int r : f.resolution) detail::put(out, static_cast<std::int32_t>(r));
  for (int d = 0; d < 3; ++d) detail::put(out, f.origin[d]);
  for (int d = 0; d < 3; ++d) detail::put(out, f.cell[d]);
  detail::put(out, static_cast<std::uint64_t>(f.values.size()));
  for (double v : f.values) detail::put(out, v);
  detail::put(out, static_cast<std::uint64_t>(f.clear_points.size()));
  for (const auto& p : f.clear_points)
    for (int d = 0; d < 3; ++d) detail::put(out, p[d]);
}

/// Loads a field written by save_clearance_field. Returns none when the file is absent,
/// has another version, or was built for different geometry.
inline std::optional<ClearanceField> load_clearance_field(const std::string& path, std::uint64_t expected_hash,
                                                          std::array<int, 3> expected_resolution) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, detail::kFieldMagic, 4) != 0) return std::nullopt;
  if (detail::get<std::uint32_t>(in) != detail::kFieldVersion) return std::nullopt;
  ClearanceField f;
  f.mesh_hash = detail::get<std::uint64_t>(in);
  if (f.mesh_hash != expected_hash) return std::nullopt;
  for (int& r : f.resolution) r = detail::get<std::int32_t>(in);
  if (f.resolution != expected_resolution) return std::nullopt;
  for (int d = 0; d < 3; ++d) f.origin[d] = detail::get<double>(in);
  for (int d = 0; d < 3; ++d) f.cell[d] = detail::get<double>(in);
  f.values.resize(detail::get<std::uint64_t>(in));
  for (double& v : f.values) v = detail::get<double>(in);
  f.clear_points.resize(detail::get<std::uint64_t>(in));
  for (auto& p : f.clear_points)
    for (int d = 0; d < 3; ++d) p[d] = detail::get<double>(in);
  return f;
}

/// Places A's centroid at clear points, nearest to its current spot first.
inline std::optional<Vec3> seed_from_clearance(const ClearanceField& field, const Body& a, const Vec3& q_in,
                                               const Body& b, const ProximityOptions& opt) {
  const Vec3 here = a.mesh.centroid() + q_in;
  std::vector<Vec3> pts = field.clear_points;
  std::stable_sort(pts.begin(), pts.end(),
                   [&](const Vec3& x, const Vec3& y) { return (x - here).squaredNorm() < (y - here).squaredNorm(); });
  for (const auto& p : pts) {
    const Vec3 q = p - a.mesh.centroid();
    if (classify(a, q, b, opt) == CollisionStatus::Free) return q;
  }
  return std::nullopt;
}

/// Last three in-contact placements of A (world translation and orientation), newest first.
class CoherenceCache {
 public:
  struct Entry {
    Vec3 translation;
    Mat3 orientation;
  };

  void push(const Vec3& translation, const Mat3& orientation) {
    entries_.push_front({translation, orientation});
    if (entries_.size() > 3) entries_.pop_back();
  }
  const std::deque<Entry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  void clear() { entries_.clear(); }

 private:
  std::deque<Entry> entries_;
};

/// Reuses the cached placement closest to the query, under the query's orientation.
/// `world_origin` is the world translation of A at q = 0; nudge = distance of the single retry.
inline std::optional<Vec3> seed_from_coherence(const CoherenceCache& cache, const Body& a, const Vec3& world_origin,
                                               const Vec3& q_in, const Body& b, const ProximityOptions& opt,
                                               double nudge) {
  if (cache.empty()) return std::nullopt;
  const Vec3 target = world_origin + q_in;
  const auto& es = cache.entries();
  const auto it = std::min_element(es.begin(), es.end(), [&](const auto& x, const auto& y) {
    return (x.translation - target).squaredNorm() < (y.translation - target).squaredNorm();
  });
  Vec3 q = it->translation - world_origin;
  if (classify(a, q, b, opt) == CollisionStatus::Free) return q;
  const Vec3 away = q - q_in;
  if (!(away.norm() > 0.0)) return std::nullopt;
  q += nudge * away.normalized();
  if (classify(a, q, b, opt) == CollisionStatus::Free) return q;
  return std::nullopt;
}

/// Uniform centroid placements in B's box grown by r_a + r_b; first free one wins.
inline std::optional<Vec3> seed_random(const Body& a, const Body& b, std::mt19937_64& rng, int max_tries,
                                       const ProximityOptions& opt) {
  if (max_tries < 1) throw Error(ErrorCode::InvalidArgument, "max_tries must be >= 1");
  const double grow = a.radius() + b.radius();
  const Vec3 lo = b.mesh.bounds().lo - Vec3::Constant(grow);
  const Vec3 span = b.mesh.bounds().extent() + Vec3::Constant(2.0 * grow);
  for (int t = 0; t < max_tries; ++t) {
    Vec3 p;
    for (int d = 0; d < 3; ++d) p[d] = lo[d] + span[d] * uniform01(rng);
    const Vec3 q = p - a.mesh.centroid();
    if (classify(a, q, b, opt) == CollisionStatus::Free) return q;
  }
  return std::nullopt;
}

/// First free sample on the segment from q_in to q_f0 (q_f0 itself is the last sample).
inline Vec3 refine_by_line_search(const Vec3& q_in, const Vec3& q_f0, const Body& a, const Body& b,
                                  const ProximityOptions& opt, int samples = 16) {
  if (samples < 1) throw Error(ErrorCode::InvalidArgument, "samples must be >= 1");
  for (int k = 1; k < samples; ++k) {
    const Vec3 q = q_in + (static_cast<double>(k) / samples) * (q_f0 - q_in);
    if (classify(a, q, b, opt) == CollisionStatus::Free) return q;
  }
  return q_f0;
}

struct SeedOptions {
  SeedStrategy strategy = SeedStrategy::Auto;
  int line_search_samples = 16;
  int random_tries = 64;
  std::uint64_t rng_seed = 1;
  double nudge_fraction = 0.05;  // of r_a + r_b
};

struct SeedInputs {
  const CoherenceCache* cache = nullptr;
  const ClearanceField* field = nullptr;
  Vec3 world_origin = Vec3::Zero();
};

struct SeedResult {
  Vec3 q = Vec3::Zero();
  SeedStrategy used = SeedStrategy::Auto;
};

/// Runs the available strategies (coherence, clearance, centroid, random), refines each
/// success by line search toward q_in, and keeps the one nearest q_in.
inline SeedResult auto_seed(const Body& a, const Vec3& q_in, const Body& b, const SeedInputs& in,
                            const SeedOptions& so, const ProximityOptions& opt) {
  auto wanted = [&](SeedStrategy s) { return so.strategy == SeedStrategy::Auto || so.strategy == s; };
  std::optional<SeedResult> best;
  auto offer = [&](SeedStrategy s, const std::optional<Vec3>& q) {
    if (!q) return;
    const Vec3 r = refine_by_line_search(q_in, *q, a, b, opt, so.line_search_samples);
    if (!best || (r - q_in).norm() < (best->q - q_in).norm()) best = SeedResult{r, s};
  };
  if (wanted(SeedStrategy::Coherence) && in.cache) {
    const double nudge = so.nudge_fraction * (a.radius() + b.radius());
    offer(SeedStrategy::Coherence, seed_from_coherence(*in.cache, a, in.world_origin, q_in, b, opt, nudge));
  }
  if (wanted(SeedStrategy::Clearance) && in.field) {
    offer(SeedStrategy::Clearance, seed_from_clearance(*in.field, a, q_in, b, opt));
  }
  if (wanted(SeedStrategy::Centroid)) {
    try {
      const Vec3 q = centroid_difference(a, q_in, b);
      offer(SeedStrategy::Centroid, classify(a, q, b, opt) == CollisionStatus::Free ? std::optional<Vec3>(q)
                                                                                    : std::nullopt);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::CoincidentCentroids) throw;
    }
  }
  if (wanted(SeedStrategy::Random)) {
    std::mt19937_64 rng(so.rng_seed);
    offer(SeedStrategy::Random, seed_random(a, b, rng, so.random_tries, opt));
  }
  if (!best) throw Error(ErrorCode::SeedingFailed, "no seeding strategy produced a free configuration");
  return *best;
}

}  // namespace polydepth
