#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "polydepth/error.hpp"
#include "polydepth/mesh.hpp"
#include "polydepth/oracle.hpp"
#include "polydepth/pipeline.hpp"
#include "polydepth/proximity.hpp"
#include "polydepth/seeding.hpp"

namespace polydepth {

/// Shortest text that parses back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& s, int line_no) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return v;
}

struct Frame {
  std::array<double, 4> quaternion{1.0, 0.0, 0.0, 0.0};  // w x y z
  Vec3 translation = Vec3::Zero();

  Pose pose() const {
    return Pose::from_quaternion(quaternion[0], quaternion[1], quaternion[2], quaternion[3], translation);
  }
};

/// Benchmark input: two meshes, poses of A (B stays at the identity) and tunables.
struct Scenario {
  std::string mesh_a;
  std::string mesh_b;
  SeedStrategy strategy = SeedStrategy::Auto;
  double epsilon_scale = 1e-5;
  int feature_cap = 16;
  int grid = 32;  // clearance grid points per axis; 0 disables the field
  std::uint64_t seed = 1;
  int oracle_directions = 0;  // 0: no oracle
  std::vector<Frame> frames;
};

inline constexpr const char* kScenarioHeader = "polydepth-scenario 1";

/// Parses the line-oriented scenario format. Relative mesh paths resolve against `base_dir`.
inline Scenario parse_scenario(std::istream& in, const std::filesystem::path& base_dir = {}) {
  Scenario sc;
  std::string line;
  int line_no = 0;
  bool header = false;
  auto fail = [&](const std::string& msg) {
    throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": " + msg);
  };
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return (path.is_absolute() || base_dir.empty() ? path : base_dir / path).lexically_normal().string();
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (!header) {
      if (tok.size() != 2 || tok[0] != "polydepth-scenario") fail("expected 'polydepth-scenario 1' header");
      if (tok[1] != "1") fail("unsupported scenario version " + tok[1]);
      header = true;
      continue;
    }
    const std::string& key = tok[0];
    auto one = [&]() -> const std::string& {
      if (tok.size() != 2) fail("'" + key + "' takes one value");
      return tok[1];
    };
    auto integer = [&](long lo, long hi) {
      const double v = parse_double(one(), line_no);
      if (v != std::floor(v) || v < lo || v > hi) fail("'" + key + "' out of range");
      return static_cast<long>(v);
    };
    if (key == "mesh_a") {
      sc.mesh_a = resolve(one());
    } else if (key == "mesh_b") {
      sc.mesh_b = resolve(one());
    } else if (key == "strategy") {
      try {
        sc.strategy = parse_seed_strategy(one());
      } catch (const Error&) {
        fail("unknown strategy '" + tok[1] + "'");
      }
    } else if (key == "epsilon_scale") {
      sc.epsilon_scale = parse_double(one(), line_no);
      if (!(sc.epsilon_scale > 0.0)) fail("epsilon_scale must be positive");
    } else if (key == "feature_cap") {
      sc.feature_cap = static_cast<int>(integer(1, 1000));
    } else if (key == "grid") {
      sc.grid = static_cast<int>(integer(0, 1024));
      if (sc.grid != 0 && sc.grid < 4) fail("grid must be 0 or >= 4");
    } else if (key == "seed") {
      std::uint64_t v = 0;
      const auto& s = one();
      const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
      if (r.ec != std::errc() || r.ptr != s.data() + s.size()) fail("bad seed");
      sc.seed = v;
    } else if (key == "oracle") {
      sc.oracle_directions = static_cast<int>(integer(0, 1 << 20));
      if (sc.oracle_directions != 0 && sc.oracle_directions < 64) fail("oracle needs 0 or >= 64 directions");
    } else if (key == "frame") {
      if (tok.size() != 8) fail("frame takes qw qx qy qz tx ty tz");
      Frame f;
      for (int i = 0; i < 4; ++i) f.quaternion[i] = parse_double(tok[1 + i], line_no);
      for (int i = 0; i < 3; ++i) f.translation[i] = parse_double(tok[5 + i], line_no);
      const double qn = std::sqrt(f.quaternion[0] * f.quaternion[0] + f.quaternion[1] * f.quaternion[1] +
                                  f.quaternion[2] * f.quaternion[2] + f.quaternion[3] * f.quaternion[3]);
      if (!(qn > 0.0)) fail("zero quaternion");
      sc.frames.push_back(f);
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  if (!header) throw Error(ErrorCode::Parse, "empty scenario");
  if (sc.mesh_a.empty() || sc.mesh_b.empty()) throw Error(ErrorCode::Parse, "mesh_a and mesh_b are required");
  if (sc.frames.empty()) throw Error(ErrorCode::Parse, "scenario has no frames");
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return parse_scenario(in, std::filesystem::path(path).parent_path());
}

/// Writes the scenario; mesh paths are written relative to `base_dir` when possible.
inline void write_scenario(std::ostream& out, const Scenario& sc, const std::filesystem::path& base_dir = {}) {
  auto rel = [&](const std::string& p) {
    if (base_dir.empty()) return p;
    const auto r = std::filesystem::path(p).lexically_relative(base_dir);
    return r.empty() ? p : r.string();
  };
  out << kScenarioHeader << '\n';
  out << "mesh_a " << rel(sc.mesh_a) << '\n';
  out << "mesh_b " << rel(sc.mesh_b) << '\n';
  out << "strategy " << to_string(sc.strategy) << '\n';
  out << "epsilon_scale " << format_double(sc.epsilon_scale) << '\n';
  out << "feature_cap " << sc.feature_cap << '\n';
  out << "grid " << sc.grid << '\n';
  out << "seed " << sc.seed << '\n';
  out << "oracle " << sc.oracle_directions << '\n';
  for (const auto& f : sc.frames) {
    out << "frame";
    for (double q : f.quaternion) out << ' ' << format_double(q);
    for (int i = 0; i < 3; ++i) out << ' ' << format_double(f.translation[i]);
    out << '\n';
  }
}

inline void save_scenario(const std::string& path, const Scenario& sc) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  write_scenario(out, sc, std::filesystem::path(path).parent_path());
}

/// Random penetrating frames: A is the same mesh under a uniform random rotation about its
/// centroid, shifted by half the bounding-box diagonal in a uniform random direction.
/// Frames that do not interpenetrate are drawn again.
inline Scenario generate_random_scenario(const std::string& mesh_path, const TriangleMesh& mesh, int frames,
                                         std::uint64_t seed, double epsilon_scale = 1e-5) {
  if (frames < 1) throw Error(ErrorCode::InvalidArgument, "frames must be >= 1");
  Scenario sc;
  sc.mesh_a = mesh_path;
  sc.mesh_b = mesh_path;
  sc.seed = seed;
  sc.epsilon_scale = epsilon_scale;
  const Body body = Body::from_mesh(mesh);
  const double shift = 0.5 * mesh.bounds().diagonal();
  const Vec3 c = mesh.centroid();
  std::mt19937_64 rng(seed);
  const long max_draws = 1000L * frames + 1000;
  for (long draw = 0; static_cast<int>(sc.frames.size()) < frames; ++draw) {
    if (draw >= max_draws) throw Error(ErrorCode::InvalidArgument, "could not draw penetrating frames");
    // Uniform rotation (Shoemake) and uniform direction.
    const double u1 = uniform01(rng), u2 = uniform01(rng), u3 = uniform01(rng);
    const double s1 = std::sqrt(1.0 - u1), s2 = std::sqrt(u1);
    const double pi2 = 2.0 * std::numbers::pi;
    Frame f;
    f.quaternion = {s2 * std::cos(pi2 * u3), s1 * std::sin(pi2 * u2), s1 * std::cos(pi2 * u2), s2 * std::sin(pi2 * u3)};
    const double z = 1.0 - 2.0 * uniform01(rng);
    const double phi = pi2 * uniform01(rng);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const Vec3 dir(r * std::cos(phi), r * std::sin(phi), z);
    const Pose rot = Pose::from_quaternion(f.quaternion[0], f.quaternion[1], f.quaternion[2], f.quaternion[3]);
    f.translation = c - rot.rotation * c + shift * dir;
    const Body a = body.posed(f.pose());
    const auto opt = ProximityOptions::for_bodies(a, body, epsilon_scale);
    if (classify(a, Vec3::Zero(), body, opt) == CollisionStatus::Penetrating) sc.frames.push_back(f);
  }
  return sc;
}

struct RunOptions {
  bool timing = true;               // false: time columns are written as 0
  std::optional<int> oracle_directions;   // overrides the scenario
  std::optional<SeedStrategy> strategy;   // overrides the scenario
  std::optional<int> grid;
  std::optional<int> feature_cap;
  std::optional<double> epsilon_scale;
  std::string field_cache_dir;      // where clearance sidecars live; empty: next to mesh_b
  bool use_field_cache = true;
};

struct FrameRow {
  int frame = 0;
  bool ok = false;
  PdResult result;
  std::optional<double> oracle_pd;
  std::optional<double> rel_error_pct;
  std::string error;
};

struct RunReport {
  std::vector<FrameRow> rows;
  bool with_oracle = false;
  bool timing = true;
};

namespace detail {

inline std::string sidecar_path(const RunOptions& ro, const std::string& mesh_b, std::uint64_t hash, int grid) {
  const std::filesystem::path mb(mesh_b);
  const std::string name = mb.filename().string() + "." + std::to_string(hash) + ".g" + std::to_string(grid) + ".pdcf";
  const auto dir = ro.field_cache_dir.empty() ? mb.parent_path() : std::filesystem::path(ro.field_cache_dir);
  return (dir / name).string();
}

}  // namespace detail

/// Runs every frame; per-frame failures are recorded and the run continues.
inline RunReport run_scenario(const Scenario& sc, const RunOptions& ro = {}) {
  const TriangleMesh mesh_a = load_obj(sc.mesh_a);
  const TriangleMesh mesh_b = sc.mesh_b == sc.mesh_a ? mesh_a : load_obj(sc.mesh_b);
  const Body body_a = Body::from_mesh(mesh_a);
  const Body body_b = Body::from_mesh(mesh_b);

  PdOptions po;
  po.epsilon_scale = ro.epsilon_scale.value_or(sc.epsilon_scale);
  po.feature_cap = ro.feature_cap.value_or(sc.feature_cap);
  po.seed.strategy = ro.strategy.value_or(sc.strategy);
  const int grid = ro.grid.value_or(sc.grid);
  const int oracle_dirs = ro.oracle_directions.value_or(sc.oracle_directions);

  std::optional<ClearanceField> field;
  const bool want_field = grid > 0 && (po.seed.strategy == SeedStrategy::Auto || po.seed.strategy == SeedStrategy::Clearance);
  if (want_field) {
    const std::array<int, 3> res{grid, grid, grid};
    const std::string side = detail::sidecar_path(ro, sc.mesh_b, mesh_b.content_hash(), grid);
    if (ro.use_field_cache) field = load_clearance_field(side, mesh_b.content_hash(), res);
    if (!field) {
      field = build_clearance_field(mesh_b, body_b.bvh, res);
      if (ro.use_field_cache) {
        try {
          save_clearance_field(side, *field);
        } catch (const Error&) {
          // Read-only location: run without persisting.
        }
      }
    }
  }

  RunReport rep;
  rep.with_oracle = oracle_dirs > 0;
  rep.timing = ro.timing;
  CoherenceCache cache;
  for (std::size_t i = 0; i < sc.frames.size(); ++i) {
    FrameRow row;
    row.frame = static_cast<int>(i);
    try {
      const Pose pose = sc.frames[i].pose();
      const Body a = body_a.posed(pose);
      SeedInputs in;
      in.cache = &cache;
      in.field = field ? &*field : nullptr;
      in.world_origin = pose.translation;
      PdOptions fo = po;
      fo.seed.rng_seed = sc.seed + 0x9E3779B97F4A7C15ull * (i + 1);
      row.result = compute_pd(a, body_b, fo, in);
      if (row.result.penetrating_input) cache.push(pose.translation + row.result.d, pose.rotation);
      if (rep.with_oracle) {
        const TriangleMesh posed_a = mesh_a.transformed(pose);
        const auto orc = oracle::sampled_pd(posed_a, Vec3::Zero(), mesh_b, oracle_dirs);
        row.oracle_pd = orc.magnitude;
        row.rel_error_pct = 100.0 * oracle::relative_error(row.result.magnitude, orc.magnitude, mesh_a, mesh_b);
      }
      row.ok = true;
    } catch (const Error& e) {
      row.error = to_string(e.code());
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

inline void write_csv(std::ostream& out, const RunReport& rep) {
  out << "frame,pd_x,pd_y,pd_z,pd_norm,iterations,contacts,n_bv,n_p,n_g_total,time_us,seed_time_us,seed_strategy_used";
  if (rep.with_oracle) out << ",oracle_pd,rel_error_pct";
  out << ",error\n";
  for (const auto& r : rep.rows) {
    out << r.frame;
    if (r.ok) {
      const auto& p = r.result;
      const double t = rep.timing ? std::round(p.total_us) : 0.0;
      const double ts = rep.timing ? std::round(p.seed_us) : 0.0;
      out << ',' << format_double(p.d.x()) << ',' << format_double(p.d.y()) << ',' << format_double(p.d.z()) << ','
          << format_double(p.magnitude) << ',' << p.iterations << ',' << p.contact_count << ',' << p.stats.bv_tests
          << ',' << p.stats.primitive_tests << ',' << p.pgs_sweeps << ',' << format_double(t) << ','
          << format_double(ts) << ',' << (p.penetrating_input ? to_string(p.seed_used) : "none");
      if (rep.with_oracle) {
        out << ',' << (r.oracle_pd ? format_double(*r.oracle_pd) : "") << ','
            << (r.rel_error_pct ? format_double(*r.rel_error_pct) : "");
      }
      out << ",\n";
    } else {
      out << ",,,,,,,,,,,,";
      if (rep.with_oracle) out << ",,";
      out << ',' << r.error << '\n';
    }
  }
}

struct Stat {
  double mean = 0.0;
  double median = 0.0;
  std::size_t count = 0;
};

inline Stat summarize(std::vector<double> xs) {
  Stat s;
  s.count = xs.size();
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(xs.size());
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  s.median = n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
  return s;
}

/// Mean and median over successful frames. The first frame warms caches and is left out of
/// the timing statistics only.
inline void write_summary(std::ostream& out, const RunReport& rep) {
  std::vector<double> time, contacts, iters, err;
  std::size_t failures = 0;
  for (const auto& r : rep.rows) {
    if (!r.ok) {
      ++failures;
      continue;
    }
    if (r.frame > 0 || rep.rows.size() == 1) time.push_back(std::round(r.result.total_us));
    contacts.push_back(r.result.contact_count);
    iters.push_back(r.result.iterations);
    if (r.rel_error_pct) err.push_back(*r.rel_error_pct);
  }
  auto line = [&](const char* name, const std::vector<double>& xs) {
    const Stat s = summarize(xs);
    out << name << ": mean " << format_double(s.mean) << " median " << format_double(s.median) << " (n=" << s.count
        << ")\n";
  };
  out << "frames: " << rep.rows.size() << " failed: " << failures << '\n';
  if (rep.timing) line("time_us", time);
  line("contacts", contacts);
  line("iterations", iters);
  if (rep.with_oracle) line("rel_error_pct", err);
}

}  // namespace polydepth
