#pragma once

#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "polydepth/ccd.hpp"
#include "polydepth/error.hpp"
#include "polydepth/lcs.hpp"
#include "polydepth/pgs.hpp"
#include "polydepth/proximity.hpp"
#include "polydepth/seeding.hpp"

namespace polydepth {

struct PdOptions {
  double epsilon_scale = 1e-5;
  int feature_cap = 16;
  int max_outer_iters = 64;
  double cluster_radius_factor = 4.0;  // times epsilon
  SeedOptions seed;
  PgsOptions pgs;
  bool compute_local_pds = true;
};

struct TraceStep {
  Vec3 contact = Vec3::Zero();    // out-projection result
  Vec3 projected = Vec3::Zero();  // in-projection result
  CollisionStatus status = CollisionStatus::Free;
  int features = 0;
  int rows = 0;
  int pgs_sweeps = 0;
  double ccd_us = 0.0;
  double lcs_us = 0.0;   // feature enumeration and rank repair
  double pgs_us = 0.0;
  double classify_us = 0.0;
};

struct LocalPd {
  Vec3 normal = Vec3::UnitX();
  Vec3 vector = Vec3::Zero();
  Vec3 point = Vec3::Zero();  // mean witness on B
  int features = 0;
};

struct PdResult {
  Vec3 d = Vec3::Zero();
  double magnitude = 0.0;
  int iterations = 0;
  int contact_count = 0;
  bool penetrating_input = false;
  bool capped = false;   // outer iteration cap reached
  bool stalled = false;  // out-projection stopped making progress
  SeedStrategy seed_used = SeedStrategy::Auto;
  Vec3 seed = Vec3::Zero();
  double seed_us = 0.0;
  double total_us = 0.0;
  std::vector<LocalPd> local_pds;
  std::vector<TraceStep> trace;
  QueryStats stats;
  std::uint64_t pgs_sweeps = 0;  // N_G summed over iterations
};

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double us() const {
    return std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline bool share_vertex(const TriangleIndices& x, const TriangleIndices& y) {
  for (int i : x)
    for (int j : y)
      if (i == j) return true;
  return false;
}

}  // namespace detail

/// Splits the global PD over contact regions at o + d: features are grouped when their
/// witnesses on B lie within `cluster_radius` or their source triangles touch on both
/// bodies; each group contributes d_i = (d . n_i) n_i with n_i its mean normal.
inline std::vector<LocalPd> local_pds(const Body& a, const Body& b, const Vec3& d, const ProximityOptions& opt,
                                      double cluster_radius) {
  const auto feats = raw_contact_features(a, d, b, opt, -d);
  const int n = static_cast<int>(feats.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  const auto& tris_a = a.mesh.triangles();
  const auto& tris_b = b.mesh.triangles();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const auto& fi = feats[i];
      const auto& fj = feats[j];
      const bool close = (fi.witness_b - fj.witness_b).norm() <= cluster_radius;
      const bool linked = detail::share_vertex(tris_a[fi.triangle_a], tris_a[fj.triangle_a]) &&
                          detail::share_vertex(tris_b[fi.triangle_b], tris_b[fj.triangle_b]);
      if (close || linked) parent[find(i)] = find(j);
    }
  }
  std::vector<LocalPd> out;
  std::vector<int> slot(n, -1);
  for (int i = 0; i < n; ++i) {
    const int r = find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<int>(out.size());
      out.push_back({Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), 0});
    }
    LocalPd& region = out[slot[r]];
    region.normal += feats[i].normal;
    region.point += feats[i].witness_b;
    ++region.features;
  }
  for (auto& region : out) {
    region.point /= region.features;
    const double len = region.normal.norm();
    region.normal = len > 0.0 ? Vec3(region.normal / len) : Vec3::UnitX();
    region.vector = d.dot(region.normal) * region.normal;
  }
  return out;
}

/// Translational penetration depth of posed A (at q = 0) against B.
///
/// Alternates out-projection (translational CCD toward a target) and in-projection (least
/// norm point of the local contact cone) until an in-projection lands in contact. The
/// answer is the smallest in-contact sample seen; d = 0 when the input does not penetrate.
inline PdResult compute_pd(const Body& a, const Body& b, const PdOptions& po, const SeedInputs& inputs = {}) {
  detail::Stopwatch total;
  PdResult res;
  const ProximityOptions opt = ProximityOptions::for_bodies(a, b, po.epsilon_scale, po.feature_cap);
  const CcdOptions copt = CcdOptions::from(opt);
  const Vec3 origin = Vec3::Zero();

  if (classify(a, origin, b, opt, &res.stats) != CollisionStatus::Penetrating) {
    res.total_us = total.us();
    return res;
  }
  res.penetrating_input = true;

  {
    detail::Stopwatch sw;
    const SeedResult seed = auto_seed(a, origin, b, inputs, po.seed, opt);
    res.seed = seed.q;
    res.seed_used = seed.used;
    res.seed_us = sw.us();
  }

  std::optional<Vec3> best;
  int best_contacts = 0;  // feature pairs behind the LCS at the best sample
  auto accept = [&](const Vec3& q, int contacts) {
    if (!best || q.norm() < best->norm()) {
      best = q;
      best_contacts = contacts;
    }
  };

  Vec3 source = res.seed;
  Vec3 target = origin;
  std::optional<Vec3> previous_contact;
  bool done = false;
  while (!done) {
    if (res.iterations >= po.max_outer_iters) {
      res.capped = true;
      break;
    }
    ++res.iterations;
    TraceStep step;

    detail::Stopwatch sw_ccd;
    if ((target - source).norm() == 0.0) {
      res.stalled = true;
      break;
    }
    const CcdResult ccd = out_project(a, source, target, b, opt, copt);
    res.stats += ccd.stats;
    step.ccd_us = sw_ccd.us();
    if (!ccd.toc) {
      res.stalled = true;
      break;
    }
    const Vec3 qc = ccd.contact_translation;
    step.contact = qc;
    if (previous_contact && (qc - *previous_contact).norm() <= 1e-12 * opt.scale) {
      res.stalled = true;
      res.trace.push_back(step);
      break;
    }
    previous_contact = qc;

    detail::Stopwatch sw_lcs;
    std::vector<ContactFeature> feats;
    try {
      feats = contact_features(a, qc, b, opt, target - source, &res.stats);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NotInContact) throw;
      res.stalled = true;
      res.trace.push_back(step);
      break;
    }
    if (feats.empty()) {
      accept(qc, 0);
      // Only vertex-vertex or collinear contacts: no plane to project on.
      res.stalled = true;
      res.trace.push_back(step);
      break;
    }
    const LocalContactSpace lcs = build_lcs(feats);
    step.features = static_cast<int>(feats.size());
    step.rows = lcs.n();
    step.lcs_us = sw_lcs.us();
    accept(qc, step.features);

    detail::Stopwatch sw_pgs;
    const PgsSolution sol = solve(lcs, po.pgs);
    step.pgs_us = sw_pgs.us();
    step.pgs_sweeps = sol.iterations;
    res.pgs_sweeps += static_cast<std::uint64_t>(sol.iterations);
    const Vec3 qi = sol.q;
    step.projected = qi;

    detail::Stopwatch sw_cls;
    step.status = classify(a, qi, b, opt, &res.stats);
    step.classify_us = sw_cls.us();
    res.trace.push_back(step);

    switch (step.status) {
      case CollisionStatus::InContact:
        accept(qi, step.features);
        done = true;
        break;
      case CollisionStatus::Free:
        source = qi;
        target = origin;
        break;
      case CollisionStatus::Penetrating:
        source = qc;
        target = qi;
        break;
    }
  }

  if (!best) throw Error(ErrorCode::SeedingFailed, "no contact configuration reached from the seed");
  res.d = *best - origin;
  res.magnitude = res.d.norm();
  res.contact_count = best_contacts;
  if (po.compute_local_pds) {
    try {
      res.local_pds = local_pds(a, b, res.d, opt, po.cluster_radius_factor * opt.contact_tolerance);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NotInContact) throw;
    }
  }
  res.total_us = total.us();
  return res;
}

}  // namespace polydepth
