#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "polydepth/bvh.hpp"
#include "polydepth/error.hpp"
#include "polydepth/geometry.hpp"
#include "polydepth/proximity.hpp"

namespace polydepth {

struct CcdOptions {
  double contact_gap = 5e-6;  // CA stops once a pair is closer than this (epsilon / 2)
  int max_steps = 64;         // per triangle pair
  double approach_floor = 1e-12;

  static CcdOptions from(const ProximityOptions& p) {
    CcdOptions o;
    o.contact_gap = 0.5 * p.contact_tolerance;
    return o;
  }
};

struct PairMdd {
  double distance = geom::kInf;  // travel along unit v until contact
  int steps = 0;
  bool capped = false;
};

namespace detail {

// Direction from A toward B for a pair already touching, from the realizing features.
inline Vec3 touching_direction(const TriangleCorners& ta, const TriangleCorners& tb, const geom::TriangleDistance& td) {
  const Vec3 na = (ta[1] - ta[0]).cross(ta[2] - ta[0]).normalized();
  const Vec3 nb = (tb[1] - tb[0]).cross(tb[2] - tb[0]).normalized();
  const Vec3 ca = (ta[0] + ta[1] + ta[2]) / 3.0;
  const Vec3 cb = (tb[0] + tb[1] + tb[2]) / 3.0;
  Vec3 n;
  switch (td.feature) {
    case geom::PairFeature::VertexFace: n = nb; break;
    case geom::PairFeature::FaceVertex: n = na; break;
    default: {
      n = na.cross(nb);
      if (n.norm() < 1e-12) n = nb;
      n.normalize();
    }
  }
  return n.dot(cb - ca) >= 0.0 ? n : Vec3(-n);
}

}  // namespace detail

/// Minimal directional distance between two triangles: how far ta travels along v before
/// coming within the contact gap of tb. Conservative advancement with mu = v.n.
/// Returns +inf when the pair never meets or the travel exceeds `limit`.
inline PairMdd triangle_mdd(const TriangleCorners& ta, const TriangleCorners& tb, const Vec3& v, const CcdOptions& opt,
                            double limit = geom::kInf) {
  const double vlen = v.norm();
  if (!(vlen > 0.0)) throw Error(ErrorCode::InvalidArgument, "zero direction");
  const Vec3 u = v / vlen;
  PairMdd out;
  double s = 0.0;
  double stop = opt.contact_gap;
  double aim = 0.5 * stop;
  for (int k = 0; k < opt.max_steps; ++k) {
    const auto td = geom::triangle_distance(geom::translated(ta, s * u), tb);
    ++out.steps;
    const double d = td.distance;
    if (k == 0) {
      if (d <= 0.0) {
        // Touching already: contact now unless moving apart or sliding.
        const Vec3 n = detail::touching_direction(ta, tb, td);
        if (u.dot(n) > opt.approach_floor) out.distance = 0.0;
        return out;
      }
      if (d < stop) {
        stop = 0.5 * d;
        aim = 0.5 * stop;
      }
    }
    if (d < stop) {
      out.distance = s;
      return out;
    }
    const double mu = u.dot(td.pb - td.pa) / d;
    if (mu <= opt.approach_floor) return out;
    s += (d - aim) / mu;
    if (s > limit) return out;
  }
  out.distance = s;
  out.capped = true;
  return out;
}

struct MddResult {
  double distance = geom::kInf;
  int triangle_a = -1;
  int triangle_b = -1;
  QueryStats stats;
  bool capped = false;
};

/// Minimum triangle_mdd over all pairs, branch and bound over both hierarchies.
/// Node bounds come from the volumes inflated by the contact gap.
inline MddResult mdd(const Body& a, const Vec3& qa, const Body& b, const Vec3& v, const CcdOptions& opt,
                     double limit = geom::kInf) {
  if (!(v.norm() > 0.0)) throw Error(ErrorCode::InvalidArgument, "zero direction");
  MddResult out;
  double best = limit;
  struct Item {
    double bound;
    int ia;
    int ib;
  };
  auto bound = [&](int ia, int ib) {
    ++out.stats.bv_tests;
    return node_directional_distance(a.bvh.node(ia).volume, qa, b.bvh.node(ib).volume, v, opt.contact_gap, best);
  };
  std::vector<Item> stack{{bound(0, 0), 0, 0}};
  while (!stack.empty()) {
    const Item it = stack.back();
    stack.pop_back();
    if (!(it.bound <= best)) continue;
    const BvhNode& na = a.bvh.node(it.ia);
    const BvhNode& nb = b.bvh.node(it.ib);
    if (na.is_leaf() && nb.is_leaf()) {
      for (int ta : a.bvh.triangles_of(na)) {
        for (int tb : b.bvh.triangles_of(nb)) {
          ++out.stats.primitive_tests;
          const auto r =
              triangle_mdd(geom::translated(a.mesh.corners(ta), qa), b.mesh.corners(tb), v, opt, best);
          out.stats.ca_steps += r.steps;
          if (r.distance < best || (r.distance <= best && out.triangle_a < 0 && r.distance < geom::kInf)) {
            best = r.distance;
            out.distance = r.distance;
            out.triangle_a = ta;
            out.triangle_b = tb;
            out.capped = r.capped;
          }
        }
      }
      continue;
    }
    const bool split_a = nb.is_leaf() || (!na.is_leaf() && na.volume.radius >= nb.volume.radius);
    Item c0 = split_a ? Item{0.0, na.left, it.ib} : Item{0.0, it.ia, nb.left};
    Item c1 = split_a ? Item{0.0, na.left + 1, it.ib} : Item{0.0, it.ia, nb.left + 1};
    c0.bound = bound(c0.ia, c0.ib);
    c1.bound = bound(c1.ia, c1.ib);
    if (c0.bound > c1.bound) std::swap(c0, c1);
    stack.push_back(c1);
    stack.push_back(c0);
  }
  return out;
}

struct CcdResult {
  std::optional<double> toc;  // empty: no contact on the segment
  Vec3 contact_translation = Vec3::Zero();
  int advancement_steps = 0;  // CA steps on the pair that realized the contact
  QueryStats stats;
  bool capped = false;
};

/// Moves A from q_s toward q_t and stops at the first contact.
inline CcdResult out_project(const Body& a, const Vec3& q_s, const Vec3& q_t, const Body& b,
                             const ProximityOptions& popt, const CcdOptions& opt) {
  const Vec3 v = q_t - q_s;
  const double len = v.norm();
  if (!(len > 0.0)) throw Error(ErrorCode::InvalidArgument, "source and target coincide");
  CcdResult out;
  double d0 = geom::kInf;
  if (classify(a, q_s, b, popt, &out.stats, &d0) == CollisionStatus::Penetrating) {
    throw Error(ErrorCode::SourcePenetrating, "out-projection source is penetrating");
  }
  // A source already within the gap (the usual case inside the outer loop) would report
  // contact as soon as a neighbouring pair comes as close as the sliding one. Only a
  // further approach counts: stop at half the current clearance.
  CcdOptions local = opt;
  if (d0 < opt.contact_gap) local.contact_gap = std::max(0.5 * d0, 1e-3 * opt.contact_gap);
  const MddResult m = mdd(a, q_s, b, v, local, len);
  out.stats += m.stats;
  out.capped = m.capped;
  if (!(m.distance <= len)) {
    out.contact_translation = q_t;
    return out;
  }
  const double tau = std::clamp(m.distance / len, 0.0, 1.0);
  out.toc = tau;
  out.contact_translation = q_s + tau * v;
  out.advancement_steps =
      triangle_mdd(geom::translated(a.mesh.corners(m.triangle_a), q_s), b.mesh.corners(m.triangle_b), v, local).steps;
  return out;
}

}  // namespace polydepth
