// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers to run a subset.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "polydepth/polydepth.hpp"
#include "support.hpp"

namespace pd = polydepth;
using pd::Vec3;
namespace ts = testsupport;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct FrameRun {
  pd::Body a;
  pd::PdResult result;
};

// The CLI's per-frame flow: clearance field for B, coherence cache across frames.
std::vector<FrameRun> run_frames(const pd::TriangleMesh& mesh, const pd::Scenario& sc) {
  const pd::Body body = pd::Body::from_mesh(mesh);
  const pd::ClearanceField field = pd::build_clearance_field(mesh, body.bvh, sc.grid);
  pd::CoherenceCache cache;
  std::vector<FrameRun> out;
  for (std::size_t i = 0; i < sc.frames.size(); ++i) {
    const pd::Pose pose = sc.frames[i].pose();
    FrameRun fr{body.posed(pose), {}};
    pd::SeedInputs in;
    in.cache = &cache;
    in.field = &field;
    in.world_origin = pose.translation;
    pd::PdOptions po;
    po.seed.rng_seed = sc.seed + 0x9E3779B97F4A7C15ull * (i + 1);
    fr.result = pd::compute_pd(fr.a, body, po, in);
    if (fr.result.penetrating_input) cache.push(pose.translation + fr.result.d, pose.rotation);
    out.push_back(std::move(fr));
  }
  return out;
}

struct C1Data {
  std::vector<FrameRun> frames;
  std::vector<pd::Body> bs;
  std::vector<int> which;
  double seconds = 0.0;
};

C1Data& c1_data() {
  static C1Data data = [] {
    C1Data d;
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<std::pair<std::string, pd::TriangleMesh>> meshes = {
        {"cube", pd::shapes::by_name("cube")},
        {"sphere", pd::shapes::by_name("sphere")},
        {"torus", pd::shapes::by_name("torus")},
        {"blob-low", pd::shapes::by_name("blob-low")}};
    for (std::size_t m = 0; m < meshes.size(); ++m) {
      const auto sc = pd::generate_random_scenario(meshes[m].first, meshes[m].second, 125, 1000 + m);
      auto runs = run_frames(meshes[m].second, sc);
      d.bs.push_back(pd::Body::from_mesh(meshes[m].second));
      for (auto& r : runs) {
        d.frames.push_back(std::move(r));
        d.which.push_back(static_cast<int>(m));
      }
    }
    d.seconds = seconds_since(t0);
    return d;
  }();
  return data;
}

Outcome criterion1() {
  auto& d = c1_data();
  int bad = 0;
  for (std::size_t i = 0; i < d.frames.size(); ++i) {
    const auto& fr = d.frames[i];
    const pd::Body& b = d.bs[d.which[i]];
    const auto opt = pd::ProximityOptions::for_bodies(fr.a, b, 1e-5);
    if (pd::classify(fr.a, fr.result.d, b, opt) == pd::CollisionStatus::Penetrating) ++bad;
  }
  const bool ok = bad == 0 && d.frames.size() == 500 && d.seconds < 120.0;
  return {ok, "frames " + std::to_string(d.frames.size()) + ", penetrating results " + std::to_string(bad) +
                  ", " + num(d.seconds) + " s"};
}

Outcome criterion2() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  int count = 0;
  int failures = 0;
  while (count < 100) {
    const auto ma = ts::random_convex(rng, 50);
    const auto mb = ts::random_convex(rng, 50);
    // Same protocol as the random scenarios: shift by half the bounding-box diagonal.
    const Vec3 offset = mb.centroid() - ma.centroid() + 0.5 * mb.bounds().diagonal() * ts::random_unit(rng);
    const auto a = pd::Body::from_mesh(ma.transformed(pd::Pose::from_translation(offset)));
    const auto b = pd::Body::from_mesh(mb);
    const auto opt = pd::ProximityOptions::for_bodies(a, b, 1e-5);
    if (pd::classify(a, Vec3::Zero(), b, opt) != pd::CollisionStatus::Penetrating) continue;
    ++count;
    const auto ref = pd::oracle::convex_pd(a.mesh, Vec3::Zero(), b.mesh);
    double err;
    try {
      const auto res = pd::compute_pd(a, b, pd::PdOptions{});
      err = std::abs(res.magnitude - ref.magnitude) / ref.magnitude;
    } catch (const pd::Error&) {
      err = 1.0;
    }
    if (err > 1e-4) ++failures;
    worst = std::max(worst, err);
  }
  return {failures == 0, "pairs 100, worst relative error " + num(worst) + ", over 1e-4: " + std::to_string(failures)};
}

struct BlobRun {
  std::vector<double> errors_pct;
  std::vector<double> iterations;
  double seconds = 0.0;
};

BlobRun& blob_run() {
  static BlobRun data = [] {
    BlobRun d;
    const auto t0 = std::chrono::steady_clock::now();
    const auto mesh = pd::shapes::by_name("blob");
    const auto sc = pd::generate_random_scenario("blob", mesh, 100, 77);
    const auto runs = run_frames(mesh, sc);
    for (const auto& fr : runs) {
      const auto ref = pd::oracle::sampled_pd(fr.a.mesh, Vec3::Zero(), mesh, 1024);
      d.errors_pct.push_back(100.0 * pd::oracle::relative_error(fr.result.magnitude, ref.magnitude, mesh, mesh));
      d.iterations.push_back(fr.result.iterations);
    }
    d.seconds = seconds_since(t0);
    return d;
  }();
  return data;
}

Outcome criterion3() {
  auto& d = blob_run();
  const double m = mean(d.errors_pct), md = median(d.errors_pct);
  return {m <= 2.0 && md <= 0.5 && d.seconds <= 600.0,
          "mean " + num(m) + " %, median " + num(md) + " %, " + num(d.seconds) + " s"};
}

Outcome criterion4() {
  auto& d = blob_run();
  const double m = mean(d.iterations), md = median(d.iterations);
  return {md <= 3.0 && m <= 4.0, "median " + num(md) + ", mean " + num(m)};
}

Outcome criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(5);
  double worst = 0.0;
  int failures = 0;
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + trial % 12;
    // Gaussian rows in 2n..2n+3 dimensions, unit-normalized: J J^T is SPD.
    const int m = 2 * n + static_cast<int>(ts::uniform(rng, 0.0, 4.0));
    Eigen::MatrixXd J(n, m);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) J(i, j) = gauss(rng);
      J.row(i).normalize();
    }
    Eigen::VectorXd c(n);
    for (int i = 0; i < n; ++i) c[i] = gauss(rng);
    const auto sol = pd::solve_pgs(J, c);
    const Eigen::VectorXd lam = ts::active_set_lambda(J, c);
    const Eigen::VectorXd q_ref = 0.25 * J.transpose() * lam;
    const double err = (sol.q - q_ref).norm() / (1.0 + q_ref.norm());
    if (!(err <= 1e-6)) ++failures;
    worst = std::max(worst, std::isfinite(err) ? err : 1.0);
  }
  const double secs = seconds_since(t0);
  return {failures == 0 && secs <= 30.0,
          "systems 1000, worst scaled error " + num(worst) + ", failures " + std::to_string(failures) + ", " +
              num(secs) + " s"};
}

Outcome criterion6() {
  std::mt19937_64 rng(6);
  const std::vector<pd::TriangleMesh> pool = {pd::shapes::unit_cube(), pd::shapes::icosphere(0.6, 1),
                                              pd::shapes::blob(10, 6), pd::shapes::torus(0.8, 0.3, 10, 6),
                                              pd::shapes::torus_knot(2, 3, 0.4, 24, 4)};
  int cases = 0, penetrating = 0, mismatched = 0, contacts = 0;
  double worst = 0.0;
  long steps = 0;
  while (cases < 1000) {
    const auto& ma = pool[cases % pool.size()];
    const auto& mb = pool[(cases / pool.size()) % pool.size()];
    const auto a = pd::Body::from_mesh(ma.transformed(ts::random_rotation(rng)));
    const auto b = pd::Body::from_mesh(mb.transformed(ts::random_rotation(rng)));
    const double reach = a.radius() + b.radius();
    const Vec3 qs = b.mesh.centroid() - a.mesh.centroid() + ts::uniform(rng, 0.6, 1.5) * reach * ts::random_unit(rng);
    const Vec3 aim = b.mesh.centroid() - a.mesh.centroid() + ts::uniform(rng, 0.0, 0.8) * reach * ts::random_unit(rng);
    const Vec3 qt = qs + ts::uniform(rng, 0.5, 2.0) * (aim - qs);
    const auto popt = pd::ProximityOptions::for_bodies(a, b, 1e-5);
    if (pd::classify(a, qs, b, popt) != pd::CollisionStatus::Free) continue;
    ++cases;
    const auto copt = pd::CcdOptions::from(popt);
    const auto res = pd::out_project(a, qs, qt, b, popt, copt);
    // Conservativeness: nothing between the source and the returned configuration penetrates.
    for (int k = 1; k <= 8; ++k) {
      const Vec3 q = qs + (k / 8.0) * (res.contact_translation - qs);
      if (ts::naive_crossing(a.mesh, q, b.mesh, popt.penetration_tolerance)) {
        ++penetrating;
        break;
      }
    }
    const auto ref = ts::naive_toc(a.mesh, qs, qt, b.mesh, 0.5 * copt.contact_gap);
    if (ref.has_value() != res.toc.has_value()) {
      ++mismatched;
      worst = std::max(worst, 1.0);
      continue;
    }
    if (res.toc) {
      ++contacts;
      steps += res.advancement_steps;
      const double e = std::abs(*res.toc - *ref);
      worst = std::max(worst, e);
      if (e > 1e-5) ++mismatched;
    }
  }
  const double mean_steps = contacts ? double(steps) / contacts : 0.0;
  return {penetrating == 0 && mismatched == 0 && mean_steps <= 4.0,
          "cases 1000 (" + std::to_string(contacts) + " with contact), penetrating samples " +
              std::to_string(penetrating) + ", tau mismatches " + std::to_string(mismatched) + " (worst " +
              num(worst) + "), mean CA steps " + num(mean_steps)};
}

Outcome criterion7() {
  auto& d = c1_data();
  int violations = 0;
  std::size_t regions = 0;
  for (const auto& fr : d.frames) {
    for (const auto& r : fr.result.local_pds) {
      ++regions;
      if (r.vector.norm() > fr.result.magnitude * (1.0 + 1e-12)) ++violations;
    }
  }
  const auto fx = ts::fork_fixture(0.2);
  const auto a = pd::Body::from_mesh(fx.fork);
  const auto b = pd::Body::from_mesh(fx.base);
  const auto res = pd::compute_pd(a, b, pd::PdOptions{});
  bool fork_ok = res.local_pds.size() >= 2;
  int sliding = 0;
  double worst_sliding = 0.0;
  for (const auto& r : res.local_pds) {
    if (std::abs(r.normal.dot(Vec3::UnitZ())) < 1e-9) {
      ++sliding;
      worst_sliding = std::max(worst_sliding, r.vector.norm());
      if (r.vector.norm() > 1e-9) fork_ok = false;
    } else if ((r.vector - res.d).norm() > 1e-9) {
      fork_ok = false;
    }
  }
  if (sliding == 0) fork_ok = false;
  return {violations == 0 && fork_ok,
          "regions checked " + std::to_string(regions) + ", |d_i| > |d|: " + std::to_string(violations) +
              "; fork d = (" + num(res.d.x()) + ", " + num(res.d.y()) + ", " + num(res.d.z()) + "), sliding regions " +
              std::to_string(sliding) + " with max |d_i| " + num(worst_sliding)};
}

Outcome criterion8() {
  std::string detail;
  bool ok = true;
  // Cup: a probe sunk into the floor of the cavity.
  {
    const auto cup = pd::shapes::by_name("cup");
    const auto b = pd::Body::from_mesh(cup);
    const auto field = pd::build_clearance_field(cup, b.bvh, 32);
    int inside = 0;
    for (const auto& p : field.clear_points) {
      if (std::abs(p.x()) < 0.85 && std::abs(p.y()) < 0.85 && p.z() > 0.15 && p.z() < 1.5) ++inside;
    }
    int seeds = 0, free = 0;
    std::mt19937_64 rng(8);
    for (int k = 0; k < 20; ++k) {
      const Vec3 at(ts::uniform(rng, -0.6, 0.6), ts::uniform(rng, -0.6, 0.6), 0.15);
      const auto a = pd::Body::from_mesh(pd::shapes::icosphere(0.2, 2, at));
      const auto opt = pd::ProximityOptions::for_bodies(a, b, 1e-5);
      const auto s = pd::seed_from_clearance(field, a, Vec3::Zero(), b, opt);
      if (!s) continue;
      ++seeds;
      if (pd::classify(a, *s, b, opt) == pd::CollisionStatus::Free) ++free;
    }
    ok = ok && inside > 0 && seeds > 0 && free == seeds;
    detail += "cup: cavity points " + std::to_string(inside) + ", seeds " + std::to_string(seeds) + " free " +
              std::to_string(free);
  }
  // Grate: a thin bar pushed through the plate within a slot.
  {
    const auto grate = pd::shapes::by_name("grate");
    const auto b = pd::Body::from_mesh(grate);
    const auto field = pd::build_clearance_field(grate, b.bvh, 32);
    int in_slot = 0;
    for (const auto& p : field.clear_points) {
      bool slot = false;
      for (int k = 0; k < 3; ++k) {
        const double x0 = -1.0 + 0.125 + k * 0.625;
        if (p.x() > x0 && p.x() < x0 + 0.5) slot = true;
      }
      if (slot && std::abs(p.y()) < 0.75 && std::abs(p.z()) < 0.1) ++in_slot;
    }
    int seeds = 0, free = 0;
    std::mt19937_64 rng(9);
    for (int k = 0; k < 20; ++k) {
      const Vec3 at(ts::uniform(rng, -0.9, 0.9), ts::uniform(rng, -0.6, 0.6), 0.0);
      const auto a = pd::Body::from_mesh(pd::shapes::box(at - Vec3(0.05, 0.3, 0.3), at + Vec3(0.05, 0.3, 0.3)));
      const auto opt = pd::ProximityOptions::for_bodies(a, b, 1e-5);
      if (pd::classify(a, Vec3::Zero(), b, opt) != pd::CollisionStatus::Penetrating) continue;
      const auto s = pd::seed_from_clearance(field, a, Vec3::Zero(), b, opt);
      if (!s) continue;
      ++seeds;
      if (pd::classify(a, *s, b, opt) == pd::CollisionStatus::Free) ++free;
    }
    ok = ok && in_slot > 0 && seeds > 0 && free == seeds;
    detail += "; grate: slot points " + std::to_string(in_slot) + ", seeds " + std::to_string(seeds) + " free " +
              std::to_string(free);
  }
  return {ok, detail};
}

Outcome criterion9() {
  const auto mesh = pd::shapes::by_name("blob-40k");
  const auto sc = pd::generate_random_scenario("blob-40k", mesh, 30, 99);
  const auto runs = run_frames(mesh, sc);
  std::vector<double> ms;
  for (std::size_t i = 1; i < runs.size(); ++i) ms.push_back(runs[i].result.total_us / 1000.0);
  const double med = median(ms);

  // Per-unit costs fitted on odd frames by least squares, then used to predict the
  // iteration time of the even frames from their counters alone.
  auto row = [](const pd::PdResult& r) {
    double g = 0.0;
    for (const auto& s : r.trace) g += double(s.pgs_sweeps) * s.rows * s.rows;
    return Eigen::Vector3d(double(r.stats.bv_tests), double(r.stats.primitive_tests), g);
  };
  std::vector<int> fit, check;
  for (std::size_t i = 1; i < runs.size(); ++i) (i % 2 ? fit : check).push_back(static_cast<int>(i));
  Eigen::MatrixXd X(fit.size(), 3);
  Eigen::VectorXd y(fit.size());
  for (std::size_t k = 0; k < fit.size(); ++k) {
    const auto& r = runs[fit[k]].result;
    X.row(k) = row(r).transpose();
    y[k] = r.total_us - r.seed_us;
  }
  // Non-negative least squares by trying every support set of the three unit costs.
  Eigen::Vector3d cost = Eigen::Vector3d::Zero();
  double best_resid = y.squaredNorm();
  for (int mask = 1; mask < 8; ++mask) {
    std::vector<int> cols;
    for (int j = 0; j < 3; ++j)
      if (mask & (1 << j)) cols.push_back(j);
    Eigen::MatrixXd Xs(X.rows(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) Xs.col(j) = X.col(cols[j]);
    const Eigen::VectorXd w = Xs.colPivHouseholderQr().solve(y);
    if ((w.array() < 0.0).any()) continue;
    const double resid = (Xs * w - y).squaredNorm();
    if (resid < best_resid) {
      best_resid = resid;
      cost.setZero();
      for (std::size_t j = 0; j < cols.size(); ++j) cost[cols[j]] = w[j];
    }
  }
  double predicted = 0.0, measured = 0.0;
  for (int i : check) {
    const auto& r = runs[i].result;
    predicted += row(r).dot(cost);
    measured += r.total_us - r.seed_us;
  }
  const double gap = std::abs(predicted - measured) / measured;
  return {med <= 50.0 && gap <= 0.2,
          "triangles " + std::to_string(mesh.triangle_count()) + ", median " + num(med) +
              " ms, counter model error on held-out frames " + num(100.0 * gap) + " % (C_bv " + num(cost[0]) +
              " us, C_p " + num(cost[1]) + " us, C_G " + num(cost[2]) + " us)"};
}

Outcome criterion10() {
  const auto dir = std::filesystem::temp_directory_path() / "polydepth_acceptance";
  std::filesystem::create_directories(dir);
  const std::string obj = (dir / "blob-low.obj").string();
  pd::save_obj(obj, pd::shapes::by_name("blob-low"));
  auto sc = pd::generate_random_scenario(obj, pd::load_obj(obj), 20, 10);
  sc.oracle_directions = 256;
  pd::RunOptions ro;
  ro.timing = false;
  ro.use_field_cache = false;
  std::ostringstream first, second;
  pd::write_csv(first, pd::run_scenario(sc, ro));
  pd::write_csv(second, pd::run_scenario(sc, ro));
  const bool same = first.str() == second.str();
  return {same, same ? "20-frame CSVs identical (" + std::to_string(first.str().size()) + " bytes)"
                     : "CSV output differs between runs"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3, criterion4,
                                                          criterion5, criterion6, criterion7, criterion8,
                                                          criterion9, criterion10};
  // Arguments: criterion numbers to run (default all). "--known-fail N" declares a criterion
  // that is expected to fail; the exit status is then 0 only if exactly the declared ones fail.
  std::set<int> pick, known;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--known-fail" && i + 1 < argc) {
      known.insert(std::stoi(argv[++i]));
    } else {
      pick.insert(std::stoi(arg));
    }
  }
  std::set<int> failed;
  for (int i = 0; i < static_cast<int>(criteria.size()); ++i) {
    if (!pick.empty() && !pick.count(i + 1)) continue;
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) failed.insert(i + 1);
    std::cout << "criterion " << (i + 1) << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
  }
  std::set<int> expected;
  for (int k : known)
    if (pick.empty() || pick.count(k)) expected.insert(k);
  if (!known.empty()) {
    std::cout << "failed:";
    for (int k : failed) std::cout << ' ' << k;
    std::cout << "  declared known failures:";
    for (int k : expected) std::cout << ' ' << k;
    std::cout << std::endl;
  }
  return failed == expected ? 0 : 1;
}
