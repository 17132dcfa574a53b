// Benchmark driver: run scenarios, generate random scenarios, write procedural meshes.
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "polydepth/polydepth.hpp"

namespace pd = polydepth;

namespace {

int cmd_run(const std::string& path, std::optional<int> oracle, const std::string& strategy,
            const std::string& csv_path, const std::string& summary_path, std::optional<int> grid,
            std::optional<int> feature_cap, std::optional<double> eps, bool no_timing, bool no_cache,
            const std::string& cache_dir) {
  const pd::Scenario sc = pd::load_scenario(path);
  pd::RunOptions ro;
  ro.timing = !no_timing;
  ro.oracle_directions = oracle;
  if (!strategy.empty()) ro.strategy = pd::parse_seed_strategy(strategy);
  ro.grid = grid;
  ro.feature_cap = feature_cap;
  ro.epsilon_scale = eps;
  ro.use_field_cache = !no_cache;
  ro.field_cache_dir = cache_dir;
  const pd::RunReport rep = pd::run_scenario(sc, ro);

  if (csv_path.empty() || csv_path == "-") {
    pd::write_csv(std::cout, rep);
  } else {
    std::ofstream out(csv_path);
    if (!out) throw pd::Error(pd::ErrorCode::Io, "cannot write " + csv_path);
    pd::write_csv(out, rep);
  }
  if (summary_path.empty()) {
    pd::write_summary(csv_path.empty() || csv_path == "-" ? std::cerr : std::cout, rep);
  } else {
    std::ofstream out(summary_path);
    if (!out) throw pd::Error(pd::ErrorCode::Io, "cannot write " + summary_path);
    pd::write_summary(out, rep);
  }
  return 0;
}

int cmd_gen(const std::string& mesh_path, int frames, std::uint64_t seed, const std::string& out_path,
            double eps) {
  const pd::TriangleMesh mesh = pd::load_obj(mesh_path);
  pd::Scenario sc = pd::generate_random_scenario(mesh_path, mesh, frames, seed, eps);
  if (out_path.empty() || out_path == "-") {
    pd::write_scenario(std::cout, sc);
  } else {
    // Store mesh paths relative to the scenario file.
    sc.mesh_a = sc.mesh_b = std::filesystem::absolute(mesh_path).lexically_normal().string();
    const auto base = std::filesystem::absolute(out_path).parent_path();
    std::ofstream out(out_path);
    if (!out) throw pd::Error(pd::ErrorCode::Io, "cannot write " + out_path);
    pd::write_scenario(out, sc, base);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Translational penetration depth between triangle meshes"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Compute PD for every frame of a scenario file");
  std::string scenario_path, strategy, csv_path, summary_path, cache_dir;
  std::optional<int> oracle, grid, feature_cap;
  std::optional<double> eps;
  bool no_timing = false, no_cache = false;
  run->add_option("scenario", scenario_path, "Scenario file")->required()->check(CLI::ExistingFile);
  run->add_option("--oracle", oracle, "Compare against the sampled reference (directions, default 1024)")
      ->expected(0, 1)
      ->default_str("1024");
  run->add_option("--strategy", strategy, "Seeding: auto, centroid, clearance, coherence, random")
      ->check(CLI::IsMember({"auto", "centroid", "clearance", "coherence", "random"}));
  run->add_option("--csv", csv_path, "Per-frame CSV output (default stdout)");
  run->add_option("--summary", summary_path, "Summary output (default stderr, or stdout with --csv)");
  run->add_option("--grid", grid, "Clearance grid points per axis (0 disables)")->check(CLI::Range(0, 1024));
  run->add_option("--feature-cap", feature_cap, "Maximum contact planes per iteration")->check(CLI::Range(1, 1000));
  run->add_option("--epsilon-scale", eps, "Contact tolerance as a fraction of the larger bounding radius")
      ->check(CLI::PositiveNumber);
  run->add_flag("--no-timing", no_timing, "Write zero timings so repeated runs are byte-identical");
  run->add_flag("--no-field-cache", no_cache, "Do not read or write clearance sidecar files");
  run->add_option("--cache-dir", cache_dir, "Directory for clearance sidecar files");

  auto* gen = app.add_subcommand("gen-random", "Random penetrating frames of a mesh against itself");
  std::string mesh_path, out_path;
  int frames = 100;
  std::uint64_t seed = 1;
  double gen_eps = 1e-5;
  gen->add_option("mesh", mesh_path, "OBJ mesh")->required()->check(CLI::ExistingFile);
  gen->add_option("--frames", frames, "Number of frames")->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "Random seed");
  gen->add_option("-o,--output", out_path, "Scenario file to write (default stdout)");
  gen->add_option("--epsilon-scale", gen_eps, "Contact tolerance used for the penetration filter")
      ->check(CLI::PositiveNumber);

  auto* make = app.add_subcommand("make-mesh", "Write a procedural mesh as OBJ");
  std::string shape, mesh_out;
  make->add_option("shape", shape, "cube, sphere, torus, knot, blob, blob-low, blob-40k, cup, hollow-cube, grate")
      ->required();
  make->add_option("output", mesh_out, "OBJ file to write")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) {
      return cmd_run(scenario_path, oracle, strategy, csv_path, summary_path, grid, feature_cap, eps, no_timing,
                     no_cache, cache_dir);
    }
    if (*gen) return cmd_gen(mesh_path, frames, seed, out_path, gen_eps);
    if (*make) {
      pd::save_obj(mesh_out, pd::shapes::by_name(shape));
      return 0;
    }
  } catch (const pd::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
