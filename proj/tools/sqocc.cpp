/* Copyright 2026 The sqocc Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
// sqocc command line tool: scene generation, Gaussianization, voxelization,
// rendering, metrics and benchmarking.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sqocc.hpp"

namespace {

using namespace sqocc;
using nlohmann::json;
namespace fs = std::filesystem;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Options shared by several subcommands.
struct GridFlags {
  std::vector<double> origin{-40.0, -40.0, -1.0};
  std::vector<int> dims{200, 200, 16};
  double resolution = 0.4;

  void add(CLI::App* app) {
    app->add_option("--grid-origin", origin, "Minimum grid corner x,y,z (m)")->delimiter(',')->expected(3);
    app->add_option("--grid-dims", dims, "Voxel counts nx,ny,nz")->delimiter(',')->expected(3);
    app->add_option("--resolution", resolution, "Voxel edge length (m)");
  }

  VoxelGridSpec spec() const {
    VoxelGridSpec s;
    s.origin = Vec3(origin[0], origin[1], origin[2]);
    s.dims = {dims[0], dims[1], dims[2]};
    s.resolution = resolution;
    s.validate();
    return s;
  }
};

struct GaussianizeFlags {
  GaussianizeConfig cfg;
  std::string opacity_sign = "aligned";

  void add(CLI::App* app) {
    app->add_option("--level", cfg.level, "Icosphere subdivision level");
    app->add_option("--k-values", cfg.k_values, "Layer scale list, comma separated")->delimiter(',');
    app->add_option("--opacity-sign", opacity_sign, "Layer opacity sign")
        ->check(CLI::IsMember({"aligned", "paper"}));
    app->add_option("--xy-coverage", cfg.xy_coverage, "Tangential scale multiplier on sqrt(face area)");
  }

  GaussianizeConfig config() const {
    GaussianizeConfig c = cfg;
    c.opacity_sign = opacity_sign == "paper" ? OpacitySign::kPositiveExponent : OpacitySign::kAligned;
    c.validate();
    return c;
  }
};

struct VoxelizeFlags {
  VoxelizeConfig cfg;
  std::string semantic = "logit";

  void add(CLI::App* app) {
    app->add_option("--tau", cfg.tau, "Occupancy threshold");
    app->add_option("--neighborhood", cfg.neighborhood_radius, "Base window radius in voxels");
    app->add_option("--semantic-mode", semantic, "Class aggregation")->check(CLI::IsMember({"logit", "prob"}));
  }

  VoxelizeConfig config() const {
    VoxelizeConfig c = cfg;
    c.semantic_mode = semantic == "prob" ? SemanticMode::kProbSum : SemanticMode::kLogitSum;
    c.validate();
    return c;
  }
};

void emit(const json& j, const std::string& format) {
  if (format == "json") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  for (const auto& [k, v] : j.items()) {
    if (v.is_object()) {
      for (const auto& [k2, v2] : v.items()) std::cout << k << '.' << k2 << '=' << v2.dump() << '\n';
    } else {
      std::cout << k << '=' << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
    }
  }
}

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(v.size() - 1, lo + 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

json timing_stats(const std::vector<double>& t) {
  return {{"min_s", *std::min_element(t.begin(), t.end())},
          {"p50_s", percentile(t, 0.5)},
          {"p90_s", percentile(t, 0.9)},
          {"max_s", *std::max_element(t.begin(), t.end())}};
}

void write_render_outputs(const std::string& prefix, const RenderOutput& out, const std::vector<io::Rgb>& palette) {
  io::write_atomic(prefix + "_depth.pfm",
                   [&](std::ostream& os) { io::write_pfm(os, out.width, out.height, out.depth); });
  io::write_atomic(prefix + "_semantic.ppm", [&](std::ostream& os) { io::write_ppm(os, out, palette); });
  io::write_atomic(prefix + "_alpha.pgm",
                   [&](std::ostream& os) { io::write_pgm(os, out.width, out.height, out.alpha); });
}

// Agreement between two renders on pixels where both alphas reach the
// semantic threshold.
json render_diff(const RenderOutput& a, const RenderOutput& b, double alpha_threshold) {
  std::size_t both = 0, agree = 0;
  std::vector<double> rel;
  double alpha_diff = 0.0;
  for (std::size_t i = 0; i < a.alpha.size(); ++i) {
    alpha_diff += std::abs(a.alpha[i] - b.alpha[i]);
    if (a.alpha[i] < alpha_threshold || b.alpha[i] < alpha_threshold) continue;
    ++both;
    agree += a.semantic[i] == b.semantic[i];
    rel.push_back(std::abs(a.depth[i] - b.depth[i]) / b.depth[i]);
  }
  json j{{"pixels_both_visible", both}, {"mean_abs_alpha_diff", alpha_diff / static_cast<double>(a.alpha.size())}};
  j["semantic_agreement"] = both ? json(static_cast<double>(agree) / static_cast<double>(both)) : json(nullptr);
  j["median_rel_depth_error"] = rel.empty() ? json(nullptr) : json(percentile(rel, 0.5));
  return j;
}

int run(int argc, char** argv) {
  CLI::App app{"Superquadric occupancy toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string format = "text";
  app.add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "text"}));

  // gen-scene
  auto* gen = app.add_subcommand("gen-scene", "Write a seeded synthetic scene");
  std::uint64_t seed = 0;
  std::size_t count = 0;
  std::string out_path;
  GridFlags gen_grid;
  gen->add_option("--seed", seed, "Random seed")->required();
  gen->add_option("--n", count, "Number of primitives")->required();
  gen->add_option("--out", out_path, "Output scene file")->required();
  gen_grid.add(gen);

  // gaussianize
  auto* gau = app.add_subcommand("gaussianize", "Build the Gaussian approximation of a scene");
  std::string scene_path, mesh_path;
  GaussianizeFlags gau_flags;
  gau->add_option("--scene", scene_path, "Input scene file")->required()->check(CLI::ExistingFile);
  gau->add_option("--out", out_path, "Output cloud file")->required();
  gau->add_option("--dump-mesh", mesh_path, "Write the first primitive's deformed k=1 mesh as OFF");
  gau_flags.add(gau);

  // voxelize
  auto* vox = app.add_subcommand("voxelize", "Voxelize a scene into an SQOC grid");
  GridFlags vox_grid;
  VoxelizeFlags vox_flags;
  bool oracle = false;
  unsigned threads = 0;
  vox->add_option("--scene", scene_path, "Input scene file")->required()->check(CLI::ExistingFile);
  vox->add_option("--out", out_path, "Output SQOC file")->required();
  vox->add_flag("--oracle", oracle, "Also run the brute-force voxelizer and report max |dv_o|");
  vox->add_option("--threads", threads, "Worker threads (0: automatic)");
  vox_grid.add(vox);
  vox_flags.add(vox);

  // render
  auto* ren = app.add_subcommand("render", "Render depth, semantic and alpha maps");
  std::string camera_path, mode = "splat", palette_path;
  double step = 0.025, alpha_threshold = 0.5;
  GaussianizeFlags ren_gau;
  ren->add_option("--scene", scene_path, "Scene or Gaussian cloud file")->required()->check(CLI::ExistingFile);
  ren->add_option("--camera", camera_path, "Camera JSON file")->required()->check(CLI::ExistingFile);
  ren->add_option("--mode", mode, "Renderer")->check(CLI::IsMember({"splat", "raymarch", "both"}));
  ren->add_option("--step", step, "Ray-march step (m)");
  ren->add_option("--out", out_path, "Output file prefix")->required();
  ren->add_option("--palette", palette_path, "Class colours, one 'r g b' line per class")->check(CLI::ExistingFile);
  ren->add_option("--alpha-threshold", alpha_threshold, "Minimum alpha for a semantic label");
  ren_gau.add(ren);

  // metrics
  auto* met = app.add_subcommand("metrics", "Compare two SQOC grids");
  std::string pred_path, gt_path;
  std::vector<double> thresholds = default_ray_thresholds();
  int azimuths = 360;
  met->add_option("--pred", pred_path, "Predicted grid")->required()->check(CLI::ExistingFile);
  met->add_option("--gt", gt_path, "Ground-truth grid")->required()->check(CLI::ExistingFile);
  met->add_option("--thresholds", thresholds, "RayIoU thresholds (m), comma separated")->delimiter(',');
  met->add_option("--azimuths", azimuths, "Rays per elevation");

  // bench
  auto* ben = app.add_subcommand("bench", "Time the pipeline stages on one scene");
  GridFlags ben_grid;
  VoxelizeFlags ben_vox;
  GaussianizeFlags ben_gau;
  int repetitions = 3;
  ben->add_option("--scene", scene_path, "Scene file (default: seeded synthetic scene)")->check(CLI::ExistingFile);
  ben->add_option("--seed", seed, "Seed for the synthetic scene");
  ben->add_option("--n", count, "Primitives in the synthetic scene")->default_val(1600);
  ben->add_option("--repetitions", repetitions, "Timed repetitions per stage")->check(CLI::PositiveNumber);
  ben->add_option("--camera", camera_path, "Camera JSON for the render stage")->check(CLI::ExistingFile);
  ben->add_flag("--oracle", oracle, "Also time the brute-force voxelizer once");
  ben->add_option("--out", out_path, "Also write the JSON report to this file");
  ben_grid.add(ben);
  ben_vox.add(ben);
  ben_gau.add(ben);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (gen->parsed()) {
    const auto scene = gen_scene(seed, count, gen_grid.spec());
    io::write_scene_file(out_path, scene);
    emit({{"primitives", scene.primitives.size()}, {"out", out_path}}, format);
    return 0;
  }

  if (gau->parsed()) {
    const auto cfg = gau_flags.config();
    const auto scene = io::read_scene_file(scene_path);
    BuildReport report;
    const auto t0 = Clock::now();
    const auto cloud = gaussianize(scene, cfg, &report);
    const double elapsed = seconds_since(t0);
    io::write_cloud_file(out_path, cloud);
    if (!mesh_path.empty()) {
      if (scene.primitives.empty()) throw std::invalid_argument("--dump-mesh needs at least one primitive");
      const auto& sq = scene.primitives.front();
      const auto mesh = icosphere(cfg.level);
      io::write_atomic(mesh_path, [&](std::ostream& os) {
        write_off(os, deform_vertices(mesh, sq.scale, sq.eps1, sq.eps2), mesh.faces);
      });
    }
    json j{{"gaussians", cloud.size()},
           {"primitives", scene.primitives.size()},
           {"degenerate_skipped", report.degenerate_skipped},
           {"culled", report.culled},
           {"seconds", elapsed}};
    if (!report.per_primitive.empty()) {
      j["per_primitive_min"] = *std::min_element(report.per_primitive.begin(), report.per_primitive.end());
      j["per_primitive_max"] = *std::max_element(report.per_primitive.begin(), report.per_primitive.end());
    }
    if (format == "text") std::cout << cloud.size() << " gaussians\n";
    emit(j, format);
    return 0;
  }

  if (vox->parsed()) {
    const auto spec = vox_grid.spec();
    auto cfg = vox_flags.config();
    cfg.threads = threads;
    const auto scene = io::read_scene_file(scene_path);
    if (scene.primitives.empty() && scene.classes.size() == 0)
      throw std::invalid_argument("scene file has no header; cannot determine classes");
    const auto t0 = Clock::now();
    const auto r = voxelize(scene, spec, cfg);
    const double elapsed = seconds_since(t0);
    io::write_grid_file(out_path, r.grid, &r.dense.v_o);
    std::size_t occupied = 0;
    for (std::size_t i = 0; i < r.grid.labels.size(); ++i) occupied += r.grid.occupied(i);
    json j{{"dims", spec.dims},           {"resolution", spec.resolution}, {"tau", cfg.tau},
           {"occupied", occupied},        {"seconds", elapsed},            {"backend", sample_weights_backend()}};
    if (oracle) {
      const auto t1 = Clock::now();
      const auto brute = voxelize_bruteforce(scene, spec, cfg);
      j["oracle_seconds"] = seconds_since(t1);
      double max_dv = 0.0;
      std::size_t mismatches = 0;
      for (std::size_t i = 0; i < r.dense.v_o.size(); ++i) {
        max_dv = std::max(max_dv, std::abs(r.dense.v_o[i] - brute.dense.v_o[i]));
        mismatches += r.grid.labels[i] != brute.grid.labels[i];
      }
      j["oracle_max_abs_dvo"] = max_dv;
      j["oracle_label_mismatches"] = mismatches;
    }
    emit(j, format);
    return 0;
  }

  if (ren->parsed()) {
    const auto cam = io::read_camera_file(camera_path);
    std::vector<io::Rgb> palette;
    if (!palette_path.empty()) {
      auto is = io::open_input(palette_path);
      palette = io::read_palette(is);
    }
    RenderOptions opt;
    opt.alpha_threshold = alpha_threshold;
    const bool is_cloud = io::is_cloud_file(scene_path);
    if (is_cloud && mode != "splat") throw std::invalid_argument("ray marching needs a scene file, not a cloud");
    std::optional<Scene> scene;
    GaussianCloud cloud;
    if (is_cloud) {
      cloud = io::read_cloud_file(scene_path);
    } else {
      scene = io::read_scene_file(scene_path);
      if (mode != "raymarch") cloud = gaussianize(*scene, ren_gau.config());
    }
    json j;
    std::optional<RenderOutput> splat, march;
    if (mode != "raymarch") {
      const auto t0 = Clock::now();
      splat = splat_render(cloud, cam, opt);
      j["splat_seconds"] = seconds_since(t0);
      write_render_outputs(out_path + "_splat", *splat, palette);
    }
    if (mode != "splat") {
      RaymarchOptions ropt;
      ropt.alpha_threshold = alpha_threshold;
      const auto t0 = Clock::now();
      march = raymarch_render(*scene, cam, step, ropt);
      j["raymarch_seconds"] = seconds_since(t0);
      write_render_outputs(out_path + "_raymarch", *march, palette);
    }
    if (splat && march) j["diff"] = render_diff(*splat, *march, alpha_threshold);
    emit(j, format);
    return 0;
  }

  if (met->parsed()) {
    const auto pred = io::read_grid_file(pred_path);
    const auto gt = io::read_grid_file(gt_path);
    io::RunConfig rc;
    rc.ray_thresholds = thresholds;
    rc.ray_azimuths = azimuths;
    rc.grid = gt.grid.spec;
    rc.validate();
    const auto report =
        evaluate(pred.grid, gt.grid, default_rays(gt.grid.spec, azimuths, rc.ray_elevations_deg), thresholds);
    if (format == "json")
      std::cout << io::report_json(report, gt.grid.classes).dump(2) << '\n';
    else
      std::cout << io::report_text(report, gt.grid.classes);
    return 0;
  }

  if (ben->parsed()) {
    const auto spec = ben_grid.spec();
    const auto vcfg = ben_vox.config();
    const auto gcfg = ben_gau.config();
    const Scene scene = scene_path.empty() ? gen_scene(seed, count, spec) : io::read_scene_file(scene_path);
    std::vector<double> tg, tv, tr;
    std::optional<Camera> cam;
    if (!camera_path.empty()) cam = io::read_camera_file(camera_path);
    std::vector<std::uint8_t> first_labels;
    bool deterministic = true;
    for (int rep = 0; rep < repetitions; ++rep) {
      auto t0 = Clock::now();
      const auto cloud = gaussianize(scene, gcfg);
      tg.push_back(seconds_since(t0));
      t0 = Clock::now();
      const auto r = voxelize(scene, spec, vcfg);
      tv.push_back(seconds_since(t0));
      if (rep == 0)
        first_labels = r.grid.labels;
      else
        deterministic = deterministic && first_labels == r.grid.labels;
      if (cam) {
        t0 = Clock::now();
        splat_render(cloud, *cam);
        tr.push_back(seconds_since(t0));
      }
    }
    json j{{"primitives", scene.primitives.size()},
           {"grid_dims", spec.dims},
           {"repetitions", repetitions},
           {"threads", vcfg.threads ? vcfg.threads : thread_count()},
           {"backend", sample_weights_backend()},
           {"gaussianize", timing_stats(tg)},
           {"voxelize", timing_stats(tv)},
           {"voxelize_deterministic", deterministic}};
    if (cam) j["splat_render"] = timing_stats(tr);
    if (oracle) {
      const auto t0 = Clock::now();
      voxelize_bruteforce(scene, spec, vcfg);
      const double brute = seconds_since(t0);
      j["voxelize_bruteforce_s"] = brute;
      j["oracle_speedup"] = brute / percentile(tv, 0.5);
    }
    if (!out_path.empty()) io::write_atomic(out_path, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    emit(j, format);
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
