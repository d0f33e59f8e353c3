// SPDX-License-Identifier: Apache-2.0
#include "gof/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

#include <tbb/global_control.h>
#include <tbb/info.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "gof/errors.hpp"
#include "gof/image_io.hpp"
#include "gof/opacity_field.hpp"
#include "gof/optimizer.hpp"
#include "gof/oracles/suites.hpp"
#include "gof/renderer.hpp"
#include "gof/scene_io.hpp"
#include "gof/tetra_mesher.hpp"

namespace gof::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
  SceneConfig scene;
  TrainConfig train;
  int iterations = 300;
  uint64_t seed = 0;
  int threads = 0;
  std::vector<int> views;
  bool print_config = false;
};

json config_json(const Options& o) {
  const SceneConfig& s = o.scene;
  const TrainConfig& t = o.train;
  return json{
      {"level", s.level},
      {"binary_steps", s.binary_steps},
      {"near_clip", s.near_clip},
      {"prune_alpha", s.prune_alpha},
      {"contribution_cutoff", s.contribution_cutoff},
      {"transmittance_floor", s.transmittance_floor},
      {"box_sigma", s.box_sigma},
      {"alpha_d", s.alpha_distortion},
      {"beta_n", s.beta_normal},
      {"sh_degree", s.sh_degree},
      {"iters", o.iterations},
      {"seed", o.seed},
      {"threads", o.threads},
      {"lambda_dssim", t.lambda_dssim},
      {"detach_depth_normal", t.detach_depth_normal},
      {"densify_from", t.densify_from},
      {"densify_until", t.densify_until},
      {"densify_interval", t.densify_interval},
      {"densify_threshold", t.densify_threshold},
      {"position_lr_init", t.position_lr_init},
      {"position_lr_final", t.position_lr_final},
      {"opacity_lr", t.opacity_lr},
      {"scale_lr", t.scale_lr},
      {"rotation_lr", t.rotation_lr},
      {"sh_dc_lr", t.sh_dc_lr},
  };
}

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw InputError(std::string(what) + " '" + path + "' does not exist");
}

std::vector<CameraView> select_views(std::vector<CameraView> cameras, const std::vector<int>& picks) {
  if (picks.empty()) return cameras;
  std::vector<CameraView> out;
  for (int i : picks) {
    if (i < 0 || i >= static_cast<int>(cameras.size())) {
      throw InputError("--views index " + std::to_string(i) + " is out of range (" +
                       std::to_string(cameras.size()) + " cameras)");
    }
    out.push_back(cameras[i]);
  }
  return out;
}

int cmd_render(const Options& o, const std::string& scene_path, const std::string& cam_path,
               const std::string& outdir, std::ostream& out) {
  require_file(scene_path, "scene");
  require_file(cam_path, "camera file");
  const PreparedScene scene(load_gaussians(scene_path));
  const auto views = select_views(load_cameras(cam_path), o.views);
  fs::create_directories(outdir);
  json summary = json::array();
  for (const CameraView& v : views) {
    const RenderBuffers buf = render_view(scene, v, o.scene);
    const std::string tag = std::to_string(v.id);
    const std::string color = "color_" + tag + ".png";
    const std::string depth = "depth_" + tag + ".png";
    const std::string normal = "normal_" + tag + ".png";
    write_image(buf.color, (fs::path(outdir) / color).string());
    write_image(depth_visualization(buf.depth, buf.accumulation), (fs::path(outdir) / depth).string());
    write_image(normal_visualization(buf.normal), (fs::path(outdir) / normal).string());
    double acc = 0.0;
    for (double a : buf.accumulation.data) acc += a;
    acc /= static_cast<double>(std::max<size_t>(buf.accumulation.pixel_count(), 1));
    summary.push_back({{"id", v.id}, {"mean_accumulation", acc}, {"color", color}, {"depth", depth},
                       {"normal", normal}});
    out << "view " << v.id << " mean_accumulation " << std::setprecision(6) << acc << '\n';
  }
  std::ofstream os(fs::path(outdir) / "summary.json");
  os << json{{"gaussians", scene.size()}, {"views", summary}}.dump(2) << '\n';
  if (!os) throw InputError("failed writing summary to '" + outdir + "'");
  return kExitOk;
}

int cmd_extract(const Options& o, const std::string& scene_path, const std::string& cam_path,
                const std::string& mesh_path, std::ostream& out) {
  require_file(scene_path, "scene");
  require_file(cam_path, "camera file");
  const MeshFormat format = mesh_format_from_path(mesh_path);
  const auto gaussians = load_gaussians(scene_path);
  const auto views = select_views(load_cameras(cam_path), o.views);
  const ExtractionResult res = extract_mesh(gaussians, views, o.scene);
  save_mesh(res.mesh, mesh_path, format);
  const ExtractionStats& s = res.stats;
  out << "gaussians " << s.gaussians_used << '\n'
      << "grid_vertices " << s.grid_vertices << '\n'
      << "tets_total " << s.tets_total << '\n'
      << "tets_kept " << s.tets_kept << '\n'
      << "tets_dropped " << s.tets_dropped << '\n'
      << "crossings " << s.crossings << '\n'
      << "unvisited_crossings " << s.unvisited_crossings << '\n'
      << "refine_rounds " << s.refine_rounds << '\n'
      << "mesh_vertices " << res.mesh.vertices.size() << '\n'
      << "mesh_triangles " << res.mesh.triangles.size() << '\n';
  return kExitOk;
}

int cmd_fit(const Options& o, const std::string& cam_path, const std::string& init_path,
            const std::string& out_path, const std::string& log_path, std::ostream& out) {
  require_file(cam_path, "camera file");
  require_file(init_path, "initial scene");
  const auto views = select_views(load_cameras(cam_path), o.views);
  for (const CameraView& v : views) {
    if (!v.image) throw InputError("camera " + std::to_string(v.id) + " has no reference image");
  }
  auto gaussians = load_gaussians(init_path);
  std::unique_ptr<std::ofstream> file;
  std::ostream* log = &out;
  if (!log_path.empty()) {
    file = std::make_unique<std::ofstream>(log_path);
    if (!*file) throw InputError("cannot open log '" + log_path + "'");
    log = file.get();
  }
  *log << "# iter L_c L_d L_n gaussians\n";
  TrainConfig cfg = o.train;
  cfg.scene = o.scene;
  cfg.seed = o.seed;
  const auto trained = fit(std::move(gaussians), views, o.iterations, cfg, [&](const IterationLog& it) {
    *log << it.iteration << ' ' << std::setprecision(9) << it.loss.L_c << ' ' << it.loss.L_d << ' '
         << it.loss.L_n << ' ' << it.gaussians << '\n';
  });
  save_gaussians(trained, out_path);
  out << "wrote " << trained.size() << " gaussians to " << out_path << '\n';
  return kExitOk;
}

int cmd_field_dump(const Options& o, const std::string& scene_path, const std::string& cam_path,
                   const std::string& out_path, std::ostream& out) {
  require_file(scene_path, "scene");
  require_file(cam_path, "camera file");
  const auto gaussians = load_gaussians(scene_path);
  const auto views = select_views(load_cameras(cam_path), o.views);
  const auto used = prune_by_opacity(gaussians, o.scene.prune_alpha);
  const GridVertices grid = generate_vertices(used, o.scene);
  const FieldResult field = field_opacity(PreparedScene(gaussians), views, grid.points, o.scene);
  save_field_ply(out_path, grid.points, field);
  out << "points " << grid.points.size() << '\n';
  return kExitOk;
}

int cmd_check(bool quick, const std::string& fault_name, std::ostream& out) {
  if (fault_name == "flip-tstar") {
    fault::inject(fault::Fault::kFlipTStarSign);
  } else if (!fault_name.empty()) {
    throw InputError("unknown fault '" + fault_name + "' (known: flip-tstar)");
  }
  const auto results = oracle::run_self_check(quick, &out);
  fault::inject(fault::Fault::kNone);
  size_t failed = 0;
  double total = 0.0;
  for (const auto& r : results) {
    total += r.seconds;
    if (!r.passed) {
      ++failed;
      out << "failed suite: " << r.name << '\n';
    }
  }
  out << results.size() - failed << "/" << results.size() << " suites passed in " << std::fixed
      << std::setprecision(2) << total << " s\n";
  return failed ? kExitCheckFailed : kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gaussian opacity fields: render, extract meshes, fit scenes"};
  app.fallthrough();
  app.require_subcommand(0, 1);
  Options o;
  o.train.scene = o.scene;

  app.add_option("--level", o.scene.level, "Opacity level set to extract")->capture_default_str();
  app.add_option("--binary-steps", o.scene.binary_steps, "Bisection steps per crossing edge")
      ->capture_default_str();
  app.add_option("--box-sigma", o.scene.box_sigma, "Grid box half-extent in standard deviations")
      ->capture_default_str();
  app.add_option("--prune-alpha", o.scene.prune_alpha, "Opacity below which Gaussians are pruned")
      ->capture_default_str();
  app.add_option("--near", o.scene.near_clip, "Near clipping distance")->capture_default_str();
  app.add_option("--alpha-d", o.scene.alpha_distortion, "Depth distortion weight")->capture_default_str();
  app.add_option("--beta-n", o.scene.beta_normal, "Normal consistency weight")->capture_default_str();
  app.add_option("--iters", o.iterations, "Training iterations")->capture_default_str();
  app.add_option("--seed", o.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", o.threads, "Worker threads (0: all cores)")->capture_default_str();
  app.add_option("--views", o.views, "Camera indices to use (default: all)")->delimiter(',');
  app.add_flag("--detach-normal", o.train.detach_depth_normal,
               "Stop normal-consistency gradients into the depth map");
  app.add_flag("--print-config", o.print_config, "Print the effective configuration and exit");

  std::string scene_path, cam_path, out_path, init_path, log_path, fault_name;
  bool quick = false;
  auto* render = app.add_subcommand("render", "Render color, depth and normal images");
  render->add_option("scene", scene_path, "Gaussian scene (.ply)")->required();
  render->add_option("cameras", cam_path, "Camera file (.json)")->required();
  render->add_option("outdir", out_path, "Output directory")->required();

  auto* extract = app.add_subcommand("extract", "Extract a triangle mesh at the opacity level set");
  extract->add_option("scene", scene_path, "Gaussian scene (.ply)")->required();
  extract->add_option("cameras", cam_path, "Camera file (.json)")->required();
  extract->add_option("mesh", out_path, "Output mesh (.obj or .ply)")->required();

  auto* fitc = app.add_subcommand("fit", "Optimize a scene against posed images");
  fitc->add_option("cameras", cam_path, "Camera file with reference images (.json)")->required();
  fitc->add_option("init", init_path, "Initial scene (.ply)")->required();
  fitc->add_option("output", out_path, "Trained scene (.ply)")->required();
  fitc->add_option("--log", log_path, "Write the per-iteration log here instead of stdout");

  auto* check = app.add_subcommand("check", "Run the built-in oracle suite");
  check->add_flag("--quick", quick, "Reduced case counts");
  check->add_option("--inject-fault", fault_name, "Deliberately break a kernel (flip-tstar)");

  auto* dump = app.add_subcommand("field-dump", "Evaluate the opacity field at the grid vertices");
  dump->add_option("scene", scene_path, "Gaussian scene (.ply)")->required();
  dump->add_option("cameras", cam_path, "Camera file (.json)")->required();
  dump->add_option("output", out_path, "Output point cloud (.ply)")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    o.scene.validate();
    if (o.threads < 0) throw InputError("--threads must be >= 0");
    if (o.iterations < 0) throw InputError("--iters must be >= 0");
    if (o.print_config) {
      out << config_json(o).dump(2) << '\n';
      return kExitOk;
    }
    const int threads = o.threads > 0 ? o.threads : tbb::info::default_concurrency();
    tbb::global_control control(tbb::global_control::max_allowed_parallelism,
                                static_cast<size_t>(threads));

    if (render->parsed()) return cmd_render(o, scene_path, cam_path, out_path, out);
    if (extract->parsed()) return cmd_extract(o, scene_path, cam_path, out_path, out);
    if (fitc->parsed()) return cmd_fit(o, cam_path, init_path, out_path, log_path, out);
    if (check->parsed()) return cmd_check(quick, fault_name, out);
    if (dump->parsed()) return cmd_field_dump(o, scene_path, cam_path, out_path, out);
    err << app.help();
    return kExitInputError;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumericalError;
  }
}

}  // namespace gof::cli
