#include "bevmap/pipeline.hpp"

#include <cmath>
#include <random>

#include "bevmap/error.hpp"
#include "bevmap/io.hpp"
#include "bevmap/masking.hpp"
#include "bevmap/serialize.hpp"

namespace bevmap {
namespace {

template <class F>
auto with_stage(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const NumericalError& e) {
    throw NumericalError(stage, e.what());
  } catch (const Error& e) {
    throw ValidationError(stage, e.what());
  }
}

}  // namespace

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  const auto j = read_json_file(path);
  PipelineConfig cfg;
  if (!j.is_object()) throw ValidationError("config", "config root must be an object");
  if (j.contains("catalog")) {
    const auto& c = j.at("catalog");
    cfg.catalog = c.is_string() ? catalog_from_json(read_json_file(path.parent_path() / c.get<std::string>()))
                                : catalog_from_json(c);
  }
  if (j.contains("bev")) cfg.bev = bev_config_from_json(j.at("bev"));
  if (j.contains("align")) cfg.align = align_config_from_json(j.at("align"));
  if (j.contains("loss_weights")) cfg.weights = loss_weights_from_json(j.at("loss_weights"));
  if (j.contains("simulator_prior")) cfg.prior = layout_prior_from_json(j.at("simulator_prior"));
  if (j.contains("intrinsics")) cfg.intrinsics = intrinsics_from_json(j.at("intrinsics"));
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

SemanticGrid background_channels(const SemanticGrid& seg, const Mask& foreground, const ClassCatalog& catalog) {
  if (seg.channels != catalog.size()) throw ValidationError("mask", "segmentation does not match the catalog");
  const int nbg = catalog.num_background();
  SemanticGrid out(seg.height, seg.width, nbg);
  for (int r = 0; r < seg.height; ++r) {
    for (int c = 0; c < seg.width; ++c) {
      if (foreground.at(r, c)) continue;
      const auto src = seg.cell(r, c);
      auto dst = out.cell(r, c);
      double mass = 0.0;
      for (int k = 0; k < nbg; ++k) mass += src[k];
      if (!(mass > 0.0)) continue;
      for (int k = 0; k < nbg; ++k) dst[k] = src[k] / mass;
    }
  }
  return out;
}

PipelineOutput run_pipeline(const SemanticGrid& seg, const DepthMap& depth, const CameraIntrinsics& K,
                            const PipelineConfig& cfg, const RefinerParams* refiner) {
  PipelineOutput out;
  out.foreground = with_stage("mask", [&] { return foreground_mask(seg, cfg.catalog); });
  const auto seg_bg = background_channels(seg, out.foreground, cfg.catalog);
  auto projected = with_stage("project", [&] { return project_to_bev(seg_bg, depth, K, cfg.bev); });
  out.b_init = std::move(projected.map);
  out.refined = with_stage("refine", [&] {
    return refiner ? refiner_forward(out.b_init, *refiner) : heuristic_refine(out.b_init, cfg.catalog.unknown_id());
  });
  out.report.foreground_pixels = out.foreground.count();
  out.report.projected_pixels = projected.contributed;
  out.report.skipped_pixels = projected.skipped;
  out.report.observed_before = out.b_init.observed_fraction();
  out.report.observed_after = out.refined.observed_fraction();
  return out;
}

PipelineOutput run_pipeline_files(const std::filesystem::path& seg_path, const std::filesystem::path& depth_path,
                                  const CameraIntrinsics& K, const PipelineConfig& cfg,
                                  const std::filesystem::path& out_dir) {
  const auto seg = with_stage("load-segmentation", [&] { return load_prob_bin(seg_path); });
  const auto depth = with_stage("load-depth", [&] { return load_depth_bin(depth_path); });
  auto out = run_pipeline(seg, depth, K, cfg);
  with_stage("write", [&] {
    std::filesystem::create_directories(out_dir);
    LabelGrid fg(out.foreground.height, out.foreground.width);
    fg.label = out.foreground.m;
    save_label_pgm(fg, out_dir / "foreground.pgm");
    save_prob_bin(out.b_init.grid, out_dir / "b_init.bin");
    save_prob_bin(out.refined.grid, out_dir / "refined.bin");
    save_label_pgm(argmax_labels(out.refined.grid, cfg.catalog.unknown_id()), out_dir / "refined.pgm");
    write_json_file({{"foreground_pixels", out.report.foreground_pixels},
                     {"projected_pixels", out.report.projected_pixels},
                     {"skipped_pixels", out.report.skipped_pixels},
                     {"observed_fraction_before", out.report.observed_before},
                     {"observed_fraction_after", out.report.observed_after}},
                    out_dir / "report.json");
    return 0;
  });
  return out;
}

SyntheticScene synthesize_scene(std::uint64_t seed, const PipelineConfig& cfg, const SceneCamera& camera,
                                int occluder_count) {
  SyntheticScene scene;
  auto sampled = sample_layout(cfg.prior, cfg.bev, seed);
  scene.layout = sampled.params;
  scene.truth = std::move(sampled.map);

  const int car = cfg.catalog.find("car").value_or(cfg.catalog.unknown_id() + 1);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> zdist(8.0, 0.6 * cfg.bev.extent_z);
  std::uniform_real_distribution<double> xdist(-0.4 * cfg.bev.extent_x, 0.4 * cfg.bev.extent_x);
  for (int n = 0, attempts = 0; n < occluder_count && attempts < 1000; ++attempts) {
    const double x = xdist(rng);
    const double z = zdist(rng);
    if (layout_label_at(scene.layout, cfg.bev, x, z) != kRoadLabel) continue;
    scene.occluders.push_back({x, z, 4.0, 1.8, car});
    ++n;
  }

  const auto& K = camera.intrinsics;
  const int C = cfg.catalog.size();
  const int background = kBackgroundLabel;
  scene.segmentation = SemanticGrid(camera.image_height, camera.image_width, C);
  scene.depth = DepthMap(camera.image_height, camera.image_width);
  constexpr double kCarHeight = 1.5;
  for (int v = 0; v < camera.image_height; ++v) {
    for (int u = 0; u < camera.image_width; ++u) {
      int label = background;
      double depth = 0.0;
      if (v + 0.5 > K.cy) {
        depth = K.fy * camera.height / (v + 0.5 - K.cy);
        const double x = (u + 0.5 - K.cx) * depth / K.fx;
        label = layout_label_at(scene.layout, cfg.bev, x, depth);
      }
      // Nearest car whose front face covers this pixel.
      for (const auto& obj : scene.occluders) {
        const double z_front = obj.z - 0.5 * obj.length;
        const double u0 = K.cx + K.fx * (obj.x - 0.5 * obj.width) / z_front;
        const double u1 = K.cx + K.fx * (obj.x + 0.5 * obj.width) / z_front;
        const double v0 = K.cy + K.fy * (camera.height - kCarHeight) / z_front;
        const double v1 = K.cy + K.fy * camera.height / z_front;
        if (u + 0.5 < u0 || u + 0.5 > u1 || v + 0.5 < v0 || v + 0.5 > v1) continue;
        if (depth == 0.0 || z_front < depth) {
          depth = z_front;
          label = obj.class_id;
        }
      }
      scene.segmentation.at(v, u, label) = 1.0;
      if (depth > 0.0) scene.depth.set(v, u, depth);
    }
  }
  return scene;
}

DemoReport demo_synthetic(std::uint64_t seed, const PipelineConfig& cfg,
                          const std::optional<std::filesystem::path>& out_dir) {
  const SceneCamera camera{192, 640, cfg.intrinsics, 1.65};
  const auto scene = synthesize_scene(seed, cfg, camera);
  const auto out = run_pipeline(scene.segmentation, scene.depth, camera.intrinsics, cfg);

  const int unknown = cfg.catalog.unknown_id();
  const auto truth = argmax_labels(scene.truth.grid, unknown);
  const auto init_labels = argmax_labels(out.b_init.grid, unknown);
  const auto refined_labels = argmax_labels(out.refined.grid, unknown);

  DemoReport report;
  report.seed = seed;
  report.eval_classes = {kRoadLabel, kSidewalkLabel};
  report.observed_init = out.report.observed_before;
  report.observed_refined = out.report.observed_after;
  report.iou_init = mean_iou(init_labels, truth, report.eval_classes).mean;
  report.iou_refined = mean_iou(refined_labels, truth, report.eval_classes).mean;

  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    save_prob_bin(scene.segmentation, *out_dir / "segmentation.bin");
    save_depth_bin(scene.depth, *out_dir / "depth.bin");
    save_label_pgm(truth, *out_dir / "truth.pgm");
    save_prob_bin(out.b_init.grid, *out_dir / "b_init.bin");
    save_label_pgm(init_labels, *out_dir / "b_init.pgm");
    save_prob_bin(out.refined.grid, *out_dir / "refined.bin");
    save_label_pgm(refined_labels, *out_dir / "refined.pgm");
    write_json_file(to_json(camera.intrinsics), *out_dir / "intrinsics.json");
    write_json_file(to_json(scene.layout), *out_dir / "layout.json");
    write_json_file({{"seed", seed},
                     {"eval_classes", report.eval_classes},
                     {"observed_fraction_init", report.observed_init},
                     {"observed_fraction_refined", report.observed_refined},
                     {"mean_iou_init", report.iou_init},
                     {"mean_iou_refined", report.iou_refined}},
                    *out_dir / "report.json");
  }
  return report;
}

BevConfig toy_bev_config() { return BevConfig{16, 8, 32.0, 16.0}; }

std::vector<TrainSample> make_toy_dataset(std::size_t count, const BevConfig& toy, const LayoutPrior& prior,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<TrainSample> data;
  data.reserve(count);
  while (data.size() < count) {
    auto map = sample_layout(prior, toy, rng()).map;
    // Far rows thin out, and one occluder casts a shadow away from the camera.
    std::uniform_int_distribution<int> far_rows(2, toy.rows / 3);
    std::uniform_int_distribution<int> col(0, toy.cols - 2);
    std::uniform_int_distribution<int> row(toy.rows / 3, toy.rows - 3);
    const int cut = far_rows(rng);
    const int sc = col(rng);
    const int sr = row(rng);
    for (int r = 0; r < toy.rows; ++r) {
      for (int c = 0; c < toy.cols; ++c) {
        const bool hidden = r < cut || (r <= sr && c >= sc && c <= sc + 1);
        if (hidden) std::ranges::fill(map.grid.cell(r, c), 0.0);
      }
    }
    map.observed = observed_cells(map.grid);
    if (map.observed.count() == 0) continue;
    data.push_back({std::move(map), std::nullopt});
  }
  return data;
}

}  // namespace bevmap
