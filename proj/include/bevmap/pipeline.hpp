#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "bevmap/align.hpp"
#include "bevmap/core.hpp"
#include "bevmap/metrics.hpp"
#include "bevmap/projection.hpp"
#include "bevmap/refine.hpp"
#include "bevmap/simulator.hpp"

namespace bevmap {

struct PipelineConfig {
  ClassCatalog catalog = ClassCatalog::standard();
  BevConfig bev;
  AlignConfig align;
  LossWeights weights;
  LayoutPrior prior;
  CameraIntrinsics intrinsics{300.0, 300.0, 320.0, 80.0};
  std::uint64_t seed = 0;
};

/// Reads a config JSON with optional keys "catalog" (inline array or path),
/// "bev", "align", "loss_weights", "simulator_prior", "intrinsics", "seed".
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Background channels of `seg` (C^bg of them); foreground-masked cells and
/// cells without background mass become zero (unobserved).
SemanticGrid background_channels(const SemanticGrid& seg, const Mask& foreground, const ClassCatalog& catalog);

struct PipelineReport {
  std::size_t foreground_pixels = 0;
  std::size_t projected_pixels = 0;
  std::size_t skipped_pixels = 0;
  double observed_before = 0.0;
  double observed_after = 0.0;
};

struct PipelineOutput {
  Mask foreground;
  BevMap b_init;
  BevMap refined;
  PipelineReport report;
};

/// mask -> background channels -> project -> refine (heuristic unless a
/// trained refiner is given).
PipelineOutput run_pipeline(const SemanticGrid& seg, const DepthMap& depth, const CameraIntrinsics& K,
                            const PipelineConfig& cfg, const RefinerParams* refiner = nullptr);

/// File front-end: loads inputs, runs the pipeline and writes foreground.pgm,
/// b_init.bin, refined.bin, refined.pgm and report.json into out_dir. Load
/// errors carry the offending stage.
PipelineOutput run_pipeline_files(const std::filesystem::path& seg_path, const std::filesystem::path& depth_path,
                                  const CameraIntrinsics& K, const PipelineConfig& cfg,
                                  const std::filesystem::path& out_dir);

/// Perspective camera used to fabricate scenes: horizontal optical axis at
/// `height` meters above a flat ground plane.
struct SceneCamera {
  int image_height = 192;
  int image_width = 640;
  CameraIntrinsics intrinsics{300.0, 300.0, 320.0, 80.0};
  double height = 1.65;
};

struct SyntheticScene {
  LayoutParams layout;
  BevMap truth;               // fully observed layout map
  SemanticGrid segmentation;  // perspective, one-hot over the catalog
  DepthMap depth;
  std::vector<ObjectSpec> occluders;
};

/// Samples a layout, places parked/driving cars on it and ray-casts a
/// consistent perspective segmentation + depth pair.
SyntheticScene synthesize_scene(std::uint64_t seed, const PipelineConfig& cfg, const SceneCamera& camera = {},
                                int occluder_count = 3);

struct DemoReport {
  std::uint64_t seed = 0;
  double observed_init = 0.0;
  double observed_refined = 0.0;
  double iou_init = 0.0;     // argmax(B_init) with unknown fill vs truth
  double iou_refined = 0.0;  // heuristic-refined vs truth
  std::vector<int> eval_classes;
};

/// End-to-end synthetic run. When out_dir is given, writes the fixtures,
/// intermediate maps and report.json there.
DemoReport demo_synthetic(std::uint64_t seed, const PipelineConfig& cfg,
                          const std::optional<std::filesystem::path>& out_dir = std::nullopt);

/// Toy refinement data at <= 16x8: simulator layouts with far rows and a
/// random occluder shadow removed from the observed mask.
std::vector<TrainSample> make_toy_dataset(std::size_t count, const BevConfig& toy, const LayoutPrior& prior,
                                          std::uint64_t seed);

/// 16x8 cells over 32 x 16 m.
BevConfig toy_bev_config();

}  // namespace bevmap
