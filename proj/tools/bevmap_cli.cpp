// bevmap: command-line front-end for the BEV mapping pipeline.
//
// Exit codes: 0 success, 2 validation error, 3 numerical failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "bevmap/align.hpp"
#include "bevmap/error.hpp"
#include "bevmap/io.hpp"
#include "bevmap/masking.hpp"
#include "bevmap/metrics.hpp"
#include "bevmap/osm.hpp"
#include "bevmap/pipeline.hpp"
#include "bevmap/refine.hpp"
#include "bevmap/serialize.hpp"
#include "bevmap/simulator.hpp"

namespace fs = std::filesystem;
using namespace bevmap;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

struct GlobalOptions {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir = ".";
};

PipelineConfig load_config(const GlobalOptions& g) {
  PipelineConfig cfg = g.config.empty() ? PipelineConfig{} : load_pipeline_config(g.config);
  if (g.seed_set) cfg.seed = g.seed;
  return cfg;
}

fs::path output_dir(const GlobalOptions& g) {
  fs::path dir(g.out_dir);
  fs::create_directories(dir);
  return dir;
}

// prob-bin or label-pgm, picked by extension.
BevMap load_bev(const fs::path& path, int channels) {
  if (path.extension() == ".pgm") {
    const auto labels = load_label_pgm(path);
    return BevMap(one_hot(labels, channels));
  }
  return BevMap(load_prob_bin(path));
}

CameraIntrinsics intrinsics_or(const std::string& path, const PipelineConfig& cfg) {
  return path.empty() ? cfg.intrinsics : intrinsics_from_json(read_json_file(path));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Occlusion-aware bird's-eye-view semantic mapping toolkit"};
  app.require_subcommand(1);

  GlobalOptions g;
  app.add_option("--config", g.config, "Pipeline config JSON");
  app.add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t s) { g.seed = s, g.seed_set = true; }, "Random seed");
  app.add_option("--out-dir", g.out_dir, "Output directory");

  // mask
  auto* mask_cmd = app.add_subcommand("mask", "Foreground mask (and optional random boxes) of a segmentation");
  std::string mask_seg, mask_out, box_strategy;
  mask_cmd->add_option("--seg", mask_seg, "Perspective segmentation (prob-bin)")->required();
  mask_cmd->add_option("--out", mask_out, "Output mask (label-pgm)")->required();
  mask_cmd->add_option("--boxes", box_strategy, "Random box strategy, e.g. persp-road-100-5");

  // project
  auto* project_cmd = app.add_subcommand("project", "Run mask -> project -> heuristic refinement");
  std::string proj_seg, proj_depth, proj_intr;
  project_cmd->add_option("--seg", proj_seg, "Perspective segmentation (prob-bin)")->required();
  project_cmd->add_option("--depth", proj_depth, "Depth map (depth-bin)")->required();
  project_cmd->add_option("--intrinsics", proj_intr, "Camera intrinsics JSON");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Sample road layouts from the simulator");
  int sim_count = 1;
  sim_cmd->add_option("--count", sim_count, "Number of maps")->check(CLI::PositiveNumber);

  // osm-raster
  auto* osm_cmd = app.add_subcommand("osm-raster", "Rasterize OSM XML around a pose");
  std::string osm_path, osm_out = "osm.pgm";
  double lat = 0.0, lon = 0.0, heading = 0.0;
  osm_cmd->add_option("--osm", osm_path, "OSM XML file")->required();
  osm_cmd->add_option("--lat", lat)->required();
  osm_cmd->add_option("--lon", lon)->required();
  osm_cmd->add_option("--heading-deg", heading)->required();
  osm_cmd->add_option("--out", osm_out, "Output file name inside --out-dir");

  // align
  auto* align_cmd = app.add_subcommand("align", "Align an OSM map to B_init");
  std::string align_init, align_osm_path;
  std::optional<double> lambda2, lambda3;
  std::optional<int> iters;
  align_cmd->add_option("--init", align_init, "B_init (prob-bin or label-pgm)")->required();
  align_cmd->add_option("--osm", align_osm_path, "B_osm (prob-bin or label-pgm)")->required();
  align_cmd->add_option("--lambda2", lambda2);
  align_cmd->add_option("--lambda3", lambda3);
  align_cmd->add_option("--iters", iters);

  // refine-heuristic
  auto* heur_cmd = app.add_subcommand("refine-heuristic", "Fill unobserved cells toward the camera");
  std::string heur_in, heur_out;
  heur_cmd->add_option("--in", heur_in, "BEV map (prob-bin)")->required();
  heur_cmd->add_option("--out", heur_out, "Refined map (prob-bin)")->required();

  // train-refiner
  auto* train_cmd = app.add_subcommand("train-refiner", "Train the toy refiner on synthetic data");
  double train_lambda = 1.0;
  int train_steps = 200, train_dataset = 16, train_batch = 16;
  std::optional<double> train_lr;
  train_cmd->add_option("--lambda", train_lambda)->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--steps", train_steps)->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--dataset-size", train_dataset)->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch", train_batch)->check(CLI::PositiveNumber);
  train_cmd->add_option("--gen-lr", train_lr);

  // eval-iou
  auto* iou_cmd = app.add_subcommand("eval-iou", "Mean IoU of two label maps");
  std::string iou_pred, iou_gt;
  std::vector<int> iou_classes{0, 1};
  std::optional<int> iou_ignore;
  iou_cmd->add_option("--pred", iou_pred)->required();
  iou_cmd->add_option("--gt", iou_gt)->required();
  iou_cmd->add_option("--classes", iou_classes);
  iou_cmd->add_option("--ignore", iou_ignore);

  // eval-depth
  auto* depth_cmd = app.add_subcommand("eval-depth", "Depth error metrics");
  std::string depth_pred, depth_gt;
  depth_cmd->add_option("--pred", depth_pred)->required();
  depth_cmd->add_option("--gt", depth_gt)->required();

  // demo
  app.add_subcommand("demo", "Synthetic end-to-end run with fabricated inputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    const auto cfg = load_config(g);
    const auto& catalog = cfg.catalog;

    if (*mask_cmd) {
      const auto seg = load_prob_bin(mask_seg);
      const auto m = foreground_mask(seg, catalog);
      LabelGrid out(m.height, m.width);
      out.label = m.m;
      save_label_pgm(out, mask_out);
      if (!box_strategy.empty()) {
        const auto boxes = sample_random_boxes(parse_box_strategy(box_strategy), seg, catalog, cfg.seed);
        write_json_file(to_json(boxes), output_dir(g) / "boxes.json");
      }
    } else if (*project_cmd) {
      const auto out = run_pipeline_files(proj_seg, proj_depth, intrinsics_or(proj_intr, cfg), cfg, output_dir(g));
      std::cout << "observed fraction: " << out.report.observed_before << " -> " << out.report.observed_after
                << "\n";
    } else if (*sim_cmd) {
      const auto dir = output_dir(g);
      for (int i = 0; i < sim_count; ++i) {
        const auto s = sample_layout(cfg.prior, cfg.bev, cfg.seed + static_cast<std::uint64_t>(i));
        const auto name = "sim_" + std::to_string(i);
        save_label_pgm(argmax_labels(s.map.grid, catalog.unknown_id()), dir / (name + ".pgm"));
        write_json_file(to_json(s.params), dir / (name + ".json"));
      }
    } else if (*osm_cmd) {
      std::ifstream in(osm_path);
      if (!in) throw ValidationError("load", "cannot open '" + osm_path + "'");
      const std::string xml((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      const auto graph = parse_osm(xml);
      const auto map = rasterize_osm(graph, GeoPose{lat, lon, heading}, cfg.bev);
      const auto path = output_dir(g) / osm_out;
      if (path.extension() == ".pgm") {
        save_label_pgm(argmax_labels(map.grid, catalog.unknown_id()), path);
      } else {
        save_prob_bin(map.grid, path);
      }
    } else if (*align_cmd) {
      auto acfg = cfg.align;
      if (lambda2) acfg.lambda2 = *lambda2;
      if (lambda3) acfg.lambda3 = *lambda3;
      if (iters) acfg.max_iters = *iters;
      acfg.seed = cfg.seed;
      const auto b_init = load_bev(align_init, catalog.num_background());
      const auto b_osm = load_bev(align_osm_path, b_init.grid.channels);
      const auto result = align_osm(b_init, b_osm, acfg);
      const auto dir = output_dir(g);
      write_json_file(to_json(result.theta), dir / "theta.json");
      std::ofstream trace(dir / "trace.csv");
      trace << "iteration,objective\n";
      for (std::size_t i = 0; i < result.trace.size(); ++i) trace << i << "," << result.trace[i] << "\n";
      save_prob_bin(compose_and_warp(b_osm, result.theta).grid, dir / "osm_aligned.bin");
    } else if (*heur_cmd) {
      const auto refined = heuristic_refine(BevMap(load_prob_bin(heur_in)), catalog.unknown_id());
      save_prob_bin(refined.grid, heur_out);
    } else if (*train_cmd) {
      const auto toy = toy_bev_config();
      const auto dataset = make_toy_dataset(train_dataset, toy, cfg.prior, cfg.seed);
      TrainConfig tcfg;
      tcfg.weights = cfg.weights;
      tcfg.weights.lambda = train_lambda;
      if (train_lr) tcfg.weights.gen_lr = *train_lr;
      tcfg.steps = train_steps;
      tcfg.batch_size = train_batch;
      tcfg.seed = cfg.seed;
      const auto prior = cfg.prior;
      const auto result =
          train_refiner(dataset, [&](std::uint64_t s) { return sample_layout(prior, toy, s).map; }, tcfg);
      const auto dir = output_dir(g);
      write_json_file(to_json(result.refiner), dir / "refiner.json");
      write_json_file(to_json(static_cast<const DenseStack&>(result.critic)), dir / "critic.json");
      std::ofstream trace(dir / "train_trace.csv");
      trace << "step,critic_loss,gen_loss,masked_mse\n";
      for (const auto& row : result.trace) {
        trace << row.step << "," << row.critic_loss << "," << row.gen_loss << "," << row.masked_mse << "\n";
      }
      std::cout << "final masked mse: " << dataset_masked_mse(dataset, result.refiner) << "\n";
    } else if (*iou_cmd) {
      const auto report = mean_iou(load_label_pgm(iou_pred), load_label_pgm(iou_gt), iou_classes, iou_ignore);
      std::cout << std::setw(2) << to_json(report) << "\n";
    } else if (*depth_cmd) {
      const auto report = depth_metrics(load_depth_bin(depth_pred), load_depth_bin(depth_gt));
      std::cout << std::setw(2) << to_json(report) << "\n";
    } else {
      const auto report = demo_synthetic(cfg.seed, cfg, output_dir(g));
      std::cout << "mean IoU  B_init: " << report.iou_init << "  refined: " << report.iou_refined << "\n";
    }
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return 0;
}
