#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "bevmap/learning.hpp"
#include "bevmap/projection.hpp"

namespace bevmap {

/// Per column, every unobserved cell copies the nearest observed cell toward
/// the camera (larger row index); cells with nothing observed below them
/// copy the nearest observed cell above. Columns with no observed cell become
/// one-hot `unknown_channel`, and the grid gains channels up to it if needed.
/// The result is fully observed.
BevMap heuristic_refine(const BevMap& map, int unknown_channel);

inline constexpr int kMaxRefinerRows = 16;
inline constexpr int kMaxRefinerCols = 8;

/// Toy encoder-decoder: flattened map -> leaky bottleneck -> per-cell softmax.
struct RefinerParams : DenseStack {
  int rows = 0;
  int cols = 0;
  int channels = 0;

  static RefinerParams create(int rows, int cols, int channels, int hidden, double init_scale, std::uint64_t seed);
  bool operator==(const RefinerParams&) const = default;
};

/// B_final for one input; fully observed, each cell a distribution.
BevMap refiner_forward(const BevMap& b_init, const RefinerParams& refiner);

/// Gradient of sum(grad_output * refiner_forward(b_init).grid) with respect to
/// the refiner parameters (DenseStack::to_vector order).
std::vector<double> refiner_backward(const BevMap& b_init, const RefinerParams& refiner, const Raster& grad_output);

enum class ReconstructionTarget { kInit, kOsm, kInitAndOsm };

struct TrainSample {
  BevMap b_init;
  std::optional<BevMap> b_osm;  // aligned OSM map, required for kOsm targets
};

struct GeneratorLoss {
  double adversarial = 0.0;     // -mean f(B_final)
  double reconstruction = 0.0;  // masked MSE to B_init (and/or L^OSM)
  double total = 0.0;
  std::vector<double> grad_adversarial;
  std::vector<double> grad_reconstruction;
  std::vector<double> grad_total;
};

/// Combined generator objective on a batch, with parameter gradients.
GeneratorLoss generator_loss(const std::vector<const TrainSample*>& batch, const RefinerParams& refiner,
                             const CriticParams& critic, double lambda, ReconstructionTarget target);

struct TrainConfig {
  LossWeights weights;
  int steps = 200;
  int critic_steps_per_gen = 5;
  int batch_size = 64;
  int hidden = 32;
  std::vector<int> critic_hidden{64, 32};
  double refiner_init_scale = 0.05;
  ReconstructionTarget target = ReconstructionTarget::kInit;
  std::uint64_t seed = 0;
};

/// Produces a simulator map for a seed; must match the dataset's shape.
using SimSampler = std::function<BevMap(std::uint64_t)>;

struct TraceRow {
  int step = 0;
  double critic_loss = 0.0;
  double gen_loss = 0.0;
  double masked_mse = 0.0;  // mean over the dataset, before the step
};

struct TrainResult {
  RefinerParams refiner;
  CriticParams critic;
  std::vector<TraceRow> trace;
};

/// Mean masked MSE between refined outputs and their B_init inputs.
double dataset_masked_mse(const std::vector<TrainSample>& dataset, const RefinerParams& refiner);

/// Alternates critic steps (simulator reals vs refined fakes) with Adam
/// steps on the combined loss. Deterministic for a fixed seed.
TrainResult train_refiner(const std::vector<TrainSample>& dataset, const SimSampler& sampler,
                          const TrainConfig& cfg);

}  // namespace bevmap
