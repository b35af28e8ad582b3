#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "bevmap/core.hpp"
#include "bevmap/warp.hpp"

namespace bevmap {

struct ReconstructionLoss {
  double value = 0.0;
  Raster grad_a;
  Raster grad_b;
};

/// |(A - B) * M|^2 / sum(M) with gradients for both maps.
ReconstructionLoss masked_reconstruction_loss(const Raster& a, const Raster& b, const Mask& mask);

/// L^OSM = |B_final - B_osm|^2 (sum); gradient is with respect to B_final.
ValueAndGradient<Raster> osm_reconstruction_loss(const Raster& b_final, const Raster& b_osm);

/// Dense layer; weight is row-major (out x in).
struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> weight;
  std::vector<double> bias;

  DenseLayer() = default;
  DenseLayer(int in_size, int out_size)
      : in(in_size), out(out_size), weight(static_cast<std::size_t>(in_size) * out_size, 0.0), bias(out_size, 0.0) {}

  bool operator==(const DenseLayer&) const = default;
};

inline constexpr double kLeakySlope = 0.2;

/// Parameter container shared by the critic and the refiner: a stack of
/// dense layers flattened as (weights, bias) per layer.
struct DenseStack {
  std::vector<DenseLayer> layers;

  std::size_t size() const;
  std::vector<double> to_vector() const;
  void assign(std::span<const double> values);
  double max_abs() const;
  int input_size() const { return layers.empty() ? 0 : layers.front().in; }
  int output_size() const { return layers.empty() ? 0 : layers.back().out; }
  bool operator==(const DenseStack&) const = default;
};

/// Wasserstein critic f(x; Theta): dense layers with leaky rectifiers between
/// them and a scalar output. sizes = {input, hidden..., 1}.
struct CriticParams : DenseStack {
  static CriticParams create(const std::vector<int>& sizes, double init_scale, std::uint64_t seed);
  bool operator==(const CriticParams&) const = default;
};

double critic_forward(std::span<const double> x, const CriticParams& critic);

struct CriticGradient {
  double value = 0.0;
  std::vector<double> grad_input;
  std::vector<double> grad_params;  // DenseStack::to_vector order
};

/// Forward pass plus the gradient of the scalar output.
CriticGradient critic_backward(std::span<const double> x, const CriticParams& critic);

struct LossWeights {
  double lambda = 1.0;
  double clip_c = 0.01;
  double critic_lr = 5e-5;
  double gen_lr = 1e-4;

  void validate() const;
};

struct CriticStepResult {
  CriticParams critic;
  double critic_loss = 0.0;  // mean f(fake) - mean f(real), before the step
};

using Batch = std::vector<std::vector<double>>;

/// One SGD ascent step on mean f(real) - mean f(fake), then every parameter
/// clamped to [-clip_c, clip_c].
CriticStepResult wgan_critic_step(const Batch& reals, const Batch& fakes, const CriticParams& critic,
                                  const LossWeights& weights);

/// L = L_sim + lambda * L_reconst.
double combined_refinement_loss(double l_sim, double l_reconst, double lambda);
std::vector<double> combined_refinement_gradient(std::span<const double> g_sim, std::span<const double> g_reconst,
                                                 double lambda);

/// f(x, grad) returns the value and writes the analytic gradient.
using DifferentiableFunction = std::function<double(std::span<const double>, std::span<double>)>;

/// Max over coordinates of |g_a - g_fd| / max(1e-12, |g_a| + |g_fd|) with
/// central differences of step eps.
double grad_check(const DifferentiableFunction& f, std::span<const double> x, double eps = 1e-6);

}  // namespace bevmap
