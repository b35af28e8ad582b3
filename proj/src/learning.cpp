#include "bevmap/learning.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "bevmap/error.hpp"

namespace bevmap {
namespace {

double leaky(double v) { return v > 0.0 ? v : kLeakySlope * v; }
double leaky_slope(double v) { return v > 0.0 ? 1.0 : kLeakySlope; }

}  // namespace

ReconstructionLoss masked_reconstruction_loss(const Raster& a, const Raster& b, const Mask& mask) {
  if (!a.same_shape(b) || mask.height != a.height || mask.width != a.width) {
    throw ValidationError("loss", "reconstruction inputs differ in shape");
  }
  const double denom = static_cast<double>(mask.count());
  if (denom == 0.0) throw ValidationError("loss", "reconstruction mask is empty");
  ReconstructionLoss out{0.0, Raster(a.height, a.width, a.channels), Raster(a.height, a.width, a.channels)};
  for (int r = 0; r < a.height; ++r) {
    for (int c = 0; c < a.width; ++c) {
      if (!mask.at(r, c)) continue;
      for (int k = 0; k < a.channels; ++k) {
        const double d = a.at(r, c, k) - b.at(r, c, k);
        out.value += d * d;
        out.grad_a.at(r, c, k) = 2.0 * d / denom;
        out.grad_b.at(r, c, k) = -2.0 * d / denom;
      }
    }
  }
  out.value /= denom;
  return out;
}

ValueAndGradient<Raster> osm_reconstruction_loss(const Raster& b_final, const Raster& b_osm) {
  if (!b_final.same_shape(b_osm)) throw ValidationError("loss", "OSM reconstruction inputs differ in shape");
  ValueAndGradient<Raster> out{0.0, Raster(b_final.height, b_final.width, b_final.channels)};
  for (std::size_t i = 0; i < b_final.data.size(); ++i) {
    const double d = b_final.data[i] - b_osm.data[i];
    out.value += d * d;
    out.gradient.data[i] = 2.0 * d;
  }
  return out;
}

std::size_t DenseStack::size() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

std::vector<double> DenseStack::to_vector() const {
  std::vector<double> v;
  v.reserve(size());
  for (const auto& l : layers) {
    v.insert(v.end(), l.weight.begin(), l.weight.end());
    v.insert(v.end(), l.bias.begin(), l.bias.end());
  }
  return v;
}

void DenseStack::assign(std::span<const double> values) {
  if (values.size() != size()) throw ValidationError("params", "parameter vector length mismatch");
  auto it = values.begin();
  for (auto& l : layers) {
    std::copy(it, it + static_cast<std::ptrdiff_t>(l.weight.size()), l.weight.begin());
    it += static_cast<std::ptrdiff_t>(l.weight.size());
    std::copy(it, it + static_cast<std::ptrdiff_t>(l.bias.size()), l.bias.begin());
    it += static_cast<std::ptrdiff_t>(l.bias.size());
  }
}

double DenseStack::max_abs() const {
  double m = 0.0;
  for (const auto& l : layers) {
    for (double w : l.weight) m = std::max(m, std::abs(w));
    for (double b : l.bias) m = std::max(m, std::abs(b));
  }
  return m;
}

CriticParams CriticParams::create(const std::vector<int>& sizes, double init_scale, std::uint64_t seed) {
  if (sizes.size() < 2 || sizes.back() != 1) throw ValidationError("critic", "critic sizes must end with 1");
  for (int s : sizes) {
    if (s <= 0) throw ValidationError("critic", "layer sizes must be positive");
  }
  CriticParams p;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-init_scale, init_scale);
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    DenseLayer layer(sizes[i], sizes[i + 1]);
    for (double& w : layer.weight) w = dist(rng);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

double critic_forward(std::span<const double> x, const CriticParams& critic) {
  return critic_backward(x, critic).value;
}

CriticGradient critic_backward(std::span<const double> x, const CriticParams& critic) {
  if (critic.layers.empty() || static_cast<int>(x.size()) != critic.input_size() || critic.output_size() != 1) {
    throw ValidationError("critic", "input length does not match the critic");
  }
  // Forward, keeping pre-activations.
  std::vector<std::vector<double>> inputs{std::vector<double>(x.begin(), x.end())};
  std::vector<std::vector<double>> pre;
  for (std::size_t li = 0; li < critic.layers.size(); ++li) {
    const auto& l = critic.layers[li];
    const auto& in = inputs.back();
    std::vector<double> z(l.bias);
    for (int o = 0; o < l.out; ++o) {
      const double* w = l.weight.data() + static_cast<std::size_t>(o) * l.in;
      for (int i = 0; i < l.in; ++i) z[o] += w[i] * in[i];
    }
    pre.push_back(z);
    if (li + 1 < critic.layers.size()) {
      for (double& v : z) v = leaky(v);
      inputs.push_back(std::move(z));
    }
  }

  CriticGradient g;
  g.value = pre.back()[0];
  std::vector<std::vector<double>> layer_grads(critic.layers.size());
  std::vector<double> delta{1.0};
  for (std::size_t li = critic.layers.size(); li-- > 0;) {
    const auto& l = critic.layers[li];
    if (li + 1 < critic.layers.size()) {
      for (int o = 0; o < l.out; ++o) delta[o] *= leaky_slope(pre[li][o]);
    }
    const auto& in = inputs[li];
    auto& lg = layer_grads[li];
    lg.assign(l.weight.size() + l.bias.size(), 0.0);
    std::vector<double> next(l.in, 0.0);
    for (int o = 0; o < l.out; ++o) {
      const double* w = l.weight.data() + static_cast<std::size_t>(o) * l.in;
      double* gw = lg.data() + static_cast<std::size_t>(o) * l.in;
      for (int i = 0; i < l.in; ++i) {
        gw[i] = delta[o] * in[i];
        next[i] += delta[o] * w[i];
      }
      lg[l.weight.size() + o] = delta[o];
    }
    delta = std::move(next);
  }
  g.grad_input = std::move(delta);
  for (auto& lg : layer_grads) g.grad_params.insert(g.grad_params.end(), lg.begin(), lg.end());
  return g;
}

void LossWeights::validate() const {
  if (lambda < 0.0 || !(clip_c > 0.0) || !(critic_lr > 0.0) || !(gen_lr > 0.0)) {
    throw ValidationError("loss-weights", "lambda must be nonnegative; clip and learning rates positive");
  }
}

CriticStepResult wgan_critic_step(const Batch& reals, const Batch& fakes, const CriticParams& critic,
                                  const LossWeights& weights) {
  if (reals.empty() || fakes.empty()) throw ValidationError("critic", "critic step needs nonempty batches");
  weights.validate();
  const std::size_t n = critic.size();
  std::vector<double> g_real(n, 0.0);
  std::vector<double> g_fake(n, 0.0);
  double f_real = 0.0;
  double f_fake = 0.0;
  for (const auto& x : reals) {
    const auto g = critic_backward(x, critic);
    f_real += g.value;
    for (std::size_t i = 0; i < n; ++i) g_real[i] += g.grad_params[i];
  }
  for (const auto& x : fakes) {
    const auto g = critic_backward(x, critic);
    f_fake += g.value;
    for (std::size_t i = 0; i < n; ++i) g_fake[i] += g.grad_params[i];
  }
  const double inv_r = 1.0 / static_cast<double>(reals.size());
  const double inv_f = 1.0 / static_cast<double>(fakes.size());

  CriticStepResult out{critic, f_fake * inv_f - f_real * inv_r};
  auto theta = critic.to_vector();
  for (std::size_t i = 0; i < n; ++i) {
    const double ascent = g_real[i] * inv_r - g_fake[i] * inv_f;
    theta[i] = std::clamp(theta[i] + weights.critic_lr * ascent, -weights.clip_c, weights.clip_c);
  }
  out.critic.assign(theta);
  return out;
}

double combined_refinement_loss(double l_sim, double l_reconst, double lambda) { return l_sim + lambda * l_reconst; }

std::vector<double> combined_refinement_gradient(std::span<const double> g_sim, std::span<const double> g_reconst,
                                                 double lambda) {
  if (g_sim.size() != g_reconst.size()) throw ValidationError("loss", "gradient lengths differ");
  std::vector<double> g(g_sim.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = g_sim[i] + lambda * g_reconst[i];
  return g;
}

double grad_check(const DifferentiableFunction& f, std::span<const double> x, double eps) {
  std::vector<double> point(x.begin(), x.end());
  std::vector<double> analytic(point.size(), 0.0);
  std::vector<double> scratch(point.size(), 0.0);
  f(point, analytic);
  double worst = 0.0;
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double saved = point[i];
    point[i] = saved + eps;
    const double up = f(point, scratch);
    point[i] = saved - eps;
    const double down = f(point, scratch);
    point[i] = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double err = std::abs(analytic[i] - numeric) / std::max(1e-12, std::abs(analytic[i]) + std::abs(numeric));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace bevmap
