#include "bevmap/refine.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "bevmap/error.hpp"

namespace bevmap {
namespace {

double leaky(double v) { return v > 0.0 ? v : kLeakySlope * v; }
double leaky_slope(double v) { return v > 0.0 ? 1.0 : kLeakySlope; }

struct RefinerTape {
  std::vector<double> hidden_pre;
  std::vector<double> hidden;
  std::vector<double> probs;
};

void check_shape(const BevMap& b, const RefinerParams& p) {
  if (b.grid.height != p.rows || b.grid.width != p.cols || b.grid.channels != p.channels) {
    throw ValidationError("refine", "map shape does not match the refiner");
  }
}

RefinerTape run_refiner(const BevMap& b, const RefinerParams& p) {
  check_shape(b, p);
  const auto& enc = p.layers[0];
  const auto& dec = p.layers[1];
  RefinerTape t;
  t.hidden_pre = enc.bias;
  for (int o = 0; o < enc.out; ++o) {
    const double* w = enc.weight.data() + static_cast<std::size_t>(o) * enc.in;
    for (int i = 0; i < enc.in; ++i) t.hidden_pre[o] += w[i] * b.grid.data[i];
  }
  t.hidden.resize(t.hidden_pre.size());
  std::ranges::transform(t.hidden_pre, t.hidden.begin(), leaky);

  std::vector<double> logits = dec.bias;
  for (int o = 0; o < dec.out; ++o) {
    const double* w = dec.weight.data() + static_cast<std::size_t>(o) * dec.in;
    for (int i = 0; i < dec.in; ++i) logits[o] += w[i] * t.hidden[i];
  }
  t.probs.resize(logits.size());
  const int C = p.channels;
  for (std::size_t cell = 0; cell < logits.size() / C; ++cell) {
    const double* z = logits.data() + cell * C;
    double* out = t.probs.data() + cell * C;
    const double zmax = *std::max_element(z, z + C);
    double sum = 0.0;
    for (int k = 0; k < C; ++k) sum += (out[k] = std::exp(z[k] - zmax));
    for (int k = 0; k < C; ++k) out[k] /= sum;
  }
  return t;
}

std::vector<double> backprop(const BevMap& b, const RefinerParams& p, const RefinerTape& t,
                             std::span<const double> grad_probs) {
  const auto& enc = p.layers[0];
  const auto& dec = p.layers[1];
  const int C = p.channels;
  std::vector<double> g_logits(t.probs.size());
  for (std::size_t cell = 0; cell < t.probs.size() / C; ++cell) {
    const double* y = t.probs.data() + cell * C;
    const double* g = grad_probs.data() + cell * C;
    double dot = 0.0;
    for (int k = 0; k < C; ++k) dot += y[k] * g[k];
    for (int k = 0; k < C; ++k) g_logits[cell * C + k] = y[k] * (g[k] - dot);
  }

  std::vector<double> grad(p.size(), 0.0);
  double* g_enc_w = grad.data();
  double* g_enc_b = g_enc_w + enc.weight.size();
  double* g_dec_w = g_enc_b + enc.bias.size();
  double* g_dec_b = g_dec_w + dec.weight.size();

  std::vector<double> g_hidden(dec.in, 0.0);
  for (int o = 0; o < dec.out; ++o) {
    const double go = g_logits[o];
    g_dec_b[o] = go;
    if (go == 0.0) continue;
    const double* w = dec.weight.data() + static_cast<std::size_t>(o) * dec.in;
    double* gw = g_dec_w + static_cast<std::size_t>(o) * dec.in;
    for (int i = 0; i < dec.in; ++i) {
      gw[i] = go * t.hidden[i];
      g_hidden[i] += go * w[i];
    }
  }
  for (int o = 0; o < enc.out; ++o) {
    const double gh = g_hidden[o] * leaky_slope(t.hidden_pre[o]);
    g_enc_b[o] = gh;
    double* gw = g_enc_w + static_cast<std::size_t>(o) * enc.in;
    for (int i = 0; i < enc.in; ++i) gw[i] = gh * b.grid.data[i];
  }
  return grad;
}

BevMap probs_to_map(const RefinerParams& p, std::vector<double> probs) {
  SemanticGrid g(p.rows, p.cols, p.channels);
  g.data = std::move(probs);
  return BevMap(std::move(g));
}

// Adam with bias correction; one instance per parameter vector.
class Adam {
 public:
  Adam(std::size_t n, double lr) : lr_(lr), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::vector<double>& x, std::span<const double> g) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    for (std::size_t i = 0; i < x.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * g[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * g[i] * g[i];
      x[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + kEps);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  double lr_;
  int t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

}  // namespace

BevMap heuristic_refine(const BevMap& map, int unknown_channel) {
  const auto& in = map.grid;
  if (unknown_channel < 0) throw ValidationError("refine", "unknown channel must be nonnegative");
  bool needs_unknown = false;
  for (int c = 0; c < in.width && !needs_unknown; ++c) {
    bool any = false;
    for (int r = 0; r < in.height && !any; ++r) any = map.observed.at(r, c);
    needs_unknown = !any && in.height > 0;
  }
  const int channels = needs_unknown ? std::max(in.channels, unknown_channel + 1) : in.channels;
  SemanticGrid out(in.height, in.width, channels);

  for (int c = 0; c < in.width; ++c) {
    // Nearest observed row toward the camera, then the fallback above.
    std::vector<int> source(in.height, -1);
    int below = -1;
    for (int r = in.height - 1; r >= 0; --r) {
      if (map.observed.at(r, c)) below = r;
      source[r] = below;
    }
    int above = -1;
    for (int r = 0; r < in.height; ++r) {
      if (map.observed.at(r, c)) above = r;
      if (source[r] < 0) source[r] = above;
    }
    for (int r = 0; r < in.height; ++r) {
      auto dst = out.cell(r, c);
      if (source[r] < 0) {
        dst[unknown_channel] = 1.0;
      } else {
        std::ranges::copy(in.cell(source[r], c), dst.begin());
      }
    }
  }
  BevMap result;
  result.grid = std::move(out);
  result.observed = Mask(in.height, in.width, 1);
  return result;
}

RefinerParams RefinerParams::create(int rows, int cols, int channels, int hidden, double init_scale,
                                    std::uint64_t seed) {
  if (rows <= 0 || cols <= 0 || channels <= 0 || hidden <= 0) {
    throw ValidationError("refine", "refiner dimensions must be positive");
  }
  if (rows > kMaxRefinerRows || cols > kMaxRefinerCols) {
    throw ValidationError("refine", "toy refiner is limited to 16x8 grids");
  }
  RefinerParams p;
  p.rows = rows;
  p.cols = cols;
  p.channels = channels;
  const int n = rows * cols * channels;
  p.layers = {DenseLayer(n, hidden), DenseLayer(hidden, n)};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-init_scale, init_scale);
  for (auto& l : p.layers) {
    for (double& w : l.weight) w = dist(rng);
  }
  return p;
}

BevMap refiner_forward(const BevMap& b_init, const RefinerParams& refiner) {
  return probs_to_map(refiner, run_refiner(b_init, refiner).probs);
}

std::vector<double> refiner_backward(const BevMap& b_init, const RefinerParams& refiner, const Raster& grad_output) {
  const auto tape = run_refiner(b_init, refiner);
  if (grad_output.data.size() != tape.probs.size()) throw ValidationError("refine", "gradient shape mismatch");
  return backprop(b_init, refiner, tape, grad_output.data);
}

GeneratorLoss generator_loss(const std::vector<const TrainSample*>& batch, const RefinerParams& refiner,
                             const CriticParams& critic, double lambda, ReconstructionTarget target) {
  if (batch.empty()) throw ValidationError("refine", "empty generator batch");
  GeneratorLoss out;
  const std::size_t n = refiner.size();
  out.grad_adversarial.assign(n, 0.0);
  out.grad_reconstruction.assign(n, 0.0);
  const double inv_m = 1.0 / static_cast<double>(batch.size());

  for (const auto* sample : batch) {
    const auto tape = run_refiner(sample->b_init, refiner);
    Raster final_grid(refiner.rows, refiner.cols, refiner.channels);
    final_grid.data = tape.probs;

    const auto critic_grad = critic_backward(tape.probs, critic);
    out.adversarial -= critic_grad.value * inv_m;
    std::vector<double> g_adv(critic_grad.grad_input.size());
    for (std::size_t i = 0; i < g_adv.size(); ++i) g_adv[i] = -critic_grad.grad_input[i] * inv_m;
    const auto pa = backprop(sample->b_init, refiner, tape, g_adv);
    for (std::size_t i = 0; i < n; ++i) out.grad_adversarial[i] += pa[i];

    Raster g_rec(refiner.rows, refiner.cols, refiner.channels);
    if (target == ReconstructionTarget::kInit || target == ReconstructionTarget::kInitAndOsm) {
      const auto rec = masked_reconstruction_loss(final_grid, sample->b_init.grid, sample->b_init.observed);
      out.reconstruction += rec.value * inv_m;
      for (std::size_t i = 0; i < g_rec.data.size(); ++i) g_rec.data[i] += rec.grad_a.data[i] * inv_m;
    }
    if (target == ReconstructionTarget::kOsm || target == ReconstructionTarget::kInitAndOsm) {
      if (!sample->b_osm) throw ValidationError("refine", "OSM reconstruction requested without an OSM map");
      const auto rec = osm_reconstruction_loss(final_grid, sample->b_osm->grid);
      out.reconstruction += rec.value * inv_m;
      for (std::size_t i = 0; i < g_rec.data.size(); ++i) g_rec.data[i] += rec.gradient.data[i] * inv_m;
    }
    const auto pr = backprop(sample->b_init, refiner, tape, g_rec.data);
    for (std::size_t i = 0; i < n; ++i) out.grad_reconstruction[i] += pr[i];
  }
  out.total = combined_refinement_loss(out.adversarial, out.reconstruction, lambda);
  out.grad_total = combined_refinement_gradient(out.grad_adversarial, out.grad_reconstruction, lambda);
  return out;
}

double dataset_masked_mse(const std::vector<TrainSample>& dataset, const RefinerParams& refiner) {
  if (dataset.empty()) throw ValidationError("refine", "empty dataset");
  double total = 0.0;
  for (const auto& s : dataset) {
    const auto out = refiner_forward(s.b_init, refiner);
    total += masked_reconstruction_loss(out.grid, s.b_init.grid, s.b_init.observed).value;
  }
  return total / static_cast<double>(dataset.size());
}

TrainResult train_refiner(const std::vector<TrainSample>& dataset, const SimSampler& sampler,
                          const TrainConfig& cfg) {
  if (dataset.empty()) throw ValidationError("refine", "empty dataset");
  cfg.weights.validate();
  if (cfg.steps < 0 || cfg.critic_steps_per_gen < 1 || cfg.batch_size < 1) {
    throw ValidationError("refine", "invalid training schedule");
  }
  const auto& first = dataset.front().b_init.grid;
  for (const auto& s : dataset) {
    if (!s.b_init.grid.same_shape(first)) throw ValidationError("refine", "dataset maps differ in shape");
  }

  std::mt19937_64 rng(cfg.seed);
  TrainResult result;
  result.refiner =
      RefinerParams::create(first.height, first.width, first.channels, cfg.hidden, cfg.refiner_init_scale, rng());
  std::vector<int> critic_sizes{first.height * first.width * first.channels};
  critic_sizes.insert(critic_sizes.end(), cfg.critic_hidden.begin(), cfg.critic_hidden.end());
  critic_sizes.push_back(1);
  result.critic = CriticParams::create(critic_sizes, cfg.weights.clip_c, rng());

  Adam adam(result.refiner.size(), cfg.weights.gen_lr);
  std::uniform_int_distribution<std::size_t> pick(0, dataset.size() - 1);

  for (int step = 0; step < cfg.steps; ++step) {
    TraceRow row;
    row.step = step;
    row.masked_mse = dataset_masked_mse(dataset, result.refiner);

    for (int k = 0; k < cfg.critic_steps_per_gen; ++k) {
      Batch reals;
      Batch fakes;
      for (int i = 0; i < cfg.batch_size; ++i) {
        const auto sim = sampler(rng());
        if (!sim.grid.same_shape(first)) throw ValidationError("refine", "simulator map shape mismatch");
        reals.push_back(sim.grid.data);
        fakes.push_back(refiner_forward(dataset[pick(rng)].b_init, result.refiner).grid.data);
      }
      auto stepped = wgan_critic_step(reals, fakes, result.critic, cfg.weights);
      result.critic = std::move(stepped.critic);
      row.critic_loss = stepped.critic_loss;
    }

    std::vector<const TrainSample*> batch;
    for (int i = 0; i < cfg.batch_size; ++i) batch.push_back(&dataset[pick(rng)]);
    const auto loss = generator_loss(batch, result.refiner, result.critic, cfg.weights.lambda, cfg.target);
    row.gen_loss = loss.total;
    auto params = result.refiner.to_vector();
    adam.step(params, loss.grad_total);
    result.refiner.assign(params);
    for (double v : params) {
      if (!std::isfinite(v)) throw NumericalError("refine", "refiner parameters diverged");
    }
    result.trace.push_back(row);
  }
  return result;
}

}  // namespace bevmap
