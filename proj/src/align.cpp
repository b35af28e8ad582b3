#include "bevmap/align.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "bevmap/error.hpp"

namespace bevmap {
namespace {

struct DescentRun {
  WarpParams theta;
  double objective = 0.0;
  std::vector<double> trace;
};

// Per-parameter step multipliers. Rotation and log-scale move cells in
// proportion to their distance from the grid center, and each flow node only
// reaches its own neighborhood, so their raw gradients live on very different
// scales from a translation's.
std::vector<double> preconditioner(const WarpParams& theta, int rows, int cols) {
  const double lever2 = (static_cast<double>(rows) * rows + static_cast<double>(cols) * cols) / 12.0;
  std::vector<double> p(theta.size(), 1.0);
  p[2] = 1.0 / lever2;
  p[3] = 1.0 / lever2;
  const double nodes = std::max(1, theta.flow.rows * theta.flow.cols);
  for (std::size_t i = kBoxParamCount; i < p.size(); ++i) p[i] = nodes;
  return p;
}

// Runs `iters` descent iterations on one blur level. `box_only` iterations
// come first. Returns false once the objective stops decreasing.
bool descend(const BevMap& b_init, const BevMap& b_osm, WarpParams& theta, const AlignConfig& cfg, int iters,
             int box_only, double& step, std::vector<double>* trace) {
  const auto precond = preconditioner(theta, b_init.grid.height, b_init.grid.width);
  auto current = alignment_objective(b_init, b_osm, theta, cfg);
  for (int iter = 0; iter < iters; ++iter) {
    const std::size_t active = iter < box_only ? kBoxParamCount : theta.size();
    const auto x = theta.to_vector();
    const auto g = current.gradient.to_vector();
    double slope = 0.0;  // g . P g
    for (std::size_t i = 0; i < active; ++i) slope += precond[i] * g[i] * g[i];
    if (!(slope > 0.0)) return iter < box_only;

    bool accepted = false;
    for (int tries = 0; tries < 40 && !accepted; ++tries) {
      std::vector<double> trial = x;
      for (std::size_t i = 0; i < active; ++i) trial[i] -= step * precond[i] * g[i];
      WarpParams candidate = theta;
      candidate.assign(trial);
      auto next = alignment_objective(b_init, b_osm, candidate, cfg);
      if (std::isfinite(next.value) && next.value <= current.value - 1e-4 * step * slope) {
        const double decrease = current.value - next.value;
        theta = std::move(candidate);
        current = std::move(next);
        if (trace) trace->push_back(current.value);
        step *= 2.0;
        accepted = true;
        if (iter >= box_only && decrease <= cfg.convergence_tol * std::max(1e-12, std::abs(current.value))) {
          return false;
        }
      } else {
        step *= 0.5;
      }
    }
    if (!accepted) {
      step = cfg.step_size;
      if (iter >= box_only) return false;
    }
  }
  return true;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) sum += k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (double& v : k) v /= sum;
  return k;
}

// Separable zero-padded convolution of every channel.
Raster convolve(const Raster& in, const std::vector<double>& k) {
  const int radius = static_cast<int>(k.size() / 2);
  Raster tmp(in.height, in.width, in.channels);
  for (int r = 0; r < in.height; ++r) {
    for (int c = 0; c < in.width; ++c) {
      for (int d = -radius; d <= radius; ++d) {
        const int cc = c + d;
        if (cc < 0 || cc >= in.width) continue;
        for (int ch = 0; ch < in.channels; ++ch) tmp.at(r, c, ch) += k[d + radius] * in.at(r, cc, ch);
      }
    }
  }
  Raster out(in.height, in.width, in.channels);
  for (int r = 0; r < in.height; ++r) {
    for (int d = -radius; d <= radius; ++d) {
      const int rr = r + d;
      if (rr < 0 || rr >= in.height) continue;
      for (int c = 0; c < in.width; ++c) {
        for (int ch = 0; ch < in.channels; ++ch) out.at(r, c, ch) += k[d + radius] * tmp.at(rr, c, ch);
      }
    }
  }
  return out;
}

}  // namespace

void AlignConfig::validate() const {
  if (max_iters < 1 || !(step_size > 0.0) || lambda2 < 0.0 || lambda3 < 0.0 || restarts < 0 || flow_rows < 0 ||
      flow_cols < 0 || std::ranges::any_of(blur_sigmas, [](double s) { return !(s >= 0.0); })) {
    throw ValidationError("align", "invalid alignment configuration");
  }
}

ValueAndGradient<WarpParams> alignment_objective(const BevMap& b_init, const BevMap& b_osm, const WarpParams& theta,
                                                 const AlignConfig& cfg) {
  if (!b_init.grid.same_shape(b_osm.grid)) throw ValidationError("align", "B_init and B_osm shapes differ");
  const auto& M = b_init.observed;
  const double denom = static_cast<double>(M.count());
  if (denom == 0.0) throw ValidationError("align", "B_init has no observed cell");

  const Raster warped = warp_raster(b_osm.grid, theta);
  Raster grad_out(warped.height, warped.width, warped.channels);
  double mse = 0.0;
  for (int r = 0; r < warped.height; ++r) {
    for (int c = 0; c < warped.width; ++c) {
      if (!M.at(r, c)) continue;
      const auto w = warped.cell(r, c);
      const auto t = b_init.grid.cell(r, c);
      auto g = grad_out.cell(r, c);
      for (int k = 0; k < warped.channels; ++k) {
        const double d = w[k] - t[k];
        mse += d * d;
        g[k] = 2.0 * d / denom;
      }
    }
  }
  mse /= denom;

  ValueAndGradient<WarpParams> result{mse, warp_raster_backward(b_osm.grid, theta, grad_out)};
  auto grad = result.gradient.to_vector();
  if (cfg.lambda2 > 0.0) {
    const auto smooth = lowpass_regularizer(theta.flow);
    result.value += cfg.lambda2 * smooth.value;
    for (std::size_t i = 0; i < smooth.gradient.data.size(); ++i) {
      grad[kBoxParamCount + i] += cfg.lambda2 * smooth.gradient.data[i];
    }
  }
  if (cfg.lambda3 > 0.0) {
    const auto l2 = l2_regularizer(theta);
    result.value += cfg.lambda3 * l2.value;
    const auto l2g = l2.gradient.to_vector();
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += cfg.lambda3 * l2g[i];
  }
  result.gradient.assign(grad);
  if (!std::isfinite(result.value)) throw NumericalError("align", "objective is not finite");
  return result;
}

BevMap blur_map(const BevMap& map, double sigma) {
  if (!(sigma > 0.0)) return map;
  const auto k = gaussian_kernel(sigma);
  Raster weight(map.grid.height, map.grid.width, 1);
  for (int r = 0; r < map.grid.height; ++r) {
    for (int c = 0; c < map.grid.width; ++c) weight.at(r, c) = map.observed.at(r, c);
  }
  const Raster num = convolve(map.grid, k);
  const Raster den = convolve(weight, k);
  BevMap out = map;
  for (int r = 0; r < map.grid.height; ++r) {
    for (int c = 0; c < map.grid.width; ++c) {
      if (!map.observed.at(r, c)) continue;
      for (int ch = 0; ch < map.grid.channels; ++ch) out.grid.at(r, c, ch) = num.at(r, c, ch) / den.at(r, c);
    }
  }
  return out;
}

AlignResult align_osm(const BevMap& b_init, const BevMap& b_osm, const AlignConfig& cfg) {
  cfg.validate();
  if (!b_init.grid.same_shape(b_osm.grid)) throw ValidationError("align", "B_init and B_osm shapes differ");

  std::vector<std::pair<BevMap, BevMap>> levels;
  for (double sigma : cfg.blur_sigmas) levels.emplace_back(blur_map(b_init, sigma), blur_map(b_osm, sigma));
  if (levels.empty()) levels.emplace_back(b_init, b_osm);
  const int n_levels = static_cast<int>(levels.size());
  const int box_only_total = cfg.max_iters / 3;

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> shift(-2.0, 2.0);
  std::uniform_real_distribution<double> angle(-5.0 * std::numbers::pi / 180.0, 5.0 * std::numbers::pi / 180.0);
  std::uniform_real_distribution<double> scale(-0.05, 0.05);

  AlignResult best;
  bool have_best = false;
  for (int restart = 0; restart <= cfg.restarts; ++restart) {
    WarpParams theta = WarpParams::identity(cfg.flow_rows, cfg.flow_cols);
    if (restart > 0) theta.box = {shift(rng), shift(rng), angle(rng), scale(rng)};
    std::vector<double> trace;
    int done = 0;
    for (int level = 0; level < n_levels; ++level) {
      const int iters = (cfg.max_iters * (level + 1)) / n_levels - done;
      const int box_only = std::clamp(box_only_total - done, 0, iters);
      const auto& [init_l, osm_l] = levels[level];
      std::vector<double>* record = nullptr;
      if (level + 1 == n_levels) {
        trace.push_back(alignment_objective(init_l, osm_l, theta, cfg).value);
        record = &trace;
      }
      double step = cfg.step_size;
      descend(init_l, osm_l, theta, cfg, iters, box_only, step, record);
      done += iters;
    }
    const double objective = alignment_objective(b_init, b_osm, theta, cfg).value;
    if (!have_best || objective < best.objective) {
      best = {std::move(theta), objective, std::move(trace), restart};
      have_best = true;
    }
  }
  return best;
}

}  // namespace bevmap
