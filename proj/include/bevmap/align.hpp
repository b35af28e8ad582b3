#pragma once

#include <cstdint>
#include <vector>

#include "bevmap/projection.hpp"
#include "bevmap/warp.hpp"

namespace bevmap {

struct AlignConfig {
  double lambda2 = 0.1;   // flow smoothness weight
  double lambda3 = 1e-3;  // parameter norm weight
  int max_iters = 150;            // total, shared by all blur levels
  double step_size = 1.0;         // initial line-search step
  double convergence_tol = 1e-9;  // relative objective decrease
  int restarts = 4;               // jittered restarts besides the identity start
  int flow_rows = 8;
  int flow_cols = 4;
  // Coarse-to-fine schedule: both maps are Gaussian-blurred with each sigma
  // (cells) in turn; 0 means the raw maps. One-hot maps only give gradient at
  // label edges, so blurring widens the basin of the true warp.
  std::vector<double> blur_sigmas{4.0, 2.0, 1.0, 0.0};
  std::uint64_t seed = 0;

  void validate() const;
};

/// Masked MSE between B_init and the warped OSM map over B_init's observed
/// cells, plus lambda2 * Gamma(flow) + lambda3 * |theta|^2.
ValueAndGradient<WarpParams> alignment_objective(const BevMap& b_init, const BevMap& b_osm, const WarpParams& theta,
                                                 const AlignConfig& cfg);

struct AlignResult {
  WarpParams theta;
  double objective = 0.0;
  std::vector<double> trace;  // accepted objective values of the winning run's finest level
  int winning_restart = 0;
};

/// Map whose observed cells hold the Gaussian-smoothed distribution of their
/// observed neighborhood (normalized convolution); the mask is unchanged.
BevMap blur_map(const BevMap& map, double sigma);

/// Diagonally preconditioned gradient descent with Armijo backtracking from
/// the identity plus cfg.restarts jittered starts; the lowest final objective
/// on the raw maps wins (ties: lowest index). The first third of the
/// iterations updates only the box parameters.
AlignResult align_osm(const BevMap& b_init, const BevMap& b_osm, const AlignConfig& cfg);

}  // namespace bevmap
