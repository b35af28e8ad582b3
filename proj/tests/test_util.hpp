#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "bevmap/core.hpp"
#include "bevmap/projection.hpp"

namespace bevmap::testing {

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("bevmap_test_" + name);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Normalized random grid; each cell unobserved with probability p_unobserved.
inline SemanticGrid random_distribution_grid(int h, int w, int c, std::mt19937_64& rng, double p_unobserved = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SemanticGrid g(h, w, c);
  for (int r = 0; r < h; ++r) {
    for (int col = 0; col < w; ++col) {
      if (u(rng) < p_unobserved) continue;
      double mass = 0.0;
      for (double& v : g.cell(r, col)) mass += (v = u(rng) + 1e-3);
      for (double& v : g.cell(r, col)) v /= mass;
    }
  }
  return g;
}

inline Raster random_raster(int h, int w, int c, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Raster g(h, w, c);
  for (double& v : g.data) v = u(rng);
  return g;
}

inline LabelGrid random_labels(int h, int w, int classes, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> u(0, classes - 1);
  LabelGrid g(h, w);
  for (auto& v : g.label) v = static_cast<std::uint8_t>(u(rng));
  return g;
}

inline BevMap random_bev_map(int h, int w, int c, std::mt19937_64& rng, double p_unobserved) {
  return BevMap(random_distribution_grid(h, w, c, rng, p_unobserved));
}

inline BevConfig standard_grid() { return BevConfig{128, 64, 60.0, 30.0}; }

}  // namespace bevmap::testing
