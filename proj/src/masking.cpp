#include "bevmap/masking.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "bevmap/error.hpp"

namespace bevmap {
namespace {

void check_channels(const SemanticGrid& seg, const ClassCatalog& catalog) {
  if (seg.channels != catalog.size()) {
    throw ValidationError("mask", "segmentation has " + std::to_string(seg.channels) +
                                      " channels, catalog has " + std::to_string(catalog.size()) + " classes");
  }
}

// Summed-area table over a binary region for O(1) box overlap counts.
class RegionCounter {
 public:
  explicit RegionCounter(const Mask& region)
      : w_(region.width + 1), sums_(static_cast<std::size_t>(region.height + 1) * (region.width + 1), 0) {
    for (int r = 0; r < region.height; ++r) {
      for (int c = 0; c < region.width; ++c) {
        at(r + 1, c + 1) = region.at(r, c) + at(r, c + 1) + at(r + 1, c) - at(r, c);
      }
    }
  }

  long count(const PixelBox& b) const { return at(b.y1, b.x1) - at(b.y0, b.x1) - at(b.y1, b.x0) + at(b.y0, b.x0); }

 private:
  long& at(int r, int c) { return sums_[static_cast<std::size_t>(r) * w_ + c]; }
  long at(int r, int c) const { return sums_[static_cast<std::size_t>(r) * w_ + c]; }

  int w_;
  std::vector<long> sums_;
};

}  // namespace

Mask foreground_mask(const SemanticGrid& seg, const ClassCatalog& catalog) {
  check_channels(seg, catalog);
  const auto labels = argmax_labels(seg, catalog.unknown_id());
  Mask m(seg.height, seg.width);
  for (std::size_t i = 0; i < labels.label.size(); ++i) m.m[i] = catalog.is_foreground(labels.label[i]);
  return m;
}

Raster apply_mask(const Raster& image, const Mask& mask, double fill) {
  if (image.height != mask.height || image.width != mask.width) {
    throw ValidationError("mask", "image and mask dimensions differ");
  }
  Raster out = image;
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) {
      if (mask.at(r, c)) std::ranges::fill(out.cell(r, c), fill);
    }
  }
  return out;
}

Raster class_mask_stack(const SemanticGrid& seg, const ClassCatalog& catalog) {
  check_channels(seg, catalog);
  const auto labels = argmax_labels(seg, catalog.unknown_id());
  Raster stack(seg.height, seg.width, catalog.num_foreground());
  for (int r = 0; r < seg.height; ++r) {
    for (int c = 0; c < seg.width; ++c) {
      const int id = labels.at(r, c);
      if (catalog.is_foreground(id)) stack.at(r, c, catalog.foreground_index(id)) = 1.0;
    }
  }
  return stack;
}

double box_height_at(const BoxSamplingStrategy& strategy, int image_height, int bottom_row) {
  if (strategy.geometry == BoxGeometry::kNone) return strategy.object_size;
  const int horizon = strategy.horizon_row < 0 ? image_height / 2 : strategy.horizon_row;
  const int last = image_height - 1;
  if (last == horizon) return strategy.object_size;
  const double t = std::clamp(static_cast<double>(last - bottom_row) / (last - horizon), 0.0, 1.0);
  return strategy.object_size * (1.0 - 0.75 * t);
}

BoxSamplingStrategy parse_box_strategy(const std::string& name) {
  std::vector<std::string> parts;
  std::stringstream ss(name);
  for (std::string part; std::getline(ss, part, '-');) parts.push_back(part);
  if (parts.size() != 4) throw ValidationError("args", "box strategy must look like persp-bg-100-5");
  BoxSamplingStrategy s;
  if (parts[0] == "persp") {
    s.geometry = BoxGeometry::kPerspective;
  } else if (parts[0] != "none") {
    throw ValidationError("args", "box geometry must be 'persp' or 'none'");
  }
  if (parts[1] == "bg") {
    s.region = PlacementRegion::kBackground;
  } else if (parts[1] != "road") {
    throw ValidationError("args", "box background class must be 'road' or 'bg'");
  }
  try {
    s.object_size = std::stoi(parts[2]);
    s.object_count = std::stoi(parts[3]);
  } catch (const std::exception&) {
    throw ValidationError("args", "box size and count must be integers");
  }
  return s;
}

std::vector<PixelBox> sample_random_boxes(const BoxSamplingStrategy& strategy, const SemanticGrid& seg,
                                          const ClassCatalog& catalog, std::uint64_t seed) {
  if (strategy.object_size <= 0 || strategy.object_count < 1 || strategy.aspect <= 0.0) {
    throw ValidationError("mask", "object size, count and aspect must be positive");
  }
  if (seg.channels != catalog.size()) {
    throw ValidationError("mask", "segmentation channel count does not match catalog");
  }
  const auto labels = argmax_labels(seg, catalog.unknown_id());
  const int road = catalog.find("road").value_or(0);
  Mask region(seg.height, seg.width);
  for (std::size_t i = 0; i < labels.label.size(); ++i) {
    region.m[i] = strategy.region == PlacementRegion::kRoad ? labels.label[i] == road
                                                             : catalog.is_background(labels.label[i]);
  }
  const RegionCounter counter(region);

  const int h = seg.height;
  const int w = seg.width;
  int min_bottom = 0;
  if (strategy.geometry == BoxGeometry::kPerspective) {
    min_bottom = strategy.horizon_row < 0 ? h / 2 : std::clamp(strategy.horizon_row, 0, h - 1);
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> bottom_dist(min_bottom, h - 1);
  std::uniform_int_distribution<int> center_dist(0, w - 1);

  std::vector<PixelBox> boxes;
  boxes.reserve(strategy.object_count);
  for (int n = 0; n < strategy.object_count; ++n) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
      const int bottom = bottom_dist(rng);
      const int cx = center_dist(rng);
      const int bh = std::max(1, static_cast<int>(std::lround(box_height_at(strategy, h, bottom))));
      const int bw = std::max(1, static_cast<int>(std::lround(bh * strategy.aspect)));
      const PixelBox box{cx - bw / 2, bottom + 1 - bh, cx - bw / 2 + bw, bottom + 1};
      if (box.x0 < 0 || box.y0 < 0 || box.x1 > w || box.y1 > h) continue;
      const double area = static_cast<double>(box.width()) * box.height();
      if (counter.count(box) >= kMinPlacementOverlap * area) {
        boxes.push_back(box);
        placed = true;
      }
    }
    if (!placed) {
      throw ValidationError("mask", "no admissible placement for box " + std::to_string(n) + " after " +
                                        std::to_string(kMaxPlacementAttempts) + " attempts");
    }
  }
  return boxes;
}

Mask boxes_to_mask(const std::vector<PixelBox>& boxes, int height, int width) {
  Mask m(height, width);
  for (const auto& b : boxes) {
    for (int r = std::max(0, b.y0); r < std::min(height, b.y1); ++r) {
      for (int c = std::max(0, b.x0); c < std::min(width, b.x1); ++c) m.at(r, c) = 1;
    }
  }
  return m;
}

}  // namespace bevmap
