#pragma once

#include <cstdint>
#include <vector>

#include "bevmap/core.hpp"

namespace bevmap {

/// m(r,c) = 1 iff the argmax class of `seg` at (r,c) is a foreground class.
Mask foreground_mask(const SemanticGrid& seg, const ClassCatalog& catalog);

/// Replaces every channel of masked cells with `fill`.
Raster apply_mask(const Raster& image, const Mask& mask, double fill);

/// C^fg channels; channel f is 1 where the argmax class is foreground class f.
Raster class_mask_stack(const SemanticGrid& seg, const ClassCatalog& catalog);

enum class BoxGeometry { kNone, kPerspective };
enum class PlacementRegion { kRoad, kBackground };

struct BoxSamplingStrategy {
  BoxGeometry geometry = BoxGeometry::kNone;
  PlacementRegion region = PlacementRegion::kRoad;
  int object_size = 50;    // box height in pixels at the bottom image row
  int object_count = 1;
  double aspect = 1.0;     // width / height
  int horizon_row = -1;    // perspective only; -1 means height / 2
};

/// Half-open pixel box [x0, x1) x [y0, y1).
struct PixelBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  double center_x() const { return 0.5 * (x0 + x1); }
  double center_y() const { return 0.5 * (y0 + y1); }
  bool operator==(const PixelBox&) const = default;
};

inline constexpr int kMaxPlacementAttempts = 1000;
inline constexpr double kMinPlacementOverlap = 0.5;

/// Box height for a box whose bottom row is `bottom_row`. Shrinks linearly
/// from object_size at the last image row to object_size / 4 at the horizon.
double box_height_at(const BoxSamplingStrategy& strategy, int image_height, int bottom_row);

/// Parses names like "persp-road-100-5" or "none-bg-50-2".
BoxSamplingStrategy parse_box_strategy(const std::string& name);

/// Rejection-samples `object_count` boxes, each fully inside the image and
/// overlapping the placement region by at least half of its area. Throws
/// ValidationError if any box exhausts kMaxPlacementAttempts.
std::vector<PixelBox> sample_random_boxes(const BoxSamplingStrategy& strategy, const SemanticGrid& seg,
                                          const ClassCatalog& catalog, std::uint64_t seed);

/// Mask with all cells covered by `boxes` set.
Mask boxes_to_mask(const std::vector<PixelBox>& boxes, int height, int width);

}  // namespace bevmap
