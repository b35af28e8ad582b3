#pragma once

#include <cstddef>

#include "bevmap/core.hpp"
#include "bevmap/masking.hpp"

namespace bevmap {

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  void validate() const;
};

/// Camera-frame point in meters: X right, Y down, Z forward.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// BEV grid: `rows` along the forward axis, `cols` laterally. The camera sits
/// at the bottom-center edge; row rows-1 is nearest to it.
struct BevConfig {
  int rows = 128;
  int cols = 64;
  double extent_z = 60.0;
  double extent_x = 30.0;

  double res_z() const { return extent_z / rows; }
  double res_x() const { return extent_x / cols; }
  void validate() const;

  /// Continuous grid coordinates; cell (r, c) spans [r, r+1) x [c, c+1).
  double row_coord(double z) const { return rows - z / res_z(); }
  double col_coord(double x) const { return (x + 0.5 * extent_x) / res_x(); }

  /// Metric coordinates of a cell center.
  double cell_center_z(int row) const { return (rows - row - 0.5) * res_z(); }
  double cell_center_x(int col) const { return (col + 0.5) * res_x() - 0.5 * extent_x; }

  bool operator==(const BevConfig&) const = default;
};

struct BevCell {
  int row = 0;
  int col = 0;
  bool operator==(const BevCell&) const = default;
};

/// Bins a ground-plane point; empty when it falls outside the grid. Points on
/// the far or side boundary are dropped.
std::optional<BevCell> bev_cell_of(double x, double z, const BevConfig& cfg);

/// B^init, B^sim, B^osm: a semantic grid plus its observed mask.
struct BevMap {
  SemanticGrid grid;
  Mask observed;

  BevMap() = default;
  /// Derives `observed` from cell mass.
  explicit BevMap(SemanticGrid g);

  double observed_fraction() const;
  bool operator==(const BevMap&) const = default;
};

Point3 unproject(double u, double v, double depth, const CameraIntrinsics& K);

/// Forward pinhole map; returns (u, v).
std::pair<double, double> project_point(const Point3& p, const CameraIntrinsics& K);

struct ProjectionResult {
  BevMap map;
  std::size_t contributed = 0;  // valid pixels that landed in the grid
  std::size_t skipped = 0;      // invalid, zero-mass or out-of-extent pixels
};

/// Unprojects every valid pixel, drops height and averages class
/// distributions per BEV cell.
ProjectionResult project_to_bev(const SemanticGrid& seg_bg, const DepthMap& depth, const CameraIntrinsics& K,
                                const BevConfig& cfg);

/// Mean metric footprint of a lifted object.
struct BoxPrior {
  double length = 4.0;  // along Z
  double width = 1.8;   // along X
};

/// Axis-aligned BEV rectangle. Cell span is half-open; metric bounds are the
/// exact footprint before binning.
struct BevRect {
  double x_min = 0.0, x_max = 0.0;
  double z_min = 0.0, z_max = 0.0;
  double center_row = 0.0;  // continuous grid coordinates of the center
  double center_col = 0.0;
  int row_begin = 0, row_end = 0;
  int col_begin = 0, col_end = 0;
};

/// Rectangle of ceil(length/res_z) x ceil(width/res_x) cells centered at
/// metric (x, z), clipped to the grid. Empty optional if fully outside.
std::optional<BevRect> footprint_rect(double x, double z, double length, double width, const BevConfig& cfg);

/// Lifts the bottom-center pixel of a 2D detection through the depth map and
/// places the prior footprint with its near edge at that point.
BevRect lift_bbox_to_bev(const PixelBox& box, const DepthMap& depth, const CameraIntrinsics& K,
                         const BoxPrior& prior, const BevConfig& cfg);

}  // namespace bevmap
