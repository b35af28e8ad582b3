#pragma once

#include <span>
#include <vector>

#include "bevmap/core.hpp"
#include "bevmap/projection.hpp"

namespace bevmap {

/// Similarity transform about the grid center, in cells and radians.
/// Positive tx/ty move content toward larger column/row indices.
struct BoxParams {
  double tx = 0.0;
  double ty = 0.0;
  double rotation = 0.0;
  double log_scale = 0.0;
};

/// Coarse displacement field, bilinearly upsampled (corner-aligned) to the
/// full grid. Each node stores (du, dv) = (row, col) displacement in cells;
/// like the box translation, a positive value moves content forward along
/// that axis.
struct FlowField {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // interleaved (du, dv), row-major

  FlowField() = default;
  FlowField(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c * 2, 0.0) {}

  double& du(int i, int j) { return data[(static_cast<std::size_t>(i) * cols + j) * 2]; }
  double& dv(int i, int j) { return data[(static_cast<std::size_t>(i) * cols + j) * 2 + 1]; }
  double du(int i, int j) const { return data[(static_cast<std::size_t>(i) * cols + j) * 2]; }
  double dv(int i, int j) const { return data[(static_cast<std::size_t>(i) * cols + j) * 2 + 1]; }
};

inline constexpr int kBoxParamCount = 4;

/// theta. Flattened order: tx, ty, rotation, log_scale, then flow data.
struct WarpParams {
  BoxParams box;
  FlowField flow;

  static WarpParams identity(int flow_rows = 8, int flow_cols = 4);

  std::size_t size() const { return kBoxParamCount + flow.data.size(); }
  std::vector<double> to_vector() const;
  void assign(std::span<const double> values);
  void validate() const;
};

struct GridCoord {
  double row = 0.0;
  double col = 0.0;
};

/// Bilinear interpolation at per-output-cell source coordinates. Neighbors
/// outside the source grid contribute zero, so coordinates more than one cell
/// outside [0, h-1] x [0, w-1] sample the zero vector.
Raster bilinear_sample(const Raster& grid, std::span<const GridCoord> coords, int out_height, int out_width);

/// Adjoint of bilinear_sample. Writes d/dcoords into `grad_coords` (same
/// length as coords) and accumulates d/dgrid into `grad_grid` when given.
void bilinear_sample_backward(const Raster& grid, std::span<const GridCoord> coords, const Raster& grad_out,
                              std::span<GridCoord> grad_coords, Raster* grad_grid);

/// Source coordinate of every output cell under the inverse similarity
/// transform about the grid center.
std::vector<GridCoord> box_coordinate_map(const BoxParams& box, int rows, int cols);

/// Full-resolution (du, dv) per cell.
std::vector<GridCoord> upsample_flow(const FlowField& flow, int rows, int cols);

/// Source coordinates of the composed warp: box map minus upsampled flow.
std::vector<GridCoord> warp_coordinates(const WarpParams& theta, int rows, int cols);

/// W(src; theta) on raw values (no renormalization).
Raster warp_raster(const Raster& src, const WarpParams& theta);

/// Gradient of sum(grad_out * warp_raster(src, theta)) with respect to theta,
/// and optionally with respect to src.
WarpParams warp_raster_backward(const Raster& src, const WarpParams& theta, const Raster& grad_out,
                                Raster* grad_src = nullptr);

/// Warps a BEV map: the observed mask is warped like the grid and thresholded
/// at 0.5; observed cells are renormalized and unobserved ones zeroed.
BevMap compose_and_warp(const BevMap& map, const WarpParams& theta);

template <class Gradient>
struct ValueAndGradient {
  double value = 0.0;
  Gradient gradient;
};

/// Gamma: mean squared first difference of the flow over both grid directions
/// and both components.
ValueAndGradient<FlowField> lowpass_regularizer(const FlowField& flow);

/// Squared l2 norm of all parameters.
ValueAndGradient<WarpParams> l2_regularizer(const WarpParams& theta);

}  // namespace bevmap
