#include "bevmap/projection.hpp"

#include <cmath>

#include "bevmap/error.hpp"

namespace bevmap {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(cx) || !std::isfinite(cy)) {
    throw ValidationError("intrinsics", "focal lengths must be positive and the principal point finite");
  }
}

void BevConfig::validate() const {
  if (rows <= 0 || cols <= 0 || !(extent_z > 0.0) || !(extent_x > 0.0)) {
    throw ValidationError("bev-config", "grid dimensions and extents must be positive");
  }
}

std::optional<BevCell> bev_cell_of(double x, double z, const BevConfig& cfg) {
  if (!(z >= 0.0) || !(z < cfg.extent_z)) return std::nullopt;
  const double xs = x + 0.5 * cfg.extent_x;
  if (!(xs >= 0.0) || !(xs < cfg.extent_x)) return std::nullopt;
  const int row = cfg.rows - 1 - static_cast<int>(std::floor(z / cfg.res_z()));
  const int col = static_cast<int>(std::floor(xs / cfg.res_x()));
  if (row < 0 || row >= cfg.rows || col < 0 || col >= cfg.cols) return std::nullopt;
  return BevCell{row, col};
}

BevMap::BevMap(SemanticGrid g) : grid(std::move(g)), observed(observed_cells(grid)) {}

double BevMap::observed_fraction() const {
  if (observed.m.empty()) return 0.0;
  return static_cast<double>(observed.count()) / static_cast<double>(observed.m.size());
}

Point3 unproject(double u, double v, double depth, const CameraIntrinsics& K) {
  if (!(depth > 0.0)) throw ValidationError("project", "depth must be positive");
  return {(u - K.cx) * depth / K.fx, (v - K.cy) * depth / K.fy, depth};
}

std::pair<double, double> project_point(const Point3& p, const CameraIntrinsics& K) {
  if (!(p.z > 0.0)) throw ValidationError("project", "point behind the camera");
  return {K.fx * p.x / p.z + K.cx, K.fy * p.y / p.z + K.cy};
}

ProjectionResult project_to_bev(const SemanticGrid& seg_bg, const DepthMap& depth, const CameraIntrinsics& K,
                                const BevConfig& cfg) {
  K.validate();
  cfg.validate();
  if (seg_bg.height != depth.height || seg_bg.width != depth.width) {
    throw ValidationError("project", "segmentation and depth dimensions differ");
  }
  ProjectionResult result;
  SemanticGrid sum(cfg.rows, cfg.cols, seg_bg.channels);
  for (int v = 0; v < seg_bg.height; ++v) {
    for (int u = 0; u < seg_bg.width; ++u) {
      const double mass = seg_bg.cell_mass(v, u);
      if (!depth.is_valid(v, u) || !(mass > 0.0)) {
        ++result.skipped;
        continue;
      }
      const auto p = unproject(u, v, depth.at(v, u), K);
      const auto cell = bev_cell_of(p.x, p.z, cfg);
      if (!cell) {
        ++result.skipped;
        continue;
      }
      auto dst = sum.cell(cell->row, cell->col);
      const auto src = seg_bg.cell(v, u);
      for (int k = 0; k < seg_bg.channels; ++k) dst[k] += src[k] / mass;
      ++result.contributed;
    }
  }
  result.map = BevMap(normalize_cells(std::move(sum)));
  return result;
}

std::optional<BevRect> footprint_rect(double x, double z, double length, double width, const BevConfig& cfg) {
  if (!(length > 0.0) || !(width > 0.0)) throw ValidationError("footprint", "footprint must be positive");
  BevRect rect;
  rect.x_min = x - 0.5 * width;
  rect.x_max = x + 0.5 * width;
  rect.z_min = z - 0.5 * length;
  rect.z_max = z + 0.5 * length;
  rect.center_row = cfg.row_coord(z);
  rect.center_col = cfg.col_coord(x);
  // Tiny slack keeps exact multiples of the resolution from gaining a cell.
  const int n_rows = static_cast<int>(std::ceil(length / cfg.res_z() - 1e-9));
  const int n_cols = static_cast<int>(std::ceil(width / cfg.res_x() - 1e-9));
  const int r0 = static_cast<int>(std::round(rect.center_row - 0.5 * n_rows));
  const int c0 = static_cast<int>(std::round(rect.center_col - 0.5 * n_cols));
  rect.row_begin = std::max(0, r0);
  rect.row_end = std::min(cfg.rows, r0 + n_rows);
  rect.col_begin = std::max(0, c0);
  rect.col_end = std::min(cfg.cols, c0 + n_cols);
  if (rect.row_begin >= rect.row_end || rect.col_begin >= rect.col_end) return std::nullopt;
  return rect;
}

BevRect lift_bbox_to_bev(const PixelBox& box, const DepthMap& depth, const CameraIntrinsics& K,
                         const BoxPrior& prior, const BevConfig& cfg) {
  const double u = box.center_x();
  const int v = box.y1 - 1;
  const int col = static_cast<int>(std::floor(u));
  if (v < 0 || v >= depth.height || col < 0 || col >= depth.width || !depth.is_valid(v, col)) {
    throw ValidationError("lift", "no valid depth at the bottom-center pixel");
  }
  const auto p = unproject(u, v, depth.at(v, col), K);
  const double cz = p.z + 0.5 * prior.length;
  if (!bev_cell_of(p.x, cz, cfg)) throw ValidationError("lift", "lifted box center lies outside the BEV extent");
  auto rect = footprint_rect(p.x, cz, prior.length, prior.width, cfg);
  if (!rect) throw ValidationError("lift", "lifted box lies outside the BEV extent");
  return *rect;
}

}  // namespace bevmap
