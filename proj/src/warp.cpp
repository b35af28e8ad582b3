#include "bevmap/warp.hpp"

#include <algorithm>
#include <cmath>

#include "bevmap/error.hpp"

namespace bevmap {
namespace {

struct Corner {
  int i0 = 0;
  double frac = 0.0;
};

// Corner-aligned position of a full-resolution index on a coarse axis.
Corner coarse_position(int index, int full, int coarse) {
  if (coarse <= 1 || full <= 1) return {0, 0.0};
  const double p = static_cast<double>(index) * (coarse - 1) / (full - 1);
  const int i0 = std::min(static_cast<int>(std::floor(p)), coarse - 2);
  return {i0, p - i0};
}

}  // namespace

WarpParams WarpParams::identity(int flow_rows, int flow_cols) {
  WarpParams theta;
  theta.flow = FlowField(flow_rows, flow_cols);
  return theta;
}

std::vector<double> WarpParams::to_vector() const {
  std::vector<double> v{box.tx, box.ty, box.rotation, box.log_scale};
  v.insert(v.end(), flow.data.begin(), flow.data.end());
  return v;
}

void WarpParams::assign(std::span<const double> values) {
  if (values.size() != size()) throw ValidationError("warp", "parameter vector length mismatch");
  box = {values[0], values[1], values[2], values[3]};
  std::copy(values.begin() + kBoxParamCount, values.end(), flow.data.begin());
}

void WarpParams::validate() const {
  for (double v : to_vector()) {
    if (!std::isfinite(v)) throw NumericalError("warp", "non-finite warp parameter");
  }
  if (flow.data.size() != static_cast<std::size_t>(flow.rows) * flow.cols * 2) {
    throw ValidationError("warp", "flow data does not match its dimensions");
  }
}

Raster bilinear_sample(const Raster& grid, std::span<const GridCoord> coords, int out_height, int out_width) {
  if (coords.size() != static_cast<std::size_t>(out_height) * out_width) {
    throw ValidationError("warp", "coordinate count does not match the output size");
  }
  Raster out(out_height, out_width, grid.channels);
  for (int r = 0; r < out_height; ++r) {
    for (int c = 0; c < out_width; ++c) {
      const auto& p = coords[static_cast<std::size_t>(r) * out_width + c];
      const int r0 = static_cast<int>(std::floor(p.row));
      const int c0 = static_cast<int>(std::floor(p.col));
      const double fr = p.row - r0;
      const double fc = p.col - c0;
      const double w[4] = {(1 - fr) * (1 - fc), (1 - fr) * fc, fr * (1 - fc), fr * fc};
      const int nr[4] = {r0, r0, r0 + 1, r0 + 1};
      const int nc[4] = {c0, c0 + 1, c0, c0 + 1};
      auto dst = out.cell(r, c);
      for (int n = 0; n < 4; ++n) {
        if (nr[n] < 0 || nr[n] >= grid.height || nc[n] < 0 || nc[n] >= grid.width || w[n] == 0.0) continue;
        const auto src = grid.cell(nr[n], nc[n]);
        for (int k = 0; k < grid.channels; ++k) dst[k] += w[n] * src[k];
      }
    }
  }
  return out;
}

void bilinear_sample_backward(const Raster& grid, std::span<const GridCoord> coords, const Raster& grad_out,
                              std::span<GridCoord> grad_coords, Raster* grad_grid) {
  if (grad_coords.size() != coords.size() || coords.size() != grad_out.cells() ||
      grad_out.channels != grid.channels) {
    throw ValidationError("warp", "backward buffer shapes do not match");
  }
  if (grad_grid && !grad_grid->same_shape(grid)) throw ValidationError("warp", "grad_grid shape mismatch");
  auto value = [&](int r, int c, int k) {
    return (r < 0 || r >= grid.height || c < 0 || c >= grid.width) ? 0.0 : grid.at(r, c, k);
  };
  for (int r = 0; r < grad_out.height; ++r) {
    for (int c = 0; c < grad_out.width; ++c) {
      const std::size_t idx = static_cast<std::size_t>(r) * grad_out.width + c;
      const auto& p = coords[idx];
      const int r0 = static_cast<int>(std::floor(p.row));
      const int c0 = static_cast<int>(std::floor(p.col));
      const double fr = p.row - r0;
      const double fc = p.col - c0;
      const auto g = grad_out.cell(r, c);
      double d_row = 0.0;
      double d_col = 0.0;
      for (int k = 0; k < grid.channels; ++k) {
        if (g[k] == 0.0) continue;
        const double v00 = value(r0, c0, k);
        const double v01 = value(r0, c0 + 1, k);
        const double v10 = value(r0 + 1, c0, k);
        const double v11 = value(r0 + 1, c0 + 1, k);
        d_row += g[k] * ((1 - fc) * (v10 - v00) + fc * (v11 - v01));
        d_col += g[k] * ((1 - fr) * (v01 - v00) + fr * (v11 - v10));
      }
      grad_coords[idx] = {d_row, d_col};
      if (!grad_grid) continue;
      const double w[4] = {(1 - fr) * (1 - fc), (1 - fr) * fc, fr * (1 - fc), fr * fc};
      const int nr[4] = {r0, r0, r0 + 1, r0 + 1};
      const int nc[4] = {c0, c0 + 1, c0, c0 + 1};
      for (int n = 0; n < 4; ++n) {
        if (nr[n] < 0 || nr[n] >= grid.height || nc[n] < 0 || nc[n] >= grid.width) continue;
        auto dst = grad_grid->cell(nr[n], nc[n]);
        for (int k = 0; k < grid.channels; ++k) dst[k] += w[n] * g[k];
      }
    }
  }
}

std::vector<GridCoord> box_coordinate_map(const BoxParams& box, int rows, int cols) {
  const double rc = 0.5 * (rows - 1);
  const double cc = 0.5 * (cols - 1);
  const double inv_s = std::exp(-box.log_scale);
  const double cs = std::cos(box.rotation);
  const double sn = std::sin(box.rotation);
  std::vector<GridCoord> coords(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double dx = c - cc - box.tx;
      const double dy = r - rc - box.ty;
      coords[static_cast<std::size_t>(r) * cols + c] = {(-sn * dx + cs * dy) * inv_s + rc,
                                                        (cs * dx + sn * dy) * inv_s + cc};
    }
  }
  return coords;
}

std::vector<GridCoord> upsample_flow(const FlowField& flow, int rows, int cols) {
  std::vector<GridCoord> out(static_cast<std::size_t>(rows) * cols);
  if (flow.rows == 0 || flow.cols == 0) return out;
  for (int r = 0; r < rows; ++r) {
    const auto pr = coarse_position(r, rows, flow.rows);
    const int i1 = std::min(pr.i0 + 1, flow.rows - 1);
    for (int c = 0; c < cols; ++c) {
      const auto pc = coarse_position(c, cols, flow.cols);
      const int j1 = std::min(pc.i0 + 1, flow.cols - 1);
      const double w00 = (1 - pr.frac) * (1 - pc.frac), w01 = (1 - pr.frac) * pc.frac;
      const double w10 = pr.frac * (1 - pc.frac), w11 = pr.frac * pc.frac;
      auto& o = out[static_cast<std::size_t>(r) * cols + c];
      o.row = w00 * flow.du(pr.i0, pc.i0) + w01 * flow.du(pr.i0, j1) + w10 * flow.du(i1, pc.i0) + w11 * flow.du(i1, j1);
      o.col = w00 * flow.dv(pr.i0, pc.i0) + w01 * flow.dv(pr.i0, j1) + w10 * flow.dv(i1, pc.i0) + w11 * flow.dv(i1, j1);
    }
  }
  return out;
}

std::vector<GridCoord> warp_coordinates(const WarpParams& theta, int rows, int cols) {
  auto coords = box_coordinate_map(theta.box, rows, cols);
  const auto flow = upsample_flow(theta.flow, rows, cols);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    coords[i].row -= flow[i].row;
    coords[i].col -= flow[i].col;
  }
  return coords;
}

Raster warp_raster(const Raster& src, const WarpParams& theta) {
  theta.validate();
  return bilinear_sample(src, warp_coordinates(theta, src.height, src.width), src.height, src.width);
}

WarpParams warp_raster_backward(const Raster& src, const WarpParams& theta, const Raster& grad_out,
                                Raster* grad_src) {
  const int rows = src.height;
  const int cols = src.width;
  const auto coords = warp_coordinates(theta, rows, cols);
  std::vector<GridCoord> g_coords(coords.size());
  bilinear_sample_backward(src, coords, grad_out, g_coords, grad_src);

  WarpParams grad = WarpParams::identity(theta.flow.rows, theta.flow.cols);
  const double rc = 0.5 * (rows - 1);
  const double cc = 0.5 * (cols - 1);
  const double inv_s = std::exp(-theta.box.log_scale);
  const double cs = std::cos(theta.box.rotation);
  const double sn = std::sin(theta.box.rotation);
  const auto box_coords = box_coordinate_map(theta.box, rows, cols);

  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const std::size_t idx = static_cast<std::size_t>(r) * cols + c;
      const auto& g = g_coords[idx];
      const double yr = box_coords[idx].row - rc;
      const double xr = box_coords[idx].col - cc;
      // d src_row / d(tx, ty) = (sn, -cs)/s ; d src_col / d(tx, ty) = (-cs, -sn)/s
      grad.box.tx += g.row * sn * inv_s - g.col * cs * inv_s;
      grad.box.ty += -g.row * cs * inv_s - g.col * sn * inv_s;
      grad.box.rotation += -g.row * xr + g.col * yr;
      grad.box.log_scale += -g.row * yr - g.col * xr;
    }
  }

  auto& flow = grad.flow;
  if (flow.rows > 0 && flow.cols > 0) {
    for (int r = 0; r < rows; ++r) {
      const auto pr = coarse_position(r, rows, flow.rows);
      const int i1 = std::min(pr.i0 + 1, flow.rows - 1);
      for (int c = 0; c < cols; ++c) {
        const auto pc = coarse_position(c, cols, flow.cols);
        const int j1 = std::min(pc.i0 + 1, flow.cols - 1);
        const auto& g = g_coords[static_cast<std::size_t>(r) * cols + c];
        const double w[4] = {(1 - pr.frac) * (1 - pc.frac), (1 - pr.frac) * pc.frac, pr.frac * (1 - pc.frac),
                             pr.frac * pc.frac};
        const int ii[4] = {pr.i0, pr.i0, i1, i1};
        const int jj[4] = {pc.i0, j1, pc.i0, j1};
        for (int n = 0; n < 4; ++n) {
          flow.du(ii[n], jj[n]) -= w[n] * g.row;
          flow.dv(ii[n], jj[n]) -= w[n] * g.col;
        }
      }
    }
  }
  return grad;
}

BevMap compose_and_warp(const BevMap& map, const WarpParams& theta) {
  theta.validate();
  const int rows = map.grid.height;
  const int cols = map.grid.width;
  const auto coords = warp_coordinates(theta, rows, cols);
  Raster grid = bilinear_sample(map.grid, coords, rows, cols);
  Raster mask(rows, cols, 1);
  for (std::size_t i = 0; i < map.observed.m.size(); ++i) mask.data[i] = map.observed.m[i];
  const Raster warped_mask = bilinear_sample(mask, coords, rows, cols);

  BevMap out;
  out.observed = Mask(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double mass = grid.cell_mass(r, c);
      auto cell = grid.cell(r, c);
      if (warped_mask.at(r, c) >= 0.5 && mass > 0.0) {
        for (double& v : cell) v /= mass;
        out.observed.at(r, c) = 1;
      } else {
        std::ranges::fill(cell, 0.0);
      }
    }
  }
  out.grid = std::move(grid);
  return out;
}

ValueAndGradient<FlowField> lowpass_regularizer(const FlowField& flow) {
  ValueAndGradient<FlowField> result{0.0, FlowField(flow.rows, flow.cols)};
  const long terms = 2L * ((flow.rows > 1 ? (flow.rows - 1) * flow.cols : 0) +
                           (flow.cols > 1 ? flow.rows * (flow.cols - 1) : 0));
  if (terms == 0) return result;
  const double scale = 1.0 / static_cast<double>(terms);
  auto& g = result.gradient;
  for (int i = 0; i < flow.rows; ++i) {
    for (int j = 0; j < flow.cols; ++j) {
      for (int k = 0; k < 2; ++k) {
        const std::size_t a = (static_cast<std::size_t>(i) * flow.cols + j) * 2 + k;
        if (i + 1 < flow.rows) {
          const std::size_t b = (static_cast<std::size_t>(i + 1) * flow.cols + j) * 2 + k;
          const double d = flow.data[b] - flow.data[a];
          result.value += d * d;
          g.data[b] += 2.0 * d * scale;
          g.data[a] -= 2.0 * d * scale;
        }
        if (j + 1 < flow.cols) {
          const std::size_t b = (static_cast<std::size_t>(i) * flow.cols + j + 1) * 2 + k;
          const double d = flow.data[b] - flow.data[a];
          result.value += d * d;
          g.data[b] += 2.0 * d * scale;
          g.data[a] -= 2.0 * d * scale;
        }
      }
    }
  }
  result.value *= scale;
  return result;
}

ValueAndGradient<WarpParams> l2_regularizer(const WarpParams& theta) {
  ValueAndGradient<WarpParams> result{0.0, theta};
  auto v = theta.to_vector();
  for (double& x : v) {
    result.value += x * x;
    x *= 2.0;
  }
  result.gradient.assign(v);
  return result;
}

}  // namespace bevmap
