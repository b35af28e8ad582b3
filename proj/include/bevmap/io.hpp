#pragma once

#include <filesystem>
#include <string_view>
#include <variant>

#include "bevmap/core.hpp"

namespace bevmap {

enum class GridFormat { kLabelPgm, kProbBin, kDepthBin };

GridFormat parse_grid_format(std::string_view name);

// label-pgm: binary P5, maxval 255, one byte per class id.
// prob-bin:  "PROB <h> <w> <c>\n" + row-major little-endian float64.
// depth-bin: "DEPTH <h> <w>\n" + row-major little-endian float64, NaN = invalid.
//
// All loaders throw ValidationError with stage "load" on malformed input.

LabelGrid load_label_pgm(const std::filesystem::path& path);
void save_label_pgm(const LabelGrid& grid, const std::filesystem::path& path);

SemanticGrid load_prob_bin(const std::filesystem::path& path);
void save_prob_bin(const SemanticGrid& grid, const std::filesystem::path& path);

DepthMap load_depth_bin(const std::filesystem::path& path);
void save_depth_bin(const DepthMap& depth, const std::filesystem::path& path);

using AnyGrid = std::variant<LabelGrid, SemanticGrid, DepthMap>;

AnyGrid load_grid(const std::filesystem::path& path, GridFormat format);
void save_grid(const AnyGrid& grid, const std::filesystem::path& path);

}  // namespace bevmap
