#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bevmap {

inline constexpr double kMassTolerance = 1e-6;

enum class ClassRole { kForeground, kBackground, kUnknown };

struct ClassInfo {
  std::string name;
  int id = 0;
  ClassRole role = ClassRole::kBackground;
};

/// Ordered semantic class list.
///
/// Background classes occupy ids 0..C^bg-1, the unknown class is id C^bg and
/// foreground classes follow. With this ordering a BEV channel index is always
/// the catalog id of the class it holds.
class ClassCatalog {
 public:
  explicit ClassCatalog(std::vector<ClassInfo> classes);

  /// road, sidewalk, background | unknown | car, person
  static ClassCatalog standard();

  int size() const { return static_cast<int>(classes_.size()); }
  int num_foreground() const { return num_fg_; }
  int num_background() const { return num_bg_; }
  int unknown_id() const { return num_bg_; }

  const ClassInfo& at(int id) const;
  std::optional<int> find(const std::string& name) const;
  int id_of(const std::string& name) const;
  bool is_foreground(int id) const { return at(id).role == ClassRole::kForeground; }
  bool is_background(int id) const { return at(id).role == ClassRole::kBackground; }

  /// Index of a foreground class among the foreground classes (0..C^fg-1).
  int foreground_index(int id) const;

  const std::vector<ClassInfo>& classes() const { return classes_; }

 private:
  std::vector<ClassInfo> classes_;
  int num_fg_ = 0;
  int num_bg_ = 0;
};

/// Dense row-major multi-channel raster of doubles. Used both for semantic
/// grids (per-cell class distributions) and for plain images.
struct Raster {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;

  Raster() = default;
  Raster(int h, int w, int c, double fill = 0.0);

  std::size_t cells() const { return static_cast<std::size_t>(height) * width; }
  std::size_t index(int r, int c, int k = 0) const {
    return (static_cast<std::size_t>(r) * width + c) * channels + k;
  }
  double& at(int r, int c, int k = 0) { return data[index(r, c, k)]; }
  double at(int r, int c, int k = 0) const { return data[index(r, c, k)]; }

  std::span<double> cell(int r, int c) { return {data.data() + index(r, c), static_cast<std::size_t>(channels)}; }
  std::span<const double> cell(int r, int c) const {
    return {data.data() + index(r, c), static_cast<std::size_t>(channels)};
  }

  double cell_mass(int r, int c) const;
  bool same_shape(const Raster& other) const {
    return height == other.height && width == other.width && channels == other.channels;
  }

  bool operator==(const Raster&) const = default;
};

/// A raster whose cells hold class probability distributions. Observed cells
/// sum to one; unobserved cells are all zero.
using SemanticGrid = Raster;

struct LabelGrid {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> label;

  LabelGrid() = default;
  LabelGrid(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), label(static_cast<std::size_t>(h) * w, fill) {}

  std::uint8_t& at(int r, int c) { return label[static_cast<std::size_t>(r) * width + c]; }
  std::uint8_t at(int r, int c) const { return label[static_cast<std::size_t>(r) * width + c]; }

  bool operator==(const LabelGrid&) const = default;
};

struct DepthMap {
  int height = 0;
  int width = 0;
  std::vector<double> depth;
  std::vector<std::uint8_t> valid;

  DepthMap() = default;
  DepthMap(int h, int w)
      : height(h),
        width(w),
        depth(static_cast<std::size_t>(h) * w, 0.0),
        valid(static_cast<std::size_t>(h) * w, 0) {}

  std::size_t index(int r, int c) const { return static_cast<std::size_t>(r) * width + c; }
  bool is_valid(int r, int c) const { return valid[index(r, c)] != 0; }
  double at(int r, int c) const { return depth[index(r, c)]; }
  void set(int r, int c, double d) {
    depth[index(r, c)] = d;
    valid[index(r, c)] = 1;
  }
};

/// Binary per-cell mask; 1 = set.
struct Mask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> m;

  Mask() = default;
  Mask(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), m(static_cast<std::size_t>(h) * w, fill) {}

  std::uint8_t& at(int r, int c) { return m[static_cast<std::size_t>(r) * width + c]; }
  std::uint8_t at(int r, int c) const { return m[static_cast<std::size_t>(r) * width + c]; }
  std::size_t count() const;

  bool operator==(const Mask&) const = default;
};

/// Argmax view; ties go to the lowest channel, zero-mass cells to `unknown_id`.
LabelGrid argmax_labels(const SemanticGrid& g, int unknown_id);

/// Divides every positive-mass cell by its mass. Zero-mass cells stay zero.
SemanticGrid normalize_cells(SemanticGrid g);

/// Cells with positive mass.
Mask observed_cells(const SemanticGrid& g);

/// Throws ValidationError(stage) unless entries are finite, nonnegative and
/// observed cells sum to one.
void check_distribution(const SemanticGrid& g, const std::string& stage);

/// One-hot grid from labels; labels >= channels become zero cells.
SemanticGrid one_hot(const LabelGrid& labels, int channels);

}  // namespace bevmap
