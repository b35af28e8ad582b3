#include "bevmap/core.hpp"

#include <cmath>
#include <numeric>

#include "bevmap/error.hpp"

namespace bevmap {

ClassCatalog::ClassCatalog(std::vector<ClassInfo> classes) : classes_(std::move(classes)) {
  if (classes_.empty() || classes_.size() > 255) {
    throw ValidationError("catalog", "class count must be in 1..255");
  }
  int unknown = 0;
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    const auto& c = classes_[i];
    if (c.id != static_cast<int>(i)) {
      throw ValidationError("catalog", "ids must be dense and ordered; class '" + c.name + "' has id " +
                                           std::to_string(c.id) + " at position " + std::to_string(i));
    }
    switch (c.role) {
      case ClassRole::kForeground: ++num_fg_; break;
      case ClassRole::kBackground: ++num_bg_; break;
      case ClassRole::kUnknown: ++unknown; break;
    }
  }
  if (unknown != 1) {
    throw ValidationError("catalog", "exactly one class must have role unknown");
  }
  for (int i = 0; i < size(); ++i) {
    const ClassRole expected = i < num_bg_    ? ClassRole::kBackground
                               : i == num_bg_ ? ClassRole::kUnknown
                                              : ClassRole::kForeground;
    if (classes_[i].role != expected) {
      throw ValidationError("catalog", "classes must be ordered background, unknown, foreground");
    }
  }
}

ClassCatalog ClassCatalog::standard() {
  return ClassCatalog({
      {"road", 0, ClassRole::kBackground},
      {"sidewalk", 1, ClassRole::kBackground},
      {"background", 2, ClassRole::kBackground},
      {"unknown", 3, ClassRole::kUnknown},
      {"car", 4, ClassRole::kForeground},
      {"person", 5, ClassRole::kForeground},
  });
}

const ClassInfo& ClassCatalog::at(int id) const {
  if (id < 0 || id >= size()) {
    throw ValidationError("catalog", "class id " + std::to_string(id) + " out of range");
  }
  return classes_[id];
}

std::optional<int> ClassCatalog::find(const std::string& name) const {
  for (const auto& c : classes_) {
    if (c.name == name) return c.id;
  }
  return std::nullopt;
}

int ClassCatalog::id_of(const std::string& name) const {
  if (auto id = find(name)) return *id;
  throw ValidationError("catalog", "unknown class name '" + name + "'");
}

int ClassCatalog::foreground_index(int id) const {
  if (!is_foreground(id)) {
    throw ValidationError("catalog", "class " + std::to_string(id) + " is not a foreground class");
  }
  return id - num_bg_ - 1;
}

Raster::Raster(int h, int w, int c, double fill)
    : height(h), width(w), channels(c), data(static_cast<std::size_t>(h) * w * c, fill) {
  if (h < 0 || w < 0 || c < 0) throw ValidationError("raster", "negative dimension");
}

double Raster::cell_mass(int r, int c) const {
  const auto v = cell(r, c);
  return std::accumulate(v.begin(), v.end(), 0.0);
}

std::size_t Mask::count() const {
  std::size_t n = 0;
  for (auto v : m) n += v != 0;
  return n;
}

LabelGrid argmax_labels(const SemanticGrid& g, int unknown_id) {
  LabelGrid out(g.height, g.width);
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      const auto v = g.cell(r, c);
      int best = -1;
      double best_value = 0.0;
      for (int k = 0; k < g.channels; ++k) {
        if (v[k] > best_value) {
          best_value = v[k];
          best = k;
        }
      }
      out.at(r, c) = static_cast<std::uint8_t>(best < 0 ? unknown_id : best);
    }
  }
  return out;
}

SemanticGrid normalize_cells(SemanticGrid g) {
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      const double mass = g.cell_mass(r, c);
      if (mass > 0.0) {
        for (double& v : g.cell(r, c)) v /= mass;
      }
    }
  }
  return g;
}

Mask observed_cells(const SemanticGrid& g) {
  Mask m(g.height, g.width);
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) m.at(r, c) = g.cell_mass(r, c) > 0.0;
  }
  return m;
}

void check_distribution(const SemanticGrid& g, const std::string& stage) {
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      double mass = 0.0;
      for (double v : g.cell(r, c)) {
        if (!std::isfinite(v) || v < 0.0) {
          throw ValidationError(stage, "cell (" + std::to_string(r) + "," + std::to_string(c) +
                                           ") has a negative or non-finite probability");
        }
        mass += v;
      }
      if (mass != 0.0 && std::abs(mass - 1.0) > kMassTolerance) {
        throw ValidationError(stage, "cell (" + std::to_string(r) + "," + std::to_string(c) +
                                         ") is not normalized (sum " + std::to_string(mass) + ")");
      }
    }
  }
}

SemanticGrid one_hot(const LabelGrid& labels, int channels) {
  SemanticGrid g(labels.height, labels.width, channels);
  for (int r = 0; r < labels.height; ++r) {
    for (int c = 0; c < labels.width; ++c) {
      const int l = labels.at(r, c);
      if (l < channels) g.at(r, c, l) = 1.0;
    }
  }
  return g;
}

}  // namespace bevmap
