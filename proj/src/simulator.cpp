#include "bevmap/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "bevmap/error.hpp"

namespace bevmap {
namespace {

struct Vec2 {
  double x = 0.0;
  double z = 0.0;
};

double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.z * b.z; }

// Distance from p to the ray origin + t * dir, t in [t0, t1].
double distance_to_segment(Vec2 p, Vec2 origin, Vec2 dir, double t0, double t1) {
  const Vec2 d{p.x - origin.x, p.z - origin.z};
  const double t = std::clamp(dot(d, dir), t0, t1);
  const double ex = d.x - t * dir.x;
  const double ez = d.z - t * dir.z;
  return std::hypot(ex, ez);
}

// Unsigned distance from a ground point to the nearest road centerline.
class Centerlines {
 public:
  Centerlines(const LayoutParams& p, const BevConfig& cfg) : p_(p) {
    const double jitter = p.heading_jitter_deg * std::numbers::pi / 180.0;
    forward_ = {std::sin(jitter), std::cos(jitter)};
    right_ = {std::cos(jitter), -std::sin(jitter)};
    reach_ = 4.0 * std::hypot(cfg.extent_x, cfg.extent_z);
    crossing_ = {forward_.x * p.intersection_distance, forward_.z * p.intersection_distance};
  }

  double distance(Vec2 q) const {
    const Vec2 origin{0.0, 0.0};
    switch (p_.topology) {
      case Topology::kStraight:
        return distance_to_segment(q, origin, forward_, -reach_, reach_);
      case Topology::kCurved: {
        // Arc tangent to the forward axis at the camera.
        const double s = p_.curve_direction >= 0 ? 1.0 : -1.0;
        const Vec2 center{s * p_.curve_radius * right_.x, s * p_.curve_radius * right_.z};
        return std::abs(std::hypot(q.x - center.x, q.z - center.z) - p_.curve_radius);
      }
      case Topology::kTIntersection: {
        const double main = distance_to_segment(q, origin, forward_, -reach_, reach_);
        const Vec2 side{p_.branch_side * right_.x, p_.branch_side * right_.z};
        return std::min(main, distance_to_segment(q, crossing_, side, 0.0, reach_));
      }
      case Topology::kXIntersection: {
        const double main = distance_to_segment(q, origin, forward_, -reach_, reach_);
        return std::min(main, distance_to_segment(q, crossing_, right_, -reach_, reach_));
      }
    }
    return reach_;
  }

 private:
  const LayoutParams& p_;
  Vec2 forward_;
  Vec2 right_;
  Vec2 crossing_;
  double reach_ = 0.0;
};

int classify(const LayoutParams& p, const Centerlines& lines, double x, double z) {
  const double d = lines.distance({x, z});
  const double road_half = 0.5 * p.road_width();
  if (d <= road_half) return kRoadLabel;
  if (p.sidewalk && d <= road_half + p.sidewalk_width) return kSidewalkLabel;
  return kBackgroundLabel;
}

}  // namespace

std::string to_string(Topology t) {
  switch (t) {
    case Topology::kStraight: return "straight";
    case Topology::kCurved: return "curved";
    case Topology::kTIntersection: return "t-intersection";
    case Topology::kXIntersection: return "x-intersection";
  }
  return "straight";
}

Topology parse_topology(const std::string& name) {
  for (auto t : {Topology::kStraight, Topology::kCurved, Topology::kTIntersection, Topology::kXIntersection}) {
    if (to_string(t) == name) return t;
  }
  throw ValidationError("simulate", "unknown topology '" + name + "'");
}

void LayoutParams::validate(const BevConfig& cfg) const {
  if (lanes_per_direction < 1) throw ValidationError("simulate", "at least one lane per direction is required");
  if (!(lane_width > 0.0)) throw ValidationError("simulate", "lane width must be positive");
  if (sidewalk && !(sidewalk_width > 0.0)) throw ValidationError("simulate", "sidewalk width must be positive");
  if (topology == Topology::kCurved && !(curve_radius > cfg.extent_x)) {
    throw ValidationError("simulate", "curve radius must exceed the lateral extent");
  }
  if (!std::isfinite(heading_jitter_deg) || !std::isfinite(intersection_distance)) {
    throw ValidationError("simulate", "non-finite layout parameter");
  }
}

LayoutParams sample_layout_params(const LayoutPrior& prior, const BevConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  double total = 0.0;
  for (double w : prior.topology_weights) {
    if (w < 0.0) throw ValidationError("simulate", "negative topology weight");
    total += w;
  }
  if (!(total > 0.0)) throw ValidationError("simulate", "prior assigns zero probability to every topology");
  if (prior.min_lanes < 1 || prior.max_lanes < prior.min_lanes) {
    throw ValidationError("simulate", "invalid lane range");
  }

  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  LayoutParams p;
  std::discrete_distribution<int> topo(prior.topology_weights.begin(), prior.topology_weights.end());
  p.topology = static_cast<Topology>(topo(rng));
  p.lanes_per_direction = std::uniform_int_distribution<int>(prior.min_lanes, prior.max_lanes)(rng);
  p.lane_width = uniform(prior.min_lane_width, prior.max_lane_width);
  p.sidewalk = std::bernoulli_distribution(prior.sidewalk_probability)(rng);
  p.sidewalk_width = uniform(prior.min_sidewalk_width, prior.max_sidewalk_width);
  p.heading_jitter_deg = uniform(-prior.max_jitter_deg, prior.max_jitter_deg);
  p.curve_radius = cfg.extent_x * uniform(prior.min_radius_factor, prior.max_radius_factor);
  p.curve_direction = std::bernoulli_distribution(0.5)(rng) ? 1 : -1;
  p.branch_side = std::bernoulli_distribution(0.5)(rng) ? 1 : -1;
  p.intersection_distance =
      cfg.extent_z * uniform(prior.min_intersection_fraction, prior.max_intersection_fraction);
  return p;
}

int layout_label_at(const LayoutParams& params, const BevConfig& cfg, double x, double z) {
  return classify(params, Centerlines(params, cfg), x, z);
}

BevMap render_layout(const LayoutParams& params, const BevConfig& cfg) {
  cfg.validate();
  params.validate(cfg);
  const Centerlines lines(params, cfg);

  SemanticGrid grid(cfg.rows, cfg.cols, kLayoutChannels);
  bool any_road = false;
  for (int r = 0; r < cfg.rows; ++r) {
    for (int c = 0; c < cfg.cols; ++c) {
      const int label = classify(params, lines, cfg.cell_center_x(c), cfg.cell_center_z(r));
      any_road = any_road || label == kRoadLabel;
      grid.at(r, c, label) = 1.0;
    }
  }
  if (!any_road) throw ValidationError("simulate", "layout leaves no road cell inside the grid");
  return BevMap(std::move(grid));
}

SampledLayout sample_layout(const LayoutPrior& prior, const BevConfig& cfg, std::uint64_t seed) {
  auto params = sample_layout_params(prior, cfg, seed);
  auto map = render_layout(params, cfg);
  return {params, std::move(map)};
}

RenderedObjects render_objects(const BevMap& base, const std::vector<ObjectSpec>& objects, const BevConfig& cfg,
                               const ClassCatalog& catalog) {
  if (base.grid.height != cfg.rows || base.grid.width != cfg.cols) {
    throw ValidationError("render-objects", "base map does not match the BEV config");
  }
  if (base.observed.count() != base.observed.m.size()) {
    throw ValidationError("render-objects", "base map must be fully observed");
  }
  RenderedObjects out;
  const int channels = std::max(base.grid.channels, catalog.size());
  SemanticGrid grid(cfg.rows, cfg.cols, channels);
  for (int r = 0; r < cfg.rows; ++r) {
    for (int c = 0; c < cfg.cols; ++c) {
      std::ranges::copy(base.grid.cell(r, c), grid.cell(r, c).begin());
    }
  }
  for (const auto& obj : objects) {
    if (!catalog.is_foreground(obj.class_id)) {
      throw ValidationError("render-objects", "object class " + std::to_string(obj.class_id) + " is not foreground");
    }
    const auto rect = footprint_rect(obj.x, obj.z, obj.length, obj.width, cfg);
    if (!rect) {
      ++out.skipped;
      continue;
    }
    for (int r = rect->row_begin; r < rect->row_end; ++r) {
      for (int c = rect->col_begin; c < rect->col_end; ++c) {
        auto cell = grid.cell(r, c);
        std::ranges::fill(cell, 0.0);
        cell[obj.class_id] = 1.0;
      }
    }
  }
  out.map = BevMap(std::move(grid));
  return out;
}

}  // namespace bevmap
