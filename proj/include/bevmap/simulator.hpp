#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "bevmap/core.hpp"
#include "bevmap/projection.hpp"

namespace bevmap {

enum class Topology { kStraight, kCurved, kTIntersection, kXIntersection };

std::string to_string(Topology t);
Topology parse_topology(const std::string& name);

/// Concrete road layout. Geometry is expressed in the camera ground frame
/// (X right, Z forward, camera at the origin).
struct LayoutParams {
  Topology topology = Topology::kStraight;
  int lanes_per_direction = 1;
  double lane_width = 3.0;
  double curve_radius = 60.0;
  int curve_direction = 1;             // +1 bends right, -1 bends left
  double intersection_distance = 30.0; // Z of the crossing road centerline
  int branch_side = 1;                 // T-intersection: +1 right, -1 left
  bool sidewalk = true;
  double sidewalk_width = 2.0;
  double heading_jitter_deg = 0.0;

  double road_width() const { return 2.0 * lanes_per_direction * lane_width; }
  void validate(const BevConfig& cfg) const;
};

/// Distribution the layout sampler draws from.
struct LayoutPrior {
  std::array<double, 4> topology_weights{1.0, 1.0, 1.0, 1.0};
  int min_lanes = 1;
  int max_lanes = 3;
  double min_lane_width = 2.5;
  double max_lane_width = 3.5;
  double sidewalk_probability = 0.7;
  double min_sidewalk_width = 1.5;
  double max_sidewalk_width = 3.0;
  double max_jitter_deg = 15.0;
  double min_radius_factor = 1.5;  // curve radius in multiples of extent_x
  double max_radius_factor = 4.0;
  double min_intersection_fraction = 0.3;  // of extent_z
  double max_intersection_fraction = 0.7;
};

/// Semantic labels the simulator writes; these are catalog ids (and BEV
/// channels) of the standard catalog.
inline constexpr int kRoadLabel = 0;
inline constexpr int kSidewalkLabel = 1;
inline constexpr int kBackgroundLabel = 2;
inline constexpr int kLayoutChannels = 3;

struct SampledLayout {
  LayoutParams params;
  BevMap map;
};

/// Label of a single ground point (x right, z forward) under a layout.
int layout_label_at(const LayoutParams& params, const BevConfig& cfg, double x, double z);

LayoutParams sample_layout_params(const LayoutPrior& prior, const BevConfig& cfg, std::uint64_t seed);

/// Renders a layout as a fully observed one-hot map over {road, sidewalk,
/// background}. Throws ValidationError if no road cell lands in the grid.
BevMap render_layout(const LayoutParams& params, const BevConfig& cfg);

SampledLayout sample_layout(const LayoutPrior& prior, const BevConfig& cfg, std::uint64_t seed);

struct ObjectSpec {
  double x = 0.0;       // footprint center, meters
  double z = 0.0;
  double length = 4.0;  // along Z
  double width = 1.8;   // along X
  int class_id = 4;
};

struct RenderedObjects {
  BevMap map;
  std::size_t skipped = 0;  // objects entirely outside the extent
};

/// Overwrites object footprints with one-hot foreground labels, in list
/// order. The result has C^bg + 1 + C^fg channels so channel == catalog id.
RenderedObjects render_objects(const BevMap& base, const std::vector<ObjectSpec>& objects, const BevConfig& cfg,
                               const ClassCatalog& catalog);

}  // namespace bevmap
