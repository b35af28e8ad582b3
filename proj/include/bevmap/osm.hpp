#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "bevmap/projection.hpp"

namespace bevmap {

struct OsmNode {
  std::int64_t id = 0;
  double lat = 0.0;
  double lon = 0.0;
};

enum class WayClass { kRoad, kSidewalk };

struct OsmWay {
  std::int64_t id = 0;
  std::vector<std::int64_t> node_ids;
  std::map<std::string, std::string> tags;

  WayClass way_class() const;
};

/// Road-relevant subset of an OSM document. Every node id referenced by a
/// way resolves in `nodes`.
struct RoadGraph {
  std::map<std::int64_t, OsmNode> nodes;
  std::vector<OsmWay> ways;

  const OsmNode& node(std::int64_t id) const;
};

/// Keeps ways tagged highway=*, footway=* or sidewalk=* and the nodes they
/// reference. Throws ValidationError (stage "osm") on malformed XML or
/// dangling node references.
RoadGraph parse_osm(std::string_view xml);

struct GeoPose {
  double lat = 0.0;
  double lon = 0.0;
  double heading_deg = 0.0;  // clockwise from north

  void validate() const;
};

struct StrokeWidths {
  double lane_width = 3.5;
  int default_lanes = 2;
  double sidewalk_width = 2.0;

  double width_of(const OsmWay& way) const;
};

/// Local equirectangular projection about `pose`, rotated so the heading is
/// +Z. Returns camera-ground-frame meters (x right, z forward).
std::pair<double, double> geo_to_local(double lat, double lon, const GeoPose& pose);

/// Label of a ground point: road wins over sidewalk, background otherwise.
int osm_label_at(const RoadGraph& graph, const GeoPose& pose, const StrokeWidths& widths, double x, double z);

/// B^osm: fully observed one-hot {road, sidewalk, background} map.
BevMap rasterize_osm(const RoadGraph& graph, const GeoPose& pose, const BevConfig& cfg,
                     const StrokeWidths& widths = {});

}  // namespace bevmap
