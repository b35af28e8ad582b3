#include "bevmap/osm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "bevmap/error.hpp"
#include "bevmap/simulator.hpp"

namespace bevmap {
namespace {

constexpr double kEarthRadius = 6378137.0;
constexpr double kDegToRad = std::numbers::pi / 180.0;

struct Segment {
  double ax, az, bx, bz;
  double half_width;
  WayClass cls;
};

double segment_distance(const Segment& s, double x, double z) {
  const double dx = s.bx - s.ax;
  const double dz = s.bz - s.az;
  const double len2 = dx * dx + dz * dz;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((x - s.ax) * dx + (z - s.az) * dz) / len2, 0.0, 1.0);
  return std::hypot(x - (s.ax + t * dx), z - (s.az + t * dz));
}

std::vector<Segment> local_segments(const RoadGraph& graph, const GeoPose& pose, const StrokeWidths& widths) {
  std::vector<Segment> segs;
  for (const auto& way : graph.ways) {
    const double half = 0.5 * widths.width_of(way);
    const auto cls = way.way_class();
    for (std::size_t i = 0; i + 1 < way.node_ids.size(); ++i) {
      const auto& a = graph.node(way.node_ids[i]);
      const auto& b = graph.node(way.node_ids[i + 1]);
      const auto [ax, az] = geo_to_local(a.lat, a.lon, pose);
      const auto [bx, bz] = geo_to_local(b.lat, b.lon, pose);
      segs.push_back({ax, az, bx, bz, half, cls});
    }
  }
  return segs;
}

int label_from_segments(const std::vector<Segment>& segs, double x, double z) {
  int label = kBackgroundLabel;
  for (const auto& s : segs) {
    if (segment_distance(s, x, z) <= s.half_width) {
      if (s.cls == WayClass::kRoad) return kRoadLabel;
      label = kSidewalkLabel;
    }
  }
  return label;
}

double parse_double(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("osm", std::string("bad ") + what + " value '" + s + "'");
  }
}

std::int64_t parse_id(const std::string& s) {
  try {
    std::size_t used = 0;
    const auto v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("osm", "bad id '" + s + "'");
  }
}

}  // namespace

WayClass OsmWay::way_class() const {
  static const std::set<std::string> kPedestrian{"footway", "pedestrian", "path", "steps", "cycleway"};
  if (auto it = tags.find("highway"); it != tags.end() && kPedestrian.contains(it->second)) {
    return WayClass::kSidewalk;
  }
  if (!tags.contains("highway")) return WayClass::kSidewalk;  // footway=* / sidewalk=* only
  return WayClass::kRoad;
}

const OsmNode& RoadGraph::node(std::int64_t id) const {
  auto it = nodes.find(id);
  if (it == nodes.end()) throw ValidationError("osm", "unknown node " + std::to_string(id));
  return it->second;
}

RoadGraph parse_osm(std::string_view xml) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml)};
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw ValidationError("osm", std::string("malformed XML: ") + e.what());
  }
  const auto root = tree.get_child_optional("osm");
  if (!root) throw ValidationError("osm", "missing <osm> root element");

  std::map<std::int64_t, OsmNode> all_nodes;
  RoadGraph graph;
  try {
    for (const auto& [name, child] : *root) {
      if (name == "node") {
        OsmNode n;
        n.id = parse_id(child.get<std::string>("<xmlattr>.id"));
        n.lat = parse_double(child.get<std::string>("<xmlattr>.lat"), "lat");
        n.lon = parse_double(child.get<std::string>("<xmlattr>.lon"), "lon");
        all_nodes[n.id] = n;
      } else if (name == "way") {
        OsmWay w;
        w.id = parse_id(child.get<std::string>("<xmlattr>.id"));
        for (const auto& [tag_name, elem] : child) {
          if (tag_name == "nd") {
            w.node_ids.push_back(parse_id(elem.get<std::string>("<xmlattr>.ref")));
          } else if (tag_name == "tag") {
            w.tags[elem.get<std::string>("<xmlattr>.k")] = elem.get<std::string>("<xmlattr>.v");
          }
        }
        if (w.tags.contains("highway") || w.tags.contains("footway") || w.tags.contains("sidewalk")) {
          graph.ways.push_back(std::move(w));
        }
      }
    }
  } catch (const pt::ptree_error& e) {
    throw ValidationError("osm", std::string("missing attribute: ") + e.what());
  }

  for (const auto& way : graph.ways) {
    if (way.node_ids.size() < 2) {
      throw ValidationError("osm", "way " + std::to_string(way.id) + " has fewer than two nodes");
    }
    for (auto id : way.node_ids) {
      auto it = all_nodes.find(id);
      if (it == all_nodes.end()) {
        throw ValidationError("osm", "way " + std::to_string(way.id) + " references missing node " +
                                         std::to_string(id));
      }
      graph.nodes[id] = it->second;
    }
  }
  return graph;
}

void GeoPose::validate() const {
  if (!(lat >= -90.0 && lat <= 90.0) || !(lon >= -180.0 && lon <= 180.0) || !std::isfinite(heading_deg)) {
    throw ValidationError("osm", "pose latitude/longitude out of range");
  }
}

double StrokeWidths::width_of(const OsmWay& way) const {
  if (way.way_class() == WayClass::kSidewalk) return sidewalk_width;
  int lanes = default_lanes;
  if (auto it = way.tags.find("lanes"); it != way.tags.end()) {
    try {
      lanes = std::max(1, std::stoi(it->second));
    } catch (const std::exception&) {
      lanes = default_lanes;
    }
  }
  return lanes * lane_width;
}

std::pair<double, double> geo_to_local(double lat, double lon, const GeoPose& pose) {
  const double m_per_deg = kEarthRadius * kDegToRad;
  const double east = (lon - pose.lon) * m_per_deg * std::cos(pose.lat * kDegToRad);
  const double north = (lat - pose.lat) * m_per_deg;
  const double h = pose.heading_deg * kDegToRad;
  const double z = east * std::sin(h) + north * std::cos(h);
  const double x = east * std::cos(h) - north * std::sin(h);
  return {x, z};
}

int osm_label_at(const RoadGraph& graph, const GeoPose& pose, const StrokeWidths& widths, double x, double z) {
  return label_from_segments(local_segments(graph, pose, widths), x, z);
}

BevMap rasterize_osm(const RoadGraph& graph, const GeoPose& pose, const BevConfig& cfg,
                     const StrokeWidths& widths) {
  pose.validate();
  cfg.validate();
  const auto segs = local_segments(graph, pose, widths);
  SemanticGrid grid(cfg.rows, cfg.cols, kLayoutChannels);
  for (int r = 0; r < cfg.rows; ++r) {
    for (int c = 0; c < cfg.cols; ++c) {
      grid.at(r, c, label_from_segments(segs, cfg.cell_center_x(c), cfg.cell_center_z(r))) = 1.0;
    }
  }
  return BevMap(std::move(grid));
}

}  // namespace bevmap
