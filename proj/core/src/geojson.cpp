#include "stainpipe/geojson.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "stainpipe/error.hpp"

namespace stainpipe {

using nlohmann::json;

void RoiPolygon::bounding_box(double& min_x, double& min_y, double& max_x,
                              double& max_y) const {
  min_x = min_y = std::numeric_limits<double>::max();
  max_x = max_y = std::numeric_limits<double>::lowest();
  for (const auto& p : exterior) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
}

namespace {

std::vector<Point2d> parse_ring(const json& ring) {
  if (!ring.is_array() || ring.size() < 3)
    raise(errc::parse_error, "polygon ring needs at least 3 vertices");
  std::vector<Point2d> out;
  out.reserve(ring.size());
  for (const auto& coord : ring) {
    if (!coord.is_array() || coord.size() < 2)
      raise(errc::parse_error, "ring coordinate is not an [x, y] pair");
    Point2d p{coord[0].get<double>(), coord[1].get<double>()};
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x < 0.0 || p.y < 0.0)
      raise(errc::parse_error, "ring coordinates must be finite and non-negative");
    out.push_back(p);
  }
  // GeoJSON repeats the first vertex at the end; closure here is implicit.
  if (out.size() > 3 && out.front().x == out.back().x &&
      out.front().y == out.back().y) {
    out.pop_back();
  }
  if (out.size() < 3)
    raise(errc::parse_error, "polygon ring needs at least 3 distinct vertices");
  return out;
}

RoiPolygon parse_polygon_rings(const json& rings, std::string label) {
  if (!rings.is_array() || rings.empty())
    raise(errc::parse_error, "Polygon has no coordinate rings");
  RoiPolygon poly;
  poly.label = std::move(label);
  poly.exterior = parse_ring(rings[0]);
  for (std::size_t i = 1; i < rings.size(); ++i)
    poly.holes.push_back(parse_ring(rings[i]));
  return poly;
}

// QuPath writes labels under properties.name or properties.classification.name.
std::string feature_label(const json& feature, std::size_t index) {
  if (feature.contains("properties") && feature["properties"].is_object()) {
    const auto& props = feature["properties"];
    if (props.contains("name") && props["name"].is_string())
      return props["name"].get<std::string>();
    if (props.contains("classification")) {
      const auto& cls = props["classification"];
      if (cls.is_string()) return cls.get<std::string>();
      if (cls.is_object() && cls.contains("name") && cls["name"].is_string())
        return cls["name"].get<std::string>();
    }
  }
  return "roi_" + std::to_string(index);
}

void append_geometry(const json& geometry, const std::string& label,
                     std::vector<RoiPolygon>& out) {
  if (!geometry.is_object() || !geometry.contains("type"))
    raise(errc::parse_error, "geometry object has no type");
  const std::string type = geometry["type"].get<std::string>();
  if (type == "Polygon") {
    out.push_back(parse_polygon_rings(geometry.at("coordinates"), label));
  } else if (type == "MultiPolygon") {
    const auto& polys = geometry.at("coordinates");
    if (!polys.is_array())
      raise(errc::parse_error, "MultiPolygon coordinates is not an array");
    std::size_t part = 0;
    for (const auto& rings : polys) {
      std::string part_label =
          polys.size() == 1 ? label : label + "_" + std::to_string(part);
      out.push_back(parse_polygon_rings(rings, part_label));
      ++part;
    }
  } else {
    raise(errc::unsupported_geometry,
          "geometry type '" + type + "' is not supported (Polygon/MultiPolygon only)");
  }
}

}  // namespace

std::vector<RoiPolygon> parse_roi(std::string_view geojson_text) {
  json root;
  try {
    root = json::parse(geojson_text);
  } catch (const json::parse_error& e) {
    raise(errc::parse_error,
          "malformed GeoJSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!root.is_object() || !root.contains("type"))
    raise(errc::parse_error, "GeoJSON root has no type");

  std::vector<RoiPolygon> out;
  const std::string type = root["type"].get<std::string>();
  if (type == "FeatureCollection") {
    const auto& features = root.at("features");
    if (!features.is_array())
      raise(errc::parse_error, "FeatureCollection features is not an array");
    std::size_t index = 0;
    for (const auto& feature : features) {
      if (!feature.contains("geometry") || feature["geometry"].is_null()) {
        ++index;
        continue;
      }
      append_geometry(feature["geometry"], feature_label(feature, index), out);
      ++index;
    }
  } else if (type == "Feature") {
    append_geometry(root.at("geometry"), feature_label(root, 0), out);
  } else {
    append_geometry(root, "roi_0", out);
  }
  return out;
}

std::vector<RoiPolygon> load_roi_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(errc::io_error, "cannot open ROI file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_roi(buf.str());
}

}  // namespace stainpipe
