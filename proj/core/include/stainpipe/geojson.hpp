#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace stainpipe {

struct Point2d {
  double x = 0.0;
  double y = 0.0;
};

// One annotated region at source-level pixel coordinates. The exterior ring
// is stored open (no repeated closing vertex); closure is implicit.
struct RoiPolygon {
  std::vector<Point2d> exterior;
  std::vector<std::vector<Point2d>> holes;
  std::string label;

  void bounding_box(double& min_x, double& min_y, double& max_x,
                    double& max_y) const;
};

// Parses GeoJSON text into polygons, preserving coordinates and file order.
// Accepts FeatureCollection, Feature, Polygon and MultiPolygon roots.
// Feature "name" / "classification" properties become labels; otherwise
// labels are index-based ("roi_0", "roi_1", ...).
std::vector<RoiPolygon> parse_roi(std::string_view geojson_text);

std::vector<RoiPolygon> load_roi_file(const std::string& path);

}  // namespace stainpipe
