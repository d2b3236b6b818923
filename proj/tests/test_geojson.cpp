#include <doctest.h>

#include "stainpipe/error.hpp"
#include "stainpipe/geojson.hpp"

using namespace stainpipe;

namespace {

const char* kFeatureCollection = R"({
  "type": "FeatureCollection",
  "features": [
    {
      "type": "Feature",
      "properties": {"name": "core_a"},
      "geometry": {
        "type": "Polygon",
        "coordinates": [[[10, 20], [110, 20], [110, 90], [10, 90], [10, 20]]]
      }
    },
    {
      "type": "Feature",
      "properties": {"classification": {"name": "tumor"}},
      "geometry": {
        "type": "Polygon",
        "coordinates": [
          [[0, 0], [50, 0], [50, 50], [0, 50], [0, 0]],
          [[10, 10], [20, 10], [20, 20], [10, 20], [10, 10]]
        ]
      }
    }
  ]
})";

}  // namespace

TEST_CASE("feature collection parses in file order with labels") {
  const auto rois = parse_roi(kFeatureCollection);
  REQUIRE(rois.size() == 2);

  CHECK(rois[0].label == "core_a");
  // closing vertex dropped, closure implicit
  REQUIRE(rois[0].exterior.size() == 4);
  CHECK(rois[0].exterior[0].x == 10);
  CHECK(rois[0].exterior[0].y == 20);
  CHECK(rois[0].exterior[3].x == 10);
  CHECK(rois[0].exterior[3].y == 90);
  CHECK(rois[0].holes.empty());

  CHECK(rois[1].label == "tumor");
  REQUIRE(rois[1].holes.size() == 1);
  CHECK(rois[1].holes[0].size() == 4);
}

TEST_CASE("bare polygon and feature roots parse") {
  const auto poly = parse_roi(
      R"({"type": "Polygon", "coordinates": [[[1, 2], [9, 2], [5, 8]]]})");
  REQUIRE(poly.size() == 1);
  CHECK(poly[0].label == "roi_0");
  CHECK(poly[0].exterior.size() == 3);

  const auto feature = parse_roi(
      R"({"type": "Feature", "properties": {"name": "x"},
          "geometry": {"type": "Polygon",
                       "coordinates": [[[1, 1], [4, 1], [4, 4]]]}})");
  REQUIRE(feature.size() == 1);
  CHECK(feature[0].label == "x");
}

TEST_CASE("multipolygon splits into labeled parts") {
  const auto rois = parse_roi(R"({
    "type": "Feature",
    "properties": {"name": "pair"},
    "geometry": {
      "type": "MultiPolygon",
      "coordinates": [
        [[[0, 0], [10, 0], [10, 10]]],
        [[[20, 0], [30, 0], [30, 10]]]
      ]
    }
  })");
  REQUIRE(rois.size() == 2);
  CHECK(rois[0].label == "pair_0");
  CHECK(rois[1].label == "pair_1");
  CHECK(rois[1].exterior[0].x == 20);
}

TEST_CASE("label falls back to the feature index") {
  const auto rois = parse_roi(R"({
    "type": "FeatureCollection",
    "features": [
      {"type": "Feature", "properties": {},
       "geometry": {"type": "Polygon", "coordinates": [[[0,0],[5,0],[5,5]]]}},
      {"type": "Feature",
       "geometry": {"type": "Polygon", "coordinates": [[[9,9],[12,9],[12,12]]]}}
    ]
  })");
  REQUIRE(rois.size() == 2);
  CHECK(rois[0].label == "roi_0");
  CHECK(rois[1].label == "roi_1");
}

TEST_CASE("features without geometry are skipped, not fatal") {
  const auto rois = parse_roi(R"({
    "type": "FeatureCollection",
    "features": [
      {"type": "Feature", "properties": {"name": "n"}, "geometry": null},
      {"type": "Feature",
       "geometry": {"type": "Polygon", "coordinates": [[[0,0],[5,0],[5,5]]]}}
    ]
  })");
  REQUIRE(rois.size() == 1);
  CHECK(rois[0].label == "roi_1");
}

TEST_CASE("malformed inputs raise typed parse errors") {
  const auto code_of = [](const char* text) {
    try {
      parse_roi(text);
    } catch (const PipelineError& e) {
      return e.code();
    }
    return errc::io_error;  // sentinel: no throw
  };

  CHECK(code_of("not json at all") == errc::parse_error);
  CHECK(code_of(R"({"no_type": 1})") == errc::parse_error);
  CHECK(code_of(R"({"type": "Polygon", "coordinates": [[[0,0],[1,1]]]})") ==
        errc::parse_error);  // too few vertices
  CHECK(code_of(R"({"type": "Polygon", "coordinates": [[[0,0],[-1,2],[5,5]]]})") ==
        errc::parse_error);  // negative pixel coordinates
  CHECK(code_of(R"({"type": "Point", "coordinates": [1, 2]})") ==
        errc::unsupported_geometry);
  CHECK(code_of(R"({"type": "Feature", "geometry":
                    {"type": "LineString", "coordinates": [[0,0],[1,1]]}})") ==
        errc::unsupported_geometry);
}

TEST_CASE("bounding box spans all exterior vertices") {
  const auto rois = parse_roi(
      R"({"type": "Polygon", "coordinates": [[[3, 7], [21, 2], [15, 30]]]})");
  double min_x, min_y, max_x, max_y;
  rois[0].bounding_box(min_x, min_y, max_x, max_y);
  CHECK(min_x == 3);
  CHECK(min_y == 2);
  CHECK(max_x == 21);
  CHECK(max_y == 30);
}
