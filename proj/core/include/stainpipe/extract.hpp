#pragma once

#include <vector>

#include "stainpipe/geojson.hpp"
#include "stainpipe/image.hpp"
#include "stainpipe/raster.hpp"

namespace stainpipe {

inline constexpr int kDefaultStripHeight = 10000;

// Crops the polygon's bounding box out of a raster file, masking pixels
// outside the polygon to `fill`. The file is streamed in horizontal strips
// of at most `strip_height` rows, so peak memory is O(strip * width); the
// result is identical for every strip height.
//
// Pixel (x, y) is inside when its center (x + 0.5, y + 0.5) satisfies the
// even-odd rule over the exterior ring and all holes.
CoreImage extract_core(const RasterSource& source, const RoiPolygon& roi,
                       Rgb fill = kWhite, int strip_height = kDefaultStripHeight);

// Even-odd point-in-polygon coverage of one scanline. Returns the sorted
// crossing x-coordinates of the polygon edges with the horizontal line
// y = scan_y; a point is inside iff an odd number of crossings lie to its
// right. Exposed for the rasterizer and reused by the grid mask test rig.
std::vector<double> scanline_crossings(const RoiPolygon& roi, double scan_y);

bool point_in_polygon(const RoiPolygon& roi, double x, double y);

}  // namespace stainpipe
