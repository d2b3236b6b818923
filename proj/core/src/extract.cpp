#include "stainpipe/extract.hpp"

#include <algorithm>
#include <cmath>

#include "stainpipe/error.hpp"

namespace stainpipe {

namespace {

void ring_crossings(const std::vector<Point2d>& ring, double scan_y,
                    std::vector<double>& out) {
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2d& a = ring[i];
    const Point2d& b = ring[(i + 1) % n];
    // half-open span rule keeps vertices from double-counting
    if ((a.y > scan_y) == (b.y > scan_y)) continue;
    const double t = (scan_y - a.y) / (b.y - a.y);
    out.push_back(a.x + t * (b.x - a.x));
  }
}

}  // namespace

std::vector<double> scanline_crossings(const RoiPolygon& roi, double scan_y) {
  std::vector<double> xs;
  ring_crossings(roi.exterior, scan_y, xs);
  for (const auto& hole : roi.holes) ring_crossings(hole, scan_y, xs);
  std::sort(xs.begin(), xs.end());
  return xs;
}

bool point_in_polygon(const RoiPolygon& roi, double x, double y) {
  const auto xs = scanline_crossings(roi, y);
  // inside iff an odd number of crossings are strictly to the right
  const auto first_right = std::upper_bound(xs.begin(), xs.end(), x);
  return (xs.end() - first_right) % 2 == 1;
}

CoreImage extract_core(const RasterSource& source, const RoiPolygon& roi,
                       Rgb fill, int strip_height) {
  if (strip_height < 1) raise(errc::range_error, "strip_height must be >= 1");
  if (roi.exterior.size() < 3)
    raise(errc::empty_roi, "polygon has fewer than 3 vertices");

  double min_x, min_y, max_x, max_y;
  roi.bounding_box(min_x, min_y, max_x, max_y);

  const int x0 = std::max(0, static_cast<int>(std::floor(min_x)));
  const int y0 = std::max(0, static_cast<int>(std::floor(min_y)));
  const int x1 = std::min(source.width, static_cast<int>(std::ceil(max_x)));
  const int y1 = std::min(source.height, static_cast<int>(std::ceil(max_y)));
  if (x0 >= x1 || y0 >= y1)
    raise(errc::empty_roi, "roi lies entirely outside the raster bounds");

  const int out_w = x1 - x0;
  const int out_h = y1 - y0;
  CoreImage out = CoreImage::filled(out_w, out_h, fill);
  out.mpp = source.mpp;

  auto reader = open_raster(source.path);
  if (reader->width() != source.width || reader->height() != source.height)
    raise(errc::io_error, "declared raster dimensions do not match '" +
                              source.path + "'");

  const std::size_t row_bytes = static_cast<std::size_t>(source.width) * 3;
  std::vector<std::uint8_t> strip(row_bytes * static_cast<std::size_t>(
                                                  std::min(strip_height, y1)));
  int next_row = 0;  // first raster row not yet read
  while (next_row < y1) {
    const int rows = std::min(strip_height, y1 - next_row);
    reader->read_rows(strip.data(), rows);
    const int strip_top = next_row;
    next_row += rows;
    if (next_row <= y0) continue;  // strip entirely above the roi box

    for (int y = std::max(strip_top, y0); y < next_row; ++y) {
      const std::uint8_t* src_row =
          strip.data() + static_cast<std::size_t>(y - strip_top) * row_bytes;
      std::uint8_t* dst_row = &out.pixels[out.offset(0, y - y0, 0)];
      const auto xs = scanline_crossings(roi, y + 0.5);
      if (xs.empty()) continue;
      // sweep pixel centers left to right; parity of crossings to the right
      std::size_t k = 0;  // crossings with xs[k] <= center
      for (int x = x0; x < x1; ++x) {
        const double cx = x + 0.5;
        while (k < xs.size() && xs[k] <= cx) ++k;
        if ((xs.size() - k) % 2 == 1) {
          const std::size_t s = static_cast<std::size_t>(x) * 3;
          const std::size_t d = static_cast<std::size_t>(x - x0) * 3;
          dst_row[d] = src_row[s];
          dst_row[d + 1] = src_row[s + 1];
          dst_row[d + 2] = src_row[s + 2];
        }
      }
    }
  }
  return out;
}

}  // namespace stainpipe
