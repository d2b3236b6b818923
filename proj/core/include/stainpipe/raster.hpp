#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "stainpipe/image.hpp"

namespace stainpipe {

// Sequential row reader over a raster file. Rows come back as interleaved
// 8-bit RGB regardless of the on-disk layout (gray expanded, alpha dropped).
class RasterReader {
public:
  virtual ~RasterReader() = default;

  int width() const { return width_; }
  int height() const { return height_; }
  std::optional<double> mpp() const { return mpp_; }

  // Reads `count` rows into dst (count * width * 3 bytes), advancing the
  // cursor. Rows can only be read forward, once.
  virtual void read_rows(std::uint8_t* dst, int count) = 0;

protected:
  int width_ = 0;
  int height_ = 0;
  std::optional<double> mpp_;
};

// Opens a PNG or baseline TIFF file, sniffing the format from its magic
// bytes. Unsupported bit depths or color models raise a format error.
std::unique_ptr<RasterReader> open_raster(const std::string& path);

// Raster file metadata plus the resolution used downstream. `mpp` is taken
// from the file when declared there, otherwise it must come from config.
struct RasterSource {
  std::string path;
  int width = 0;
  int height = 0;
  double mpp = 0.0;  // 0 when unknown
};

RasterSource probe_raster(const std::string& path,
                          std::optional<double> mpp_override = std::nullopt);

// Loads a full raster into a CoreImage.
CoreImage load_core_image(const std::string& path,
                          std::optional<double> mpp = std::nullopt);

// Writes 8-bit RGB PNG. Encoding parameters are fixed so identical pixels
// produce identical files.
void save_png(const CoreImage& image, const std::string& path);

}  // namespace stainpipe
