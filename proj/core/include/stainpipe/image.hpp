#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace stainpipe {

enum class StainState {
  unstained,
  stained,
  virtual_destained,
  virtual_stained,
  virtual_restained,
};

const char* stain_state_name(StainState state);
StainState stain_state_from_name(const std::string& name);

struct Rgb {
  std::uint8_t r = 255;
  std::uint8_t g = 255;
  std::uint8_t b = 255;
};

inline constexpr Rgb kWhite{255, 255, 255};
inline constexpr Rgb kBlack{0, 0, 0};

// 8-bit interleaved RGB raster of one biopsy core, with resolution metadata.
// Metrics read pixels through normalized(), a [0,1] view of the same buffer.
struct CoreImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, 3 channels per pixel
  double mpp = 0.0;                  // microns per pixel
  std::string core_id;
  StainState stain_state = StainState::stained;

  static CoreImage filled(int width, int height, Rgb fill);

  bool empty() const { return width <= 0 || height <= 0; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  std::size_t offset(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width + x) * 3 + c;
  }
  std::uint8_t at(int x, int y, int c) const { return pixels[offset(x, y, c)]; }
  std::uint8_t& at(int x, int y, int c) { return pixels[offset(x, y, c)]; }
  double normalized(int x, int y, int c) const { return at(x, y, c) / 255.0; }

  void set(int x, int y, Rgb v) {
    auto o = offset(x, y, 0);
    pixels[o] = v.r;
    pixels[o + 1] = v.g;
    pixels[o + 2] = v.b;
  }
};

// Rec. 601 luma on 8-bit values, result in [0, 255].
inline double rec601_luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

// Round half to even; ties like 127.5 go to 128, 126.5 to 126.
double round_half_even(double v);

// Clamp to [0, 255] then round half to even.
std::uint8_t round_to_u8(double v);

// Grow an image to (width, height) by filling new right/bottom area.
CoreImage pad_to(const CoreImage& src, int width, int height, Rgb fill);

// Pad both images to their common bounding dimensions.
void pad_to_common(CoreImage& a, CoreImage& b, Rgb fill);

}  // namespace stainpipe
