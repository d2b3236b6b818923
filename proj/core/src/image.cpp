#include "stainpipe/image.hpp"

#include <algorithm>
#include <cmath>

#include "stainpipe/error.hpp"

namespace stainpipe {

const char* stain_state_name(StainState state) {
  switch (state) {
    case StainState::unstained: return "unstained";
    case StainState::stained: return "stained";
    case StainState::virtual_destained: return "virtual_destained";
    case StainState::virtual_stained: return "virtual_stained";
    case StainState::virtual_restained: return "virtual_restained";
  }
  return "unknown";
}

StainState stain_state_from_name(const std::string& name) {
  if (name == "unstained") return StainState::unstained;
  if (name == "stained") return StainState::stained;
  if (name == "virtual_destained") return StainState::virtual_destained;
  if (name == "virtual_stained") return StainState::virtual_stained;
  if (name == "virtual_restained") return StainState::virtual_restained;
  raise(errc::parse_error, "unknown stain state '" + name + "'");
}

CoreImage CoreImage::filled(int width, int height, Rgb fill) {
  CoreImage img;
  img.width = width;
  img.height = height;
  img.pixels.resize(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
    img.pixels[i] = fill.r;
    img.pixels[i + 1] = fill.g;
    img.pixels[i + 2] = fill.b;
  }
  return img;
}

double round_half_even(double v) {
  const double floor_v = std::floor(v);
  const double frac = v - floor_v;
  if (frac > 0.5) return floor_v + 1.0;
  if (frac < 0.5) return floor_v;
  // exact tie: pick the even neighbour
  return std::fmod(floor_v, 2.0) == 0.0 ? floor_v : floor_v + 1.0;
}

std::uint8_t round_to_u8(double v) {
  v = std::clamp(v, 0.0, 255.0);
  return static_cast<std::uint8_t>(round_half_even(v));
}

CoreImage pad_to(const CoreImage& src, int width, int height, Rgb fill) {
  if (width < src.width || height < src.height)
    raise(errc::range_error, "pad_to cannot shrink an image");
  if (width == src.width && height == src.height) return src;
  CoreImage out = CoreImage::filled(width, height, fill);
  out.mpp = src.mpp;
  out.core_id = src.core_id;
  out.stain_state = src.stain_state;
  for (int y = 0; y < src.height; ++y) {
    const auto* in_row = &src.pixels[src.offset(0, y, 0)];
    auto* out_row = &out.pixels[out.offset(0, y, 0)];
    std::copy(in_row, in_row + static_cast<std::size_t>(src.width) * 3, out_row);
  }
  return out;
}

void pad_to_common(CoreImage& a, CoreImage& b, Rgb fill) {
  const int w = std::max(a.width, b.width);
  const int h = std::max(a.height, b.height);
  a = pad_to(a, w, h, fill);
  b = pad_to(b, w, h, fill);
}

}  // namespace stainpipe
