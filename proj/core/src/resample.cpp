#include "stainpipe/resample.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "stainpipe/error.hpp"

namespace stainpipe {

namespace {

struct Tap {
  int index;
  double weight;
};

// Box-filter taps for one output coordinate: source span [o*r, (o+1)*r),
// weighted by overlap length. Weights sum to r.
std::vector<std::vector<Tap>> box_taps(int src_dim, int out_dim) {
  const double r = static_cast<double>(src_dim) / out_dim;
  std::vector<std::vector<Tap>> taps(out_dim);
  for (int o = 0; o < out_dim; ++o) {
    const double start = o * r;
    const double end = std::min((o + 1) * r, static_cast<double>(src_dim));
    int i0 = static_cast<int>(std::floor(start));
    int i1 = static_cast<int>(std::ceil(end));
    i1 = std::min(i1, src_dim);
    for (int i = i0; i < i1; ++i) {
      const double w = std::min(end, i + 1.0) - std::max(start, double(i));
      if (w > 0.0) taps[o].push_back({i, w});
    }
  }
  return taps;
}

}  // namespace

CoreImage downsample_to_mpp(const CoreImage& core, double target_mpp) {
  if (core.mpp <= 0.0)
    raise(errc::range_error, "image has no resolution metadata");
  if (target_mpp < core.mpp)
    raise(errc::upsample_unsupported,
          "target mpp " + std::to_string(target_mpp) + " is finer than source " +
              std::to_string(core.mpp) + "; only downscaling is supported");

  const double s = core.mpp / target_mpp;
  const int out_h = std::max(1, static_cast<int>(round_half_even(core.height * s)));
  const int out_w = std::max(1, static_cast<int>(round_half_even(core.width * s)));

  CoreImage out;
  out.width = out_w;
  out.height = out_h;
  out.pixels.resize(out.pixel_count() * 3);
  out.mpp = target_mpp;
  out.core_id = core.core_id;
  out.stain_state = core.stain_state;

  const auto taps_x = box_taps(core.width, out_w);
  const auto taps_y = box_taps(core.height, out_h);
  const double rx = static_cast<double>(core.width) / out_w;
  const double ry = static_cast<double>(core.height) / out_h;
  const double inv_area = 1.0 / (rx * ry);

  // horizontal pass, then vertical, in doubles
  std::vector<double> mid(static_cast<std::size_t>(core.height) * out_w * 3);
  for (int y = 0; y < core.height; ++y) {
    for (int ox = 0; ox < out_w; ++ox) {
      double acc[3] = {0.0, 0.0, 0.0};
      for (const Tap& t : taps_x[ox]) {
        const std::size_t s_off = core.offset(t.index, y, 0);
        acc[0] += t.weight * core.pixels[s_off];
        acc[1] += t.weight * core.pixels[s_off + 1];
        acc[2] += t.weight * core.pixels[s_off + 2];
      }
      const std::size_t m = (static_cast<std::size_t>(y) * out_w + ox) * 3;
      mid[m] = acc[0];
      mid[m + 1] = acc[1];
      mid[m + 2] = acc[2];
    }
  }
  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      double acc[3] = {0.0, 0.0, 0.0};
      for (const Tap& t : taps_y[oy]) {
        const std::size_t m = (static_cast<std::size_t>(t.index) * out_w + ox) * 3;
        acc[0] += t.weight * mid[m];
        acc[1] += t.weight * mid[m + 1];
        acc[2] += t.weight * mid[m + 2];
      }
      const std::size_t o = out.offset(ox, oy, 0);
      out.pixels[o] = round_to_u8(acc[0] * inv_area);
      out.pixels[o + 1] = round_to_u8(acc[1] * inv_area);
      out.pixels[o + 2] = round_to_u8(acc[2] * inv_area);
    }
  }
  return out;
}

}  // namespace stainpipe
