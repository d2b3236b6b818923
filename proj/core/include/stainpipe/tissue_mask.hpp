#pragma once

#include <cstdint>
#include <vector>

#include "stainpipe/image.hpp"

namespace stainpipe {

enum class MaskStrategy { luminance_threshold, otsu };

inline constexpr double kDefaultTissueThreshold = 0.88;

// Boolean tissue-vs-background raster. Gates histogram estimation and the
// masked intensity statistics.
struct TissueMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;  // 1 = tissue
  double tissue_fraction = 0.0;
  MaskStrategy strategy = MaskStrategy::luminance_threshold;
  double threshold = kDefaultTissueThreshold;  // normalized luminance

  bool tissue(int x, int y) const {
    return bits[static_cast<std::size_t>(y) * width + x] != 0;
  }
  std::size_t tissue_count() const;
};

// Marks a pixel as tissue when its normalized rec601 luminance falls below
// the threshold. With `otsu`, the threshold is derived from the luminance
// histogram instead. An all-background mask is a valid result.
TissueMask tissue_mask(const CoreImage& core,
                       MaskStrategy strategy = MaskStrategy::luminance_threshold,
                       double threshold = kDefaultTissueThreshold);

// Otsu's threshold over a 256-bin histogram, returned on the [0, 1] scale.
double otsu_threshold(const std::vector<std::uint64_t>& histogram);

}  // namespace stainpipe
