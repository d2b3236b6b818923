#include "stainpipe/tissue_mask.hpp"

#include <algorithm>
#include <cmath>

#include "stainpipe/error.hpp"

namespace stainpipe {

std::size_t TissueMask::tissue_count() const {
  return static_cast<std::size_t>(
      std::count(bits.begin(), bits.end(), std::uint8_t(1)));
}

double otsu_threshold(const std::vector<std::uint64_t>& histogram) {
  if (histogram.size() != 256)
    raise(errc::range_error, "otsu expects a 256-bin histogram");
  std::uint64_t total = 0;
  double weighted_sum = 0.0;
  for (int i = 0; i < 256; ++i) {
    total += histogram[i];
    weighted_sum += static_cast<double>(i) * histogram[i];
  }
  if (total == 0) return 0.5;

  double sum_below = 0.0;
  std::uint64_t count_below = 0;
  double best_sigma = -1.0;
  int best_t = 127;
  for (int t = 0; t < 256; ++t) {
    count_below += histogram[t];
    sum_below += static_cast<double>(t) * histogram[t];
    const std::uint64_t count_above = total - count_below;
    if (count_below == 0 || count_above == 0) continue;
    const double mu_below = sum_below / count_below;
    const double mu_above = (weighted_sum - sum_below) / count_above;
    const double sigma = static_cast<double>(count_below) * count_above *
                         (mu_below - mu_above) * (mu_below - mu_above);
    if (sigma > best_sigma) {
      best_sigma = sigma;
      best_t = t;
    }
  }
  // tissue = strictly below; +1 keeps the boundary bin on the dark side
  return (best_t + 1) / 255.0;
}

TissueMask tissue_mask(const CoreImage& core, MaskStrategy strategy,
                       double threshold) {
  TissueMask mask;
  mask.width = core.width;
  mask.height = core.height;
  mask.strategy = strategy;
  mask.bits.assign(core.pixel_count(), 0);

  if (strategy == MaskStrategy::otsu) {
    std::vector<std::uint64_t> hist(256, 0);
    for (int y = 0; y < core.height; ++y)
      for (int x = 0; x < core.width; ++x) {
        const double lum =
            rec601_luminance(core.at(x, y, 0), core.at(x, y, 1), core.at(x, y, 2));
        ++hist[static_cast<int>(std::clamp(lum, 0.0, 255.0))];
      }
    threshold = otsu_threshold(hist);
  }
  mask.threshold = threshold;

  std::size_t tissue = 0;
  for (int y = 0; y < core.height; ++y) {
    for (int x = 0; x < core.width; ++x) {
      const double lum =
          rec601_luminance(core.at(x, y, 0), core.at(x, y, 1), core.at(x, y, 2)) /
          255.0;
      if (lum < threshold) {
        mask.bits[static_cast<std::size_t>(y) * core.width + x] = 1;
        ++tissue;
      }
    }
  }
  mask.tissue_fraction =
      core.pixel_count() == 0
          ? 0.0
          : static_cast<double>(tissue) / static_cast<double>(core.pixel_count());
  return mask;
}

}  // namespace stainpipe
