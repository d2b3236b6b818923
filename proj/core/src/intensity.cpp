#include "stainpipe/intensity.hpp"

#include <algorithm>

#include "stainpipe/error.hpp"

namespace stainpipe {

IntensitySummary masked_intensity(const CoreImage& core, const TissueMask& mask) {
  if (core.width != mask.width || core.height != mask.height) {
    raise(errc::grid_mismatch, "mask dimensions do not match image");
  }
  double sums[3] = {0.0, 0.0, 0.0};
  std::uint64_t count = 0;
  for (int y = 0; y < core.height; ++y) {
    for (int x = 0; x < core.width; ++x) {
      if (!mask.tissue(x, y)) continue;
      ++count;
      for (int c = 0; c < 3; ++c) sums[c] += core.at(x, y, c);
    }
  }
  if (count == 0) {
    raise(errc::insufficient_tissue, "no tissue pixels for intensity summary");
  }
  IntensitySummary s;
  s.core_id = core.core_id;
  s.r = sums[0] / static_cast<double>(count);
  s.g = sums[1] / static_cast<double>(count);
  s.b = sums[2] / static_cast<double>(count);
  s.overall = (s.r + s.g + s.b) / 3.0;
  s.tissue_fraction = static_cast<double>(count) /
                      (static_cast<double>(core.width) * core.height);
  return s;
}

IntensityDifference intensity_difference(const IntensitySummary& x,
                                         const IntensitySummary& y) {
  IntensityDifference d;
  d.core_id = x.core_id;
  d.overall = x.overall - y.overall;
  d.r = x.r - y.r;
  d.g = x.g - y.g;
  d.b = x.b - y.b;
  return d;
}

DomainShift domain_shift_summary(const IntensitySummary& core,
                                 const std::vector<IntensitySummary>& reference) {
  if (reference.empty()) {
    raise(errc::range_error, "domain shift needs a non-empty reference set");
  }
  std::vector<double> diffs;
  diffs.reserve(reference.size());
  double sum = 0.0;
  for (const auto& ref : reference) {
    const double d = core.overall - ref.overall;
    diffs.push_back(d);
    sum += d;
  }
  std::sort(diffs.begin(), diffs.end());
  DomainShift out;
  out.mean_diff = sum / static_cast<double>(diffs.size());
  const std::size_t n = diffs.size();
  out.median_diff = (n % 2 == 1) ? diffs[n / 2]
                                 : 0.5 * (diffs[n / 2 - 1] + diffs[n / 2]);
  return out;
}

}  // namespace stainpipe
