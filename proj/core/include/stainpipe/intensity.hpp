#pragma once

#include <string>
#include <vector>

#include "stainpipe/image.hpp"
#include "stainpipe/tissue_mask.hpp"

namespace stainpipe {

// Mean 8-bit intensities over the tissue pixels of one core.
struct IntensitySummary {
  std::string core_id;
  double overall = 0.0;  // (r + g + b) / 3
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
  double tissue_fraction = 0.0;
};

// Signed per-channel differences between two summaries (first minus second).
struct IntensityDifference {
  std::string core_id;
  double overall = 0.0;
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
};

struct DomainShift {
  double mean_diff = 0.0;
  double median_diff = 0.0;
};

IntensitySummary masked_intensity(const CoreImage& core, const TissueMask& mask);

IntensityDifference intensity_difference(const IntensitySummary& x,
                                         const IntensitySummary& y);

// Mean and median of (core overall - reference overall) across the reference
// set; the even-count median averages the two middle values.
DomainShift domain_shift_summary(const IntensitySummary& core,
                                 const std::vector<IntensitySummary>& reference);

}  // namespace stainpipe
