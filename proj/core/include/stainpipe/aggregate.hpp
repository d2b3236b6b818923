#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "stainpipe/intensity.hpp"
#include "stainpipe/metrics.hpp"

namespace stainpipe {

// Mean and sample standard deviation (n - 1 denominator; 0 when n == 1).
struct SampleStats {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
};

SampleStats sample_stats(const std::vector<double>& values);

// One mean +/- sd row per comparison over the per-core metric records.
// Infinite PSNR values are excluded from the psnr stats and counted apart.
struct MetricAggregateRow {
  std::string comparison;
  std::size_t n = 0;
  SampleStats pcc;
  SampleStats ssim;
  SampleStats mse;
  SampleStats psnr;
  std::size_t psnr_inf_count = 0;
};

MetricAggregateRow aggregate_metrics(const std::vector<MetricRecord>& records,
                                     const std::string& comparison);

// Per-channel mean +/- sd row over signed intensity differences.
struct IntensityAggregateRow {
  std::string comparison;
  std::size_t n = 0;
  SampleStats overall;
  SampleStats r;
  SampleStats g;
  SampleStats b;
};

IntensityAggregateRow aggregate_intensity(
    const std::vector<IntensityDifference>& diffs, const std::string& comparison);

}  // namespace stainpipe
