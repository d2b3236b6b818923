#include "stainpipe/aggregate.hpp"

#include <cmath>

#include "stainpipe/error.hpp"

namespace stainpipe {

SampleStats sample_stats(const std::vector<double>& values) {
  if (values.empty()) {
    raise(errc::range_error, "sample stats need at least one value");
  }
  SampleStats s;
  s.n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

MetricAggregateRow aggregate_metrics(const std::vector<MetricRecord>& records,
                                     const std::string& comparison) {
  if (records.empty()) {
    raise(errc::range_error, "aggregate needs at least one record");
  }
  std::vector<double> pccs, ssims, mses, psnrs;
  MetricAggregateRow row;
  row.comparison = comparison;
  row.n = records.size();
  for (const auto& rec : records) {
    pccs.push_back(rec.pcc);
    ssims.push_back(rec.ssim);
    mses.push_back(rec.mse);
    if (std::isinf(rec.psnr)) {
      ++row.psnr_inf_count;
    } else {
      psnrs.push_back(rec.psnr);
    }
  }
  row.pcc = sample_stats(pccs);
  row.ssim = sample_stats(ssims);
  row.mse = sample_stats(mses);
  if (!psnrs.empty()) row.psnr = sample_stats(psnrs);
  return row;
}

IntensityAggregateRow aggregate_intensity(
    const std::vector<IntensityDifference>& diffs, const std::string& comparison) {
  if (diffs.empty()) {
    raise(errc::range_error, "aggregate needs at least one record");
  }
  std::vector<double> overall, r, g, b;
  for (const auto& d : diffs) {
    overall.push_back(d.overall);
    r.push_back(d.r);
    g.push_back(d.g);
    b.push_back(d.b);
  }
  IntensityAggregateRow row;
  row.comparison = comparison;
  row.n = diffs.size();
  row.overall = sample_stats(overall);
  row.r = sample_stats(r);
  row.g = sample_stats(g);
  row.b = sample_stats(b);
  return row;
}

}  // namespace stainpipe
