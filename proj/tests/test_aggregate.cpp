#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "stainpipe/aggregate.hpp"
#include "stainpipe/error.hpp"

using namespace stainpipe;

TEST_CASE("sample_stats matches two-pass oracle") {
  std::mt19937_64 rng(91);
  std::uniform_real_distribution<double> dist(-50.0, 50.0);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> values(2 + rng() % 40);
    for (auto& v : values) v = dist(rng);
    const SampleStats got = sample_stats(values);
    double want_mean = 0.0, want_sd = 0.0;
    oracle::mean_sd(values, &want_mean, &want_sd);
    CHECK(got.n == values.size());
    CHECK(got.mean == doctest::Approx(want_mean).epsilon(1e-12));
    CHECK(got.sd == doctest::Approx(want_sd).epsilon(1e-12));
  }
}

TEST_CASE("sample_stats single value has zero sd") {
  const SampleStats s = sample_stats({42.5});
  CHECK(s.n == 1);
  CHECK(s.mean == 42.5);
  CHECK(s.sd == 0.0);
}

TEST_CASE("sample_stats rejects empty input") {
  try {
    sample_stats({});
    FAIL("empty input should throw");
  } catch (const PipelineError& e) {
    CHECK(e.code() == errc::range_error);
  }
}

namespace {

MetricRecord record(double pcc, double ssim, double psnr, double mse) {
  MetricRecord rec;
  rec.pcc = pcc;
  rec.ssim = ssim;
  rec.psnr = psnr;
  rec.mse = mse;
  return rec;
}

}  // namespace

TEST_CASE("aggregate_metrics summarizes each field and labels the row") {
  std::vector<MetricRecord> records = {
      record(0.90, 0.80, 20.0, 0.010),
      record(0.94, 0.85, 24.0, 0.004),
      record(0.88, 0.75, 18.0, 0.016),
  };
  const MetricAggregateRow row = aggregate_metrics(records, "ghe_vs_vher");
  CHECK(row.comparison == "ghe_vs_vher");
  CHECK(row.n == 3);
  CHECK(row.psnr_inf_count == 0);

  double mean = 0.0, sd = 0.0;
  oracle::mean_sd({0.90, 0.94, 0.88}, &mean, &sd);
  CHECK(row.pcc.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(row.pcc.sd == doctest::Approx(sd).epsilon(1e-12));
  oracle::mean_sd({0.80, 0.85, 0.75}, &mean, &sd);
  CHECK(row.ssim.mean == doctest::Approx(mean).epsilon(1e-12));
  oracle::mean_sd({20.0, 24.0, 18.0}, &mean, &sd);
  CHECK(row.psnr.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(row.psnr.n == 3);
  oracle::mean_sd({0.010, 0.004, 0.016}, &mean, &sd);
  CHECK(row.mse.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(row.mse.sd == doctest::Approx(sd).epsilon(1e-12));
}

TEST_CASE("aggregate_metrics excludes infinite psnr and counts it") {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<MetricRecord> records = {
      record(1.0, 1.0, inf, 0.0),
      record(0.9, 0.8, 21.0, 0.008),
      record(1.0, 1.0, inf, 0.0),
      record(0.8, 0.7, 17.0, 0.020),
  };
  const MetricAggregateRow row = aggregate_metrics(records, "vhe_vs_vher");
  CHECK(row.n == 4);
  CHECK(row.psnr_inf_count == 2);
  // finite rows only feed the psnr stats ...
  CHECK(row.psnr.n == 2);
  CHECK(row.psnr.mean == doctest::Approx(19.0).epsilon(1e-12));
  // ... while the other metrics keep every record, infinities included.
  CHECK(row.pcc.n == 4);
  CHECK(row.mse.n == 4);
  CHECK(row.mse.mean == doctest::Approx(0.007).epsilon(1e-12));
}

TEST_CASE("aggregate_metrics with only infinite psnr leaves psnr stats empty") {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<MetricRecord> records = {record(1.0, 1.0, inf, 0.0),
                                       record(1.0, 1.0, inf, 0.0)};
  const MetricAggregateRow row = aggregate_metrics(records, "self");
  CHECK(row.psnr_inf_count == 2);
  CHECK(row.psnr.n == 0);
  CHECK(row.psnr.mean == 0.0);
  CHECK(row.psnr.sd == 0.0);
  CHECK(row.pcc.n == 2);
}

TEST_CASE("aggregate_metrics rejects empty input") {
  try {
    aggregate_metrics({}, "ghe_vs_vds");
    FAIL("empty input should throw");
  } catch (const PipelineError& e) {
    CHECK(e.code() == errc::range_error);
  }
}

TEST_CASE("aggregate_intensity summarizes each channel") {
  std::vector<IntensityDifference> diffs;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dist(-60.0, 60.0);
  std::vector<double> overall, r, g, b;
  for (int i = 0; i < 9; ++i) {
    IntensityDifference d;
    d.core_id = "core_" + std::to_string(i);
    d.overall = dist(rng);
    d.r = dist(rng);
    d.g = dist(rng);
    d.b = dist(rng);
    overall.push_back(d.overall);
    r.push_back(d.r);
    g.push_back(d.g);
    b.push_back(d.b);
    diffs.push_back(d);
  }
  const IntensityAggregateRow row = aggregate_intensity(diffs, "ghe_vs_vds");
  CHECK(row.comparison == "ghe_vs_vds");
  CHECK(row.n == 9);
  double mean = 0.0, sd = 0.0;
  oracle::mean_sd(overall, &mean, &sd);
  CHECK(row.overall.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(row.overall.sd == doctest::Approx(sd).epsilon(1e-12));
  oracle::mean_sd(r, &mean, &sd);
  CHECK(row.r.mean == doctest::Approx(mean).epsilon(1e-12));
  oracle::mean_sd(g, &mean, &sd);
  CHECK(row.g.sd == doctest::Approx(sd).epsilon(1e-12));
  oracle::mean_sd(b, &mean, &sd);
  CHECK(row.b.mean == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("aggregate_intensity rejects empty input") {
  try {
    aggregate_intensity({}, "ghe_vs_vds");
    FAIL("empty input should throw");
  } catch (const PipelineError& e) {
    CHECK(e.code() == errc::range_error);
  }
}
