#include <doctest.h>

#include "stainpipe/error.hpp"
#include "stainpipe/intensity.hpp"
#include "support.hpp"

using namespace stainpipe;

TEST_CASE("masked intensity averages tissue pixels only") {
  CoreImage img = support::constant_image(2, 2, kWhite);
  img.core_id = "c1";
  img.set(0, 0, Rgb{10, 20, 30});
  img.set(1, 0, Rgb{30, 40, 50});
  // bottom row stays white but is masked out
  TissueMask mask = support::full_mask(2, 2);
  mask.bits[2] = 0;
  mask.bits[3] = 0;

  const IntensitySummary s = masked_intensity(img, mask);
  CHECK(s.core_id == "c1");
  CHECK(s.r == doctest::Approx(20.0));
  CHECK(s.g == doctest::Approx(30.0));
  CHECK(s.b == doctest::Approx(40.0));
  CHECK(s.overall == doctest::Approx(30.0));
  CHECK(s.tissue_fraction == doctest::Approx(0.5));
}

TEST_CASE("empty masks cannot summarize intensity") {
  const CoreImage img = support::constant_image(2, 2, kWhite);
  TissueMask mask = support::full_mask(2, 2);
  mask.bits.assign(mask.bits.size(), 0);
  try {
    masked_intensity(img, mask);
    FAIL("expected insufficient_tissue");
  } catch (const PipelineError& e) {
    CHECK(e.code() == errc::insufficient_tissue);
  }

  const CoreImage small = support::constant_image(3, 3, kWhite);
  try {
    masked_intensity(small, mask);  // 2x2 mask on a 3x3 image
    FAIL("expected grid_mismatch");
  } catch (const PipelineError& e) {
    CHECK(e.code() == errc::grid_mismatch);
  }
}

TEST_CASE("intensity differences are signed, first minus second") {
  IntensitySummary x;
  x.core_id = "c2";
  x.overall = 120.0;
  x.r = 100.0;
  x.g = 130.0;
  x.b = 130.0;
  IntensitySummary y;
  y.overall = 100.0;
  y.r = 110.0;
  y.g = 95.0;
  y.b = 95.0;

  const IntensityDifference d = intensity_difference(x, y);
  CHECK(d.core_id == "c2");
  CHECK(d.overall == doctest::Approx(20.0));
  CHECK(d.r == doctest::Approx(-10.0));
  CHECK(d.g == doctest::Approx(35.0));
  CHECK(d.b == doctest::Approx(35.0));
}

TEST_CASE("domain shift against a small reference cohort") {
  const auto summary_with = [](double overall) {
    IntensitySummary s;
    s.overall = overall;
    return s;
  };
  const IntensitySummary core = summary_with(100.0);
  const std::vector<IntensitySummary> refs = {
      summary_with(80.0), summary_with(90.0), summary_with(120.0)};

  const DomainShift shift = domain_shift_summary(core, refs);
  // diffs {20, 10, -20}: mean 10/3, median 10
  CHECK(shift.mean_diff == doctest::Approx(10.0 / 3.0));
  CHECK(shift.median_diff == doctest::Approx(10.0));

  // even count: median averages the middle two
  const std::vector<IntensitySummary> four = {
      summary_with(80.0), summary_with(90.0), summary_with(100.0),
      summary_with(120.0)};
  const DomainShift even = domain_shift_summary(core, four);
  CHECK(even.mean_diff == doctest::Approx(10.0 / 4.0));
  CHECK(even.median_diff == doctest::Approx(5.0));

  // a core measured against itself alone shows zero shift
  const DomainShift self = domain_shift_summary(core, {core});
  CHECK(self.mean_diff == 0.0);
  CHECK(self.median_diff == 0.0);

  try {
    domain_shift_summary(core, {});
    FAIL("expected range_error");
  } catch (const PipelineError& e) {
    CHECK(e.code() == errc::range_error);
  }
}
