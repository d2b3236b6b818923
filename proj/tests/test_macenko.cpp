#include <doctest.h>

#include <cmath>
#include <random>

#include "stainpipe/error.hpp"
#include "stainpipe/macenko.hpp"
#include "support.hpp"

using namespace stainpipe;

namespace {

struct StainPair {
  std::array<double, 3> h;
  std::array<double, 3> e;
};

StainPair unit_stains(std::array<double, 3> h, std::array<double, 3> e) {
  const auto norm = [](std::array<double, 3>& v) {
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    for (double& x : v) x /= n;
  };
  norm(h);
  norm(e);
  return {h, e};
}

// Beer-Lambert render: od = h * ch + e * ce, intensity 256 * 10^-od - 1.
CoreImage beer_lambert_image(int width, int height, const StainPair& stains,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CoreImage img = CoreImage::filled(width, height, kWhite);
  img.mpp = 0.5;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double ch = support::unit_double(rng);
      const double ce = support::unit_double(rng);
      Rgb px;
      px.r = round_to_u8(od_to_intensity(stains.h[0] * ch + stains.e[0] * ce));
      px.g = round_to_u8(od_to_intensity(stains.h[1] * ch + stains.e[1] * ce));
      px.b = round_to_u8(od_to_intensity(stains.h[2] * ch + stains.e[2] * ce));
      img.set(x, y, px);
    }
  }
  return img;
}

double angle_between(const std::array<double, 3>& a,
                     const std::array<double, 3>& b) {
  const double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  return std::acos(std::min(1.0, std::abs(dot))) * 180.0 / M_PI;
}

double mean_abs_error(const CoreImage& a, const CoreImage& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    sum += std::abs(static_cast<double>(a.pixels[i]) - b.pixels[i]);
  }
  return sum / static_cast<double>(a.pixels.size());
}

}  // namespace

TEST_CASE("optical density round-trips and anchors") {
  CHECK(optical_density(255) == doctest::Approx(0.0));
  CHECK(optical_density(0) == doctest::Approx(std::log10(256.0)));
  for (int v = 0; v < 256; ++v) {
    CHECK(od_to_intensity(optical_density(static_cast<std::uint8_t>(v))) ==
          doctest::Approx(v).epsilon(1e-9));
  }
}

TEST_CASE("stain vectors are recovered from a known two-stain render") {
  const StainPair truth =
      unit_stains({0.65, 0.70, 0.29}, {0.07, 0.99, 0.11});
  const CoreImage img = beer_lambert_image(96, 96, truth, 2024);
  const TissueMask mask = support::full_mask(96, 96);

  const StainProfile profile = estimate_stain_profile(img, mask);

  std::array<double, 3> got_h{}, got_e{};
  for (int c = 0; c < 3; ++c) {
    got_h[c] = profile.stain_matrix[c][0];
    got_e[c] = profile.stain_matrix[c][1];
  }
  // hematoxylin first: the higher blue-OD column
  CHECK(got_h[2] > got_e[2]);
  CHECK(angle_between(got_h, truth.h) < 2.0);
  CHECK(angle_between(got_e, truth.e) < 2.0);
  CHECK(profile.max_concentrations[0] > 0.0);
  CHECK(profile.max_concentrations[1] > 0.0);
}

TEST_CASE("self-normalization is close to the identity") {
  const StainPair truth =
      unit_stains({0.65, 0.70, 0.29}, {0.07, 0.99, 0.11});
  for (int i = 0; i < 5; ++i) {
    const CoreImage img = beer_lambert_image(64, 64, truth, 9100 + i);
    const TissueMask mask = support::full_mask(64, 64);
    const StainProfile profile = estimate_stain_profile(img, mask);
    const CoreImage back = normalize_stains(img, profile, profile);
    REQUIRE(back.width == img.width);
    CHECK(mean_abs_error(img, back) <= 2.0);
  }
}

TEST_CASE("normalization keeps white background near white") {
  const StainPair a = unit_stains({0.65, 0.70, 0.29}, {0.07, 0.99, 0.11});
  const StainPair b = unit_stains({0.55, 0.75, 0.37}, {0.15, 0.95, 0.20});
  const CoreImage img_a = beer_lambert_image(64, 64, a, 777);
  const CoreImage img_b = beer_lambert_image(64, 64, b, 778);
  const TissueMask mask = support::full_mask(64, 64);

  const StainProfile pa = estimate_stain_profile(img_a, mask);
  const StainProfile pb = estimate_stain_profile(img_b, mask);

  CoreImage with_bg = img_a;
  with_bg.set(0, 0, kWhite);
  const CoreImage out = normalize_stains(with_bg, pa, pb);
  CHECK(out.at(0, 0, 0) >= 250);
  CHECK(out.at(0, 0, 1) >= 250);
  CHECK(out.at(0, 0, 2) >= 250);
}

TEST_CASE("degenerate inputs raise typed stain errors") {
  const TissueMask none = support::full_mask(4, 4);
  const CoreImage white = support::constant_image(4, 4, kWhite);
  // every OD component of white is ~0, all below beta
  try {
    estimate_stain_profile(white, none);
    FAIL("expected insufficient_tissue");
  } catch (const PipelineError& e) {
    CHECK(e.code() == errc::insufficient_tissue);
  }

  // constant dark image: the OD cloud is a single point, no stain plane
  const CoreImage flat = support::constant_image(16, 16, Rgb{60, 50, 80});
  try {
    estimate_stain_profile(flat, support::full_mask(16, 16));
    FAIL("expected degenerate_stain");
  } catch (const PipelineError& e) {
    CHECK(e.code() == errc::degenerate_stain);
  }
}

TEST_CASE("stain profile json round-trips exactly") {
  const StainPair truth =
      unit_stains({0.65, 0.70, 0.29}, {0.07, 0.99, 0.11});
  const CoreImage img = beer_lambert_image(64, 64, truth, 31);
  const StainProfile profile =
      estimate_stain_profile(img, support::full_mask(64, 64));

  const StainProfile back = StainProfile::from_json(profile.to_json());
  for (int c = 0; c < 3; ++c) {
    for (int s = 0; s < 2; ++s) {
      CHECK(back.stain_matrix[c][s] == profile.stain_matrix[c][s]);
    }
  }
  CHECK(back.max_concentrations[0] == profile.max_concentrations[0]);
  CHECK(back.max_concentrations[1] == profile.max_concentrations[1]);
  CHECK(back.od_beta == profile.od_beta);
  CHECK(back.angle_alpha == profile.angle_alpha);
}
