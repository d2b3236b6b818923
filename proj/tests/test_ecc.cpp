#include <doctest.h>

#include <cmath>
#include <random>

#include "stainpipe/ecc.hpp"
#include "stainpipe/synth.hpp"
#include "support.hpp"

using namespace stainpipe;

namespace {

constexpr double kRad = M_PI / 180.0;

}  // namespace

TEST_CASE("rigid transform inverse composes to the identity") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    RigidTransform t;
    t.theta = (support::unit_double(rng) - 0.5) * M_PI;
    t.tx = (support::unit_double(rng) - 0.5) * 200.0;
    t.ty = (support::unit_double(rng) - 0.5) * 200.0;
    const RigidTransform inv = t.inverse();

    for (int k = 0; k < 5; ++k) {
      const double x = (support::unit_double(rng) - 0.5) * 1000.0;
      const double y = (support::unit_double(rng) - 0.5) * 1000.0;
      double mx, my, bx, by;
      t.apply(x, y, &mx, &my);
      inv.apply(mx, my, &bx, &by);
      CHECK(bx == doctest::Approx(x).epsilon(1e-12));
      CHECK(by == doctest::Approx(y).epsilon(1e-12));
    }
  }

  RigidTransform failed;
  failed.theta = 0.3;
  failed.converged = false;
  failed.iterations = 17;
  failed.final_ecc = 0.1;
  const RigidTransform inv = failed.inverse();
  CHECK(inv.converged);  // inverse carries geometry, not the fit flags
  CHECK(inv.iterations == 0);
}

TEST_CASE("identity predicate uses both tolerances") {
  RigidTransform t;
  CHECK(t.is_identity());
  t.theta = 1e-9;
  t.tx = 1e-9;
  CHECK_FALSE(t.is_identity());
  CHECK(t.is_identity(1e-8, 1e-8));
}

TEST_CASE("luminance plane follows rec601") {
  CoreImage img = support::constant_image(2, 1, kBlack);
  img.set(0, 0, Rgb{255, 0, 0});
  img.set(1, 0, Rgb{0, 255, 0});
  const GrayImage g = to_luminance(img);
  CHECK(g.at(0, 0) == doctest::Approx(0.299));
  CHECK(g.at(1, 0) == doctest::Approx(0.587));
}

TEST_CASE("ecc value is a normalized correlation") {
  const CoreImage a = support::random_image(32, 32, 5);
  CHECK(ecc_value(a, a) == doctest::Approx(1.0).epsilon(1e-12));

  // affine intensity changes leave the score untouched
  GrayImage ga = to_luminance(a);
  GrayImage gb = ga;
  for (double& v : gb.v) v = 2.0 * v + 5.0;
  CHECK(ecc_value(ga, gb) == doctest::Approx(1.0).epsilon(1e-12));

  GrayImage gneg = ga;
  for (double& v : gneg.v) v = -v;
  CHECK(ecc_value(ga, gneg) == doctest::Approx(-1.0).epsilon(1e-12));

  const CoreImage b = support::random_image(32, 32, 6);
  CHECK(std::abs(ecc_value(a, b)) < 0.2);  // independent noise decorrelates
}

TEST_CASE("warping by the identity is a byte copy") {
  const CoreImage img = support::random_image(40, 30, 8);
  const CoreImage out = warp_rigid(img, RigidTransform{});
  CHECK(out.pixels == img.pixels);
}

TEST_CASE("integer translation warps shift content and fill the gap") {
  const CoreImage img = support::random_image(20, 20, 9);
  RigidTransform t;
  t.tx = 3.0;  // out(x) samples in at x + 3
  const CoreImage out = warp_rigid(img, t, Rgb{7, 7, 7});
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 17; ++x) {
      REQUIRE(out.at(x, y, 0) == img.at(x + 3, y, 0));
    }
    CHECK(out.at(18, y, 0) == 7);  // past the right edge: fill
  }
}

TEST_CASE("alignment recovers known rigid motions") {
  int recovered = 0;
  const int cases = 6;
  for (int i = 0; i < cases; ++i) {
    CoreImage fixed, moving;
    RigidTransform want;
    support::make_warped_pair(256, 256, 3000 + i, 5.0, 15.0, &fixed, &moving,
                              &want);
    const RigidTransform got = ecc_align(moving, fixed);
    CAPTURE(i);
    CHECK(got.converged);
    const double dtheta = std::abs(got.theta - want.theta) / kRad;
    const double dshift = std::hypot(got.tx - want.tx, got.ty - want.ty);
    if (got.converged && dtheta <= 0.05 && dshift <= 0.1) ++recovered;
  }
  CHECK(recovered == cases);
}

TEST_CASE("aligning an image with itself is the identity") {
  const CoreImage img = stainpipe::synth_texture(200, 160, 99);
  const RigidTransform got = ecc_align(img, img);
  CHECK(got.converged);
  CHECK(std::abs(got.theta) < 1e-6);
  CHECK(std::abs(got.tx) < 1e-3);
  CHECK(std::abs(got.ty) < 1e-3);
  CHECK(got.final_ecc > 0.999);
}

TEST_CASE("unrelated noise fails closed with the identity") {
  const CoreImage a = support::random_image(96, 96, 41);
  const CoreImage b = support::random_image(96, 96, 42);
  const RigidTransform got = ecc_align(a, b);
  CHECK_FALSE(got.converged);
  // failure mode returns the identity, never a partial estimate
  CHECK(got.theta == 0.0);
  CHECK(got.tx == 0.0);
  CHECK(got.ty == 0.0);
  CHECK(got.final_ecc < 0.3);
}

TEST_CASE("a raised min_ecc gate rejects an otherwise good fit") {
  CoreImage fixed, moving;
  RigidTransform want;
  support::make_warped_pair(128, 128, 77, 2.0, 5.0, &fixed, &moving, &want);
  EccParams params;
  params.min_ecc = 0.9999999;  // nothing real scores this high
  const RigidTransform got = ecc_align(moving, fixed, params);
  CHECK_FALSE(got.converged);
  CHECK(got.theta == 0.0);
}
