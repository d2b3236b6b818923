#include "support.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "stainpipe/synth.hpp"

namespace support {

namespace fs = std::filesystem;
using stainpipe::CoreImage;
using stainpipe::RigidTransform;
using stainpipe::TissueMask;

CoreImage random_image(int width, int height, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CoreImage img = CoreImage::filled(width, height, stainpipe::kBlack);
  img.mpp = 0.5;
  for (auto& px : img.pixels) {
    px = static_cast<std::uint8_t>(rng() % 256);
  }
  return img;
}

CoreImage constant_image(int width, int height, stainpipe::Rgb value) {
  CoreImage img = CoreImage::filled(width, height, value);
  img.mpp = 0.5;
  return img;
}

TissueMask full_mask(int width, int height) {
  TissueMask mask;
  mask.width = width;
  mask.height = height;
  mask.bits.assign(static_cast<std::size_t>(width) * height, 1);
  mask.tissue_fraction = 1.0;
  return mask;
}

void make_warped_pair(int width, int height, std::uint64_t seed,
                      double max_theta_deg, double max_shift_px,
                      CoreImage* fixed, CoreImage* moving,
                      RigidTransform* want) {
  // Margin large enough that every moving-frame sample stays inside the
  // texture: rotation excursion + shift at |theta| <= 5 deg, |t| <= 15 px.
  const int margin = 64;
  const CoreImage big =
      stainpipe::synth_texture(width + 2 * margin, height + 2 * margin, seed);

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const double theta = (unit_double(rng) - 0.5) * 2.0 *
                       (max_theta_deg * M_PI / 180.0);
  const double tx = (unit_double(rng) - 0.5) * 2.0 * max_shift_px;
  const double ty = (unit_double(rng) - 0.5) * 2.0 * max_shift_px;
  const double c = std::cos(theta);
  const double s = std::sin(theta);

  *fixed = CoreImage::filled(width, height, stainpipe::kBlack);
  *moving = CoreImage::filled(width, height, stainpipe::kBlack);
  fixed->mpp = moving->mpp = 0.5;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int ch = 0; ch < 3; ++ch) {
        fixed->at(x, y, ch) = big.at(x + margin, y + margin, ch);
      }
      // moving(x) = big(R * (x + margin) + t), sampled bilinearly
      const double u = c * (x + margin) - s * (y + margin) + tx;
      const double v = s * (x + margin) + c * (y + margin) + ty;
      const int x0 = static_cast<int>(u);
      const int y0 = static_cast<int>(v);
      const double fx = u - x0;
      const double fy = v - y0;
      for (int ch = 0; ch < 3; ++ch) {
        const double top = big.at(x0, y0, ch) * (1.0 - fx) +
                           big.at(x0 + 1, y0, ch) * fx;
        const double bot = big.at(x0, y0 + 1, ch) * (1.0 - fx) +
                           big.at(x0 + 1, y0 + 1, ch) * fx;
        moving->at(x, y, ch) =
            stainpipe::round_to_u8(top * (1.0 - fy) + bot * fy);
      }
    }
  }

  // In core coordinates the fixed -> moving motion is S = (theta,
  // t + (R - I) * (margin, margin)); alignment reports its inverse.
  RigidTransform fwd;
  fwd.theta = theta;
  fwd.tx = tx + (c - 1.0) * margin - s * margin;
  fwd.ty = ty + s * margin + (c - 1.0) * margin;
  *want = fwd.inverse();
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const fs::path base = fs::temp_directory_path() /
                        ("stainpipe_test_" + tag + "_" +
                         std::to_string(::getpid()) + "_" +
                         std::to_string(counter.fetch_add(1)));
  fs::create_directories(base);
  path_ = base.string();
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);  // best effort
}

std::string TempDir::join(const std::string& rel) const {
  return (fs::path(path_) / rel).string();
}

std::vector<std::uint8_t> read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

bool same_bytes(const std::string& path_a, const std::string& path_b) {
  return read_binary(path_a) == read_binary(path_b);
}

}  // namespace support
