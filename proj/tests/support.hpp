#pragma once

// Shared fixtures for the test binaries: deterministic random images, the
// borderless warped-view pair used by the alignment tests, and scratch
// directories that clean up after themselves.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "stainpipe/ecc.hpp"
#include "stainpipe/image.hpp"
#include "stainpipe/tissue_mask.hpp"

namespace support {

// Uniform double in [0, 1) from the top 53 bits, same convention as the
// synthetic dataset generator.
inline double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

// Independent uniform noise per channel.
stainpipe::CoreImage random_image(int width, int height, std::uint64_t seed);

stainpipe::CoreImage constant_image(int width, int height, stainpipe::Rgb value);

// All-tissue mask matching the image dimensions.
stainpipe::TissueMask full_mask(int width, int height);

// Two crops of one larger texture related by a rigid motion, with real
// content on every pixel of both (no fill bands — the moving frame is a
// re-scan, not a padded warp). *want is the transform ecc_align(moving,
// fixed) should estimate.
void make_warped_pair(int width, int height, std::uint64_t seed,
                      double max_theta_deg, double max_shift_px,
                      stainpipe::CoreImage* fixed, stainpipe::CoreImage* moving,
                      stainpipe::RigidTransform* want);

// Unique scratch directory, removed recursively on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::string& path() const { return path_; }
  std::string join(const std::string& rel) const;

private:
  std::string path_;
};

std::vector<std::uint8_t> read_binary(const std::string& path);
bool same_bytes(const std::string& path_a, const std::string& path_b);

}  // namespace support
