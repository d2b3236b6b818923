#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "stainpipe/image.hpp"
#include "stainpipe/tissue_mask.hpp"

namespace stainpipe {

// Per-channel cumulative histograms over masked pixels. Each array is
// non-decreasing and ends at 1 when any pixel contributed.
struct ChannelCdf {
  std::array<std::array<double, 256>, 3> cdf{};
  std::uint64_t pixel_count = 0;

  std::string to_json() const;
  static ChannelCdf from_json(const std::string& text);
};

struct ChannelWeights {
  double r = 1.0;
  double g = 1.0;
  double b = 1.0;
};

// Cumulative histogram of the tissue pixels only.
ChannelCdf compute_channel_cdf(const CoreImage& core, const TissueMask& mask);

// Monotone LUT per channel: v maps to the smallest target value whose CDF
// reaches the source CDF at v. The LUT is estimated on tissue pixels and
// applied to every pixel so the mapping stays globally consistent.
CoreImage match_histogram(const CoreImage& core, const TissueMask& mask,
                          const ChannelCdf& target);

// Blend between the input and its histogram-matched version, channel by
// channel: out_c = round(w_c * matched_c + (1 - w_c) * in_c). Weights are
// operator-tunable; (1,1,1) is full matching, (0,0,0) the identity.
CoreImage calibrate_unstained(const CoreImage& core, const TissueMask& mask,
                              const ChannelCdf& target, ChannelWeights weights);

// LUT construction for one channel, exposed for the matching invariants.
std::array<std::uint8_t, 256> matching_lut(const std::array<double, 256>& source_cdf,
                                           const std::array<double, 256>& target_cdf);

}  // namespace stainpipe
