#include "stainpipe/histogram.hpp"

#include <nlohmann/json.hpp>

#include "stainpipe/error.hpp"

namespace stainpipe {

std::string ChannelCdf::to_json() const {
  nlohmann::ordered_json j;
  j["pixel_count"] = pixel_count;
  const char* names[3] = {"r", "g", "b"};
  for (int c = 0; c < 3; ++c) {
    j["cdf"][names[c]] = cdf[static_cast<std::size_t>(c)];
  }
  return j.dump(2);
}

ChannelCdf ChannelCdf::from_json(const std::string& text) {
  ChannelCdf out;
  try {
    const auto j = nlohmann::json::parse(text);
    out.pixel_count = j.at("pixel_count").get<std::uint64_t>();
    const char* names[3] = {"r", "g", "b"};
    for (int c = 0; c < 3; ++c) {
      const auto& arr = j.at("cdf").at(names[c]);
      if (arr.size() != 256) {
        raise(errc::parse_error, "channel cdf must have 256 bins");
      }
      for (std::size_t i = 0; i < 256; ++i) {
        out.cdf[static_cast<std::size_t>(c)][i] = arr[i].get<double>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    raise(errc::parse_error, std::string("malformed cdf json: ") + e.what());
  }
  return out;
}

ChannelCdf compute_channel_cdf(const CoreImage& core, const TissueMask& mask) {
  if (core.width != mask.width || core.height != mask.height) {
    raise(errc::grid_mismatch, "mask dimensions do not match image");
  }
  std::array<std::array<std::uint64_t, 256>, 3> hist{};
  std::uint64_t count = 0;
  for (int y = 0; y < core.height; ++y) {
    for (int x = 0; x < core.width; ++x) {
      if (!mask.tissue(x, y)) continue;
      ++count;
      for (int c = 0; c < 3; ++c) {
        ++hist[static_cast<std::size_t>(c)][core.at(x, y, c)];
      }
    }
  }
  if (count == 0) {
    raise(errc::insufficient_tissue, "no tissue pixels for histogram");
  }
  ChannelCdf out;
  out.pixel_count = count;
  for (int c = 0; c < 3; ++c) {
    std::uint64_t running = 0;
    for (int v = 0; v < 256; ++v) {
      running += hist[static_cast<std::size_t>(c)][static_cast<std::size_t>(v)];
      out.cdf[static_cast<std::size_t>(c)][static_cast<std::size_t>(v)] =
          static_cast<double>(running) / static_cast<double>(count);
    }
  }
  return out;
}

std::array<std::uint8_t, 256> matching_lut(const std::array<double, 256>& source_cdf,
                                           const std::array<double, 256>& target_cdf) {
  std::array<std::uint8_t, 256> lut{};
  int t = 0;
  for (int v = 0; v < 256; ++v) {
    const double s = source_cdf[static_cast<std::size_t>(v)];
    while (t < 255 && target_cdf[static_cast<std::size_t>(t)] < s) ++t;
    lut[static_cast<std::size_t>(v)] = static_cast<std::uint8_t>(t);
  }
  return lut;
}

CoreImage match_histogram(const CoreImage& core, const TissueMask& mask,
                          const ChannelCdf& target) {
  const ChannelCdf source = compute_channel_cdf(core, mask);
  std::array<std::array<std::uint8_t, 256>, 3> luts;
  for (int c = 0; c < 3; ++c) {
    luts[static_cast<std::size_t>(c)] =
        matching_lut(source.cdf[static_cast<std::size_t>(c)],
                     target.cdf[static_cast<std::size_t>(c)]);
  }
  CoreImage out = core;
  for (std::size_t i = 0; i < out.pixels.size(); i += 3) {
    for (std::size_t c = 0; c < 3; ++c) {
      out.pixels[i + c] = luts[c][out.pixels[i + c]];
    }
  }
  return out;
}

CoreImage calibrate_unstained(const CoreImage& core, const TissueMask& mask,
                              const ChannelCdf& target, ChannelWeights weights) {
  const CoreImage matched = match_histogram(core, mask, target);
  const double w[3] = {weights.r, weights.g, weights.b};
  CoreImage out = core;
  for (std::size_t i = 0; i < out.pixels.size(); i += 3) {
    for (std::size_t c = 0; c < 3; ++c) {
      const double blended = w[c] * matched.pixels[i + c] +
                             (1.0 - w[c]) * core.pixels[i + c];
      out.pixels[i + c] = round_to_u8(blended);
    }
  }
  return out;
}

}  // namespace stainpipe
