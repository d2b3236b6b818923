#pragma once

#include <array>
#include <string>

#include "stainpipe/image.hpp"
#include "stainpipe/tissue_mask.hpp"

namespace stainpipe {

enum class OdRejectMode {
  all_below,  // discard a pixel only when every OD component is transparent
  any_below,
};

struct MacenkoParams {
  double od_beta = 0.15;
  double angle_alpha = 1.0;                // percentile, in percent
  double concentration_percentile = 99.0;
  OdRejectMode reject = OdRejectMode::all_below;
};

// Two-stain appearance model in optical density space. Columns are unit
// vectors (hematoxylin first, then eosin); concentrations carry the
// per-stain dynamic range.
struct StainProfile {
  // row-major 3x2: stain_matrix[channel][stain]
  std::array<std::array<double, 2>, 3> stain_matrix{};
  std::array<double, 2> max_concentrations{};
  double od_beta = 0.15;
  double angle_alpha = 1.0;

  std::string to_json() const;
  static StainProfile from_json(const std::string& text);
};

// Optical density of one 8-bit value: -log10((v + 1) / 256). Zero at 255.
double optical_density(std::uint8_t value);

// Inverse of optical_density before quantization: 256 * 10^-od - 1.
double od_to_intensity(double od);

// Estimates the stain matrix and concentration percentiles from tissue
// pixels: OD cloud -> top-2 eigenplane -> angle-percentile extremes ->
// unit stain vectors, hematoxylin (higher blue OD) first.
StainProfile estimate_stain_profile(const CoreImage& core, const TissueMask& mask,
                                    const MacenkoParams& params = {});

// Re-expresses the image in the target profile: concentrations under the
// source matrix, rescaled per stain, reconstructed with the target matrix.
// Every pixel is transformed; background OD ~ 0 stays near white.
CoreImage normalize_stains(const CoreImage& core, const StainProfile& source,
                           const StainProfile& target);

}  // namespace stainpipe
