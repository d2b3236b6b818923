#include "stainpipe/harmonize.hpp"

namespace stainpipe {

CoreImage harmonize_he(const CoreImage& core, const TissueMask& mask,
                       const StainProfile& reference,
                       const MacenkoParams& params) {
  const StainProfile source = estimate_stain_profile(core, mask, params);
  return normalize_stains(core, source, reference);
}

CoreImage harmonize_unstained(const CoreImage& core, const TissueMask& mask,
                              const ChannelCdf& reference,
                              ChannelWeights weights) {
  return calibrate_unstained(core, mask, reference, weights);
}

}  // namespace stainpipe
