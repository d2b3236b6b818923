#pragma once

#include "stainpipe/histogram.hpp"
#include "stainpipe/image.hpp"
#include "stainpipe/macenko.hpp"
#include "stainpipe/tissue_mask.hpp"

namespace stainpipe {

// Stain-vector harmonization for H&E cores: estimate the source stain basis
// on tissue pixels, then re-express every pixel in the reference basis with
// concentrations rescaled to the reference maxima.
CoreImage harmonize_he(const CoreImage& core, const TissueMask& mask,
                       const StainProfile& reference,
                       const MacenkoParams& params = {});

// Intensity harmonization for unstained cores: match the per-channel tissue
// CDFs to the reference, softened by the channel weights.
CoreImage harmonize_unstained(const CoreImage& core, const TissueMask& mask,
                              const ChannelCdf& reference,
                              ChannelWeights weights = {});

}  // namespace stainpipe
