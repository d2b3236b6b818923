#pragma once

#include "stainpipe/image.hpp"

namespace stainpipe {

// Area-averaging (box) downsample to a coarser resolution. Output dims are
// round-half-even(dim * mpp / target_mpp), at least 1x1. target_mpp below
// the image's own resolution raises upsample_unsupported.
CoreImage downsample_to_mpp(const CoreImage& core, double target_mpp);

}  // namespace stainpipe
