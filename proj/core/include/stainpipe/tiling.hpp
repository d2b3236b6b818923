#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stainpipe/image.hpp"
#include "stainpipe/tissue_mask.hpp"

namespace stainpipe {

inline constexpr int kDefaultPatchSize = 1024;
inline constexpr double kDefaultTissueMin = 0.05;

// Non-overlapping patch grid covering a core. Boundary patches extend past
// the core and are zero-padded on extraction.
struct PatchGrid {
  int patch_size = kDefaultPatchSize;
  int rows = 0;
  int cols = 0;
  int core_width = 0;
  int core_height = 0;
  double tissue_min = kDefaultTissueMin;

  int patch_count() const { return rows * cols; }

  std::string to_json() const;
  static PatchGrid from_json(const std::string& text);
};

struct Patch {
  int row = 0;
  int col = 0;
  // Fraction of tissue inside the part of the patch that overlaps the core;
  // padding never counts toward the denominator.
  double tissue_fraction = 0.0;
  bool kept = false;
  // patch_size x patch_size RGB, black where the patch extends past the core.
  std::vector<std::uint8_t> pixels;
};

PatchGrid make_grid(int core_width, int core_height,
                    int patch_size = kDefaultPatchSize,
                    double tissue_min = kDefaultTissueMin);

// Cuts the core into grid patches. Every grid cell yields a Patch; `kept` is
// set when its tissue fraction reaches grid.tissue_min.
std::vector<Patch> extract_patches(const CoreImage& core, const TissueMask& mask,
                                   const PatchGrid& grid);

// Reassembles a core-sized image from the kept patches. Cells with no kept
// patch are filled white; padding introduced at extraction is cropped away.
CoreImage reconstruct_core(const std::vector<Patch>& patches, const PatchGrid& grid,
                           const std::string& core_id, double mpp,
                           StainState stain_state);

// Canonical on-disk name for a patch: {core_id}_r{row}_c{col}.png
std::string patch_filename(const std::string& core_id, int row, int col);

// Parses row/col back out of a canonical patch filename; returns false when
// the name does not belong to core_id or is not in canonical form.
bool parse_patch_filename(const std::string& filename, const std::string& core_id,
                          int* row, int* col);

}  // namespace stainpipe
