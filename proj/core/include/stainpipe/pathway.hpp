#pragma once

#include <string>
#include <vector>

#include "stainpipe/backend.hpp"
#include "stainpipe/image.hpp"
#include "stainpipe/tiling.hpp"
#include "stainpipe/tissue_mask.hpp"

namespace stainpipe {

enum class PathwayName { destain, direct_stain, destain_restain };

const char* pathway_name(PathwayName name);
PathwayName pathway_from_name(const std::string& name);

// An ordered backend chain: destain and direct_stain are single-stage,
// destain_restain chains the destain and stain backends.
struct Pathway {
  PathwayName name = PathwayName::destain;
  std::vector<BackendSpec> stages;

  void validate() const;  // stage count must match the pathway
  // Stain state of the final output (the loop's intermediate is always
  // virtual_destained).
  StainState output_state() const;
};

struct PathwayResult {
  CoreImage output;
  // One entry per stage before the last (the loop's VDS); labeled by
  // stain_state on each image.
  std::vector<CoreImage> intermediates;
  PatchGrid grid;
  std::size_t kept_patches = 0;
  // True when no patch cleared the tissue threshold: the output is a
  // background-filled canvas and the caller should warn.
  bool empty_input = false;
};

// Tiles the core, drives the kept patches through each stage in order, and
// reconstructs after every stage. The second stage always reuses the first
// stage's grid and kept flags (the intermediate is never re-masked).
PathwayResult run_pathway(const CoreImage& core, const TissueMask& mask,
                          const Pathway& pathway, int patch_size,
                          double tissue_min, const std::string& work_dir = {});

// Same, but with tiling decisions supplied by the caller: `kept` overrides
// the per-patch keep flags (sized rows*cols, row-major). This is how a
// later stage inherits an earlier stage's grid.
PathwayResult run_pathway_with_grid(const CoreImage& core, const PatchGrid& grid,
                                    const std::vector<bool>& kept,
                                    const Pathway& pathway,
                                    const std::string& work_dir = {});

}  // namespace stainpipe
