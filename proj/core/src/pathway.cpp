#include "stainpipe/pathway.hpp"

#include "stainpipe/error.hpp"

namespace stainpipe {

const char* pathway_name(PathwayName name) {
  switch (name) {
    case PathwayName::destain: return "destain";
    case PathwayName::direct_stain: return "direct_stain";
    case PathwayName::destain_restain: return "destain_restain";
  }
  return "destain";
}

PathwayName pathway_from_name(const std::string& name) {
  if (name == "destain") return PathwayName::destain;
  if (name == "direct_stain") return PathwayName::direct_stain;
  if (name == "destain_restain") return PathwayName::destain_restain;
  raise(errc::invalid_config, "unknown pathway: " + name);
}

void Pathway::validate() const {
  const std::size_t expected =
      name == PathwayName::destain_restain ? 2 : 1;
  if (stages.size() != expected) {
    raise(errc::invalid_config,
          std::string(pathway_name(name)) + " takes exactly " +
              std::to_string(expected) + " stage(s), got " +
              std::to_string(stages.size()));
  }
  for (const auto& stage : stages) stage.validate();
}

StainState Pathway::output_state() const {
  switch (name) {
    case PathwayName::destain: return StainState::virtual_destained;
    case PathwayName::direct_stain: return StainState::virtual_stained;
    case PathwayName::destain_restain: return StainState::virtual_restained;
  }
  return StainState::virtual_destained;
}

namespace {

PathwayResult run_stages(const CoreImage& core, const PatchGrid& grid,
                         std::vector<Patch> kept, const Pathway& pathway,
                         const std::string& work_dir) {
  pathway.validate();
  PathwayResult res;
  res.grid = grid;
  res.kept_patches = kept.size();
  res.empty_input = kept.empty();
  for (std::size_t s = 0; s < pathway.stages.size(); ++s) {
    const std::string stage_dir =
        work_dir.empty() ? std::string()
                         : work_dir + "/stage" + std::to_string(s + 1);
    kept = transform_patches(kept, pathway.stages[s], grid, core.core_id,
                             stage_dir);
    if (s + 1 < pathway.stages.size()) {
      res.intermediates.push_back(reconstruct_core(
          kept, grid, core.core_id, core.mpp, StainState::virtual_destained));
    }
  }
  res.output = reconstruct_core(kept, grid, core.core_id, core.mpp,
                                pathway.output_state());
  return res;
}

}  // namespace

PathwayResult run_pathway(const CoreImage& core, const TissueMask& mask,
                          const Pathway& pathway, int patch_size,
                          double tissue_min, const std::string& work_dir) {
  const PatchGrid grid =
      make_grid(core.width, core.height, patch_size, tissue_min);
  std::vector<Patch> kept;
  for (Patch& patch : extract_patches(core, mask, grid)) {
    if (patch.kept) kept.push_back(std::move(patch));
  }
  return run_stages(core, grid, std::move(kept), pathway, work_dir);
}

PathwayResult run_pathway_with_grid(const CoreImage& core, const PatchGrid& grid,
                                    const std::vector<bool>& kept,
                                    const Pathway& pathway,
                                    const std::string& work_dir) {
  if (core.width != grid.core_width || core.height != grid.core_height) {
    raise(errc::grid_mismatch, "grid does not match core dimensions");
  }
  if (kept.size() != static_cast<std::size_t>(grid.patch_count())) {
    raise(errc::grid_mismatch, "kept flags do not cover the grid");
  }
  // Cut patches against a blank mask, then impose the inherited flags.
  TissueMask blank;
  blank.width = core.width;
  blank.height = core.height;
  blank.bits.assign(static_cast<std::size_t>(core.width) * core.height, 0);
  std::vector<Patch> kept_patches;
  for (Patch& patch : extract_patches(core, blank, grid)) {
    const std::size_t cell =
        static_cast<std::size_t>(patch.row) * grid.cols + patch.col;
    if (kept[cell]) {
      patch.kept = true;
      kept_patches.push_back(std::move(patch));
    }
  }
  return run_stages(core, grid, std::move(kept_patches), pathway, work_dir);
}

}  // namespace stainpipe
