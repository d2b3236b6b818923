#include "stainpipe/tiling.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>

#include <nlohmann/json.hpp>

#include "stainpipe/error.hpp"

namespace stainpipe {

std::string PatchGrid::to_json() const {
  nlohmann::ordered_json j;
  j["patch_size"] = patch_size;
  j["rows"] = rows;
  j["cols"] = cols;
  j["core_width"] = core_width;
  j["core_height"] = core_height;
  j["tissue_min"] = tissue_min;
  return j.dump(2);
}

PatchGrid PatchGrid::from_json(const std::string& text) {
  PatchGrid g;
  try {
    const auto j = nlohmann::json::parse(text);
    g.patch_size = j.at("patch_size").get<int>();
    g.rows = j.at("rows").get<int>();
    g.cols = j.at("cols").get<int>();
    g.core_width = j.at("core_width").get<int>();
    g.core_height = j.at("core_height").get<int>();
    g.tissue_min = j.at("tissue_min").get<double>();
  } catch (const nlohmann::json::exception& e) {
    raise(errc::parse_error, std::string("malformed grid json: ") + e.what());
  }
  if (g.patch_size <= 0 || g.rows <= 0 || g.cols <= 0) {
    raise(errc::parse_error, "grid json has non-positive dimensions");
  }
  return g;
}

PatchGrid make_grid(int core_width, int core_height, int patch_size,
                    double tissue_min) {
  if (core_width <= 0 || core_height <= 0) {
    raise(errc::range_error, "core dimensions must be positive");
  }
  if (patch_size <= 0) {
    raise(errc::range_error, "patch size must be positive");
  }
  if (tissue_min < 0.0 || tissue_min > 1.0) {
    raise(errc::range_error, "tissue_min must lie in [0, 1]");
  }
  PatchGrid g;
  g.patch_size = patch_size;
  g.core_width = core_width;
  g.core_height = core_height;
  g.tissue_min = tissue_min;
  g.cols = (core_width + patch_size - 1) / patch_size;
  g.rows = (core_height + patch_size - 1) / patch_size;
  return g;
}

std::vector<Patch> extract_patches(const CoreImage& core, const TissueMask& mask,
                                   const PatchGrid& grid) {
  if (core.width != grid.core_width || core.height != grid.core_height) {
    raise(errc::grid_mismatch, "grid does not match core dimensions");
  }
  if (core.width != mask.width || core.height != mask.height) {
    raise(errc::grid_mismatch, "mask dimensions do not match image");
  }
  const int p = grid.patch_size;
  std::vector<Patch> out;
  out.reserve(static_cast<std::size_t>(grid.patch_count()));
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      Patch patch;
      patch.row = r;
      patch.col = c;
      patch.pixels.assign(static_cast<std::size_t>(p) * p * 3, 0);
      const int x0 = c * p;
      const int y0 = r * p;
      const int w = std::min(p, core.width - x0);
      const int h = std::min(p, core.height - y0);
      std::uint64_t tissue = 0;
      for (int y = 0; y < h; ++y) {
        const std::uint8_t* src = core.pixels.data() + core.offset(x0, y0 + y, 0);
        std::uint8_t* dst =
            patch.pixels.data() + (static_cast<std::size_t>(y) * p) * 3;
        std::memcpy(dst, src, static_cast<std::size_t>(w) * 3);
        for (int x = 0; x < w; ++x) {
          if (mask.tissue(x0 + x, y0 + y)) ++tissue;
        }
      }
      patch.tissue_fraction =
          static_cast<double>(tissue) / (static_cast<double>(w) * h);
      patch.kept = patch.tissue_fraction >= grid.tissue_min;
      out.push_back(std::move(patch));
    }
  }
  return out;
}

CoreImage reconstruct_core(const std::vector<Patch>& patches, const PatchGrid& grid,
                           const std::string& core_id, double mpp,
                           StainState stain_state) {
  CoreImage out = CoreImage::filled(grid.core_width, grid.core_height, kWhite);
  out.core_id = core_id;
  out.mpp = mpp;
  out.stain_state = stain_state;
  const int p = grid.patch_size;
  for (const Patch& patch : patches) {
    if (!patch.kept) continue;
    if (patch.row < 0 || patch.row >= grid.rows || patch.col < 0 ||
        patch.col >= grid.cols) {
      raise(errc::grid_mismatch, "patch index outside grid");
    }
    if (patch.pixels.size() != static_cast<std::size_t>(p) * p * 3) {
      raise(errc::grid_mismatch, "patch pixel buffer does not match grid size");
    }
    const int x0 = patch.col * p;
    const int y0 = patch.row * p;
    const int w = std::min(p, grid.core_width - x0);
    const int h = std::min(p, grid.core_height - y0);
    for (int y = 0; y < h; ++y) {
      const std::uint8_t* src =
          patch.pixels.data() + (static_cast<std::size_t>(y) * p) * 3;
      std::uint8_t* dst = out.pixels.data() + out.offset(x0, y0 + y, 0);
      std::memcpy(dst, src, static_cast<std::size_t>(w) * 3);
    }
  }
  return out;
}

std::string patch_filename(const std::string& core_id, int row, int col) {
  return core_id + "_r" + std::to_string(row) + "_c" + std::to_string(col) +
         ".png";
}

namespace {

// Parses a non-negative decimal int at text[pos..), advancing pos.
bool parse_int_at(const std::string& text, std::size_t* pos, int* value) {
  const char* begin = text.data() + *pos;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(begin, end, *value);
  if (res.ec != std::errc() || res.ptr == begin || *value < 0) return false;
  *pos += static_cast<std::size_t>(res.ptr - begin);
  return true;
}

}  // namespace

bool parse_patch_filename(const std::string& filename, const std::string& core_id,
                          int* row, int* col) {
  const std::string prefix = core_id + "_r";
  if (filename.rfind(prefix, 0) != 0) return false;
  std::size_t pos = prefix.size();
  if (!parse_int_at(filename, &pos, row)) return false;
  if (filename.compare(pos, 2, "_c") != 0) return false;
  pos += 2;
  if (!parse_int_at(filename, &pos, col)) return false;
  return filename.compare(pos, std::string::npos, ".png") == 0;
}

}  // namespace stainpipe
