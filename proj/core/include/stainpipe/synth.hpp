#pragma once

#include <string>

#include "stainpipe/image.hpp"

namespace stainpipe {

// Bundled synthetic dataset: mock slide scans (textured tissue disks in an
// unstained and a rigidly shifted stained rendition), GeoJSON regions,
// harmonization references, a manifest, and a run configuration wired to
// mutually inverse affine mock backends.
struct SynthOptions {
  std::string out_dir;
  int cores = 6;
  std::uint64_t seed = 20240817;
  int slide_width = 720;
  int slide_height = 640;
  double source_mpp = 0.25;  // stored in the PNG resolution chunk
};

// Writes the dataset and returns the manifest path. Deterministic in the
// options (same options, byte-identical files).
std::string generate_synthetic_dataset(const SynthOptions& opts);

// Smooth multi-octave RGB texture, deterministic in (w, h, seed). Dense
// gradients everywhere make it a good registration and metrics fixture.
CoreImage synth_texture(int width, int height, std::uint64_t seed);

}  // namespace stainpipe
