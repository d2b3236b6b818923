#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "stainpipe/backend.hpp"
#include "stainpipe/ecc.hpp"
#include "stainpipe/histogram.hpp"
#include "stainpipe/macenko.hpp"
#include "stainpipe/metrics.hpp"
#include "stainpipe/tissue_mask.hpp"

namespace stainpipe {

// One physical tissue core: the unstained and stained scans plus the region
// outlining the core on each slide.
struct CoreEntry {
  std::string core_id;
  std::string unstained_path;
  std::string stained_path;
  std::string roi_unstained;
  std::string roi_stained;
  std::optional<double> source_mpp;  // overrides / supplies file resolution
};

struct ManifestReference {
  std::string he_reference_path;
  std::string unstained_reference_path;
};

// Top-level run input: which cores exist, the harmonization references, and
// which comparisons to evaluate. Relative paths resolve against the manifest
// file's directory.
struct Manifest {
  std::vector<CoreEntry> cores;
  ManifestReference reference;
  std::vector<std::string> comparisons;  // empty selects the default set

  // Parses and validates: unique core ids, referenced files present.
  // (Comparison names resolve against the config at evaluation time.)
  static Manifest load(const std::string& path);
  static Manifest parse(const std::string& text, const std::string& base_dir);
};

// Which image role each side of a comparison reads, and what gets computed.
struct ComparisonDef {
  std::string name;
  std::string role_a;
  std::string role_b;
  bool pixel_metrics = true;  // pcc/ssim/psnr/mse on the aligned pair
  bool intensity = true;      // masked per-channel intensity differences
};

// The eight default comparison rows.
const std::vector<ComparisonDef>& default_comparisons();

struct EvalStatsConfig {
  double alpha = 0.05;
  // Comparisons whose per-core samples form the ANOVA groups; empty means
  // every comparison that produced pixel metrics.
  std::vector<std::string> comparisons;
};

struct RunConfig {
  double target_mpp = 0.5;
  int strip_height = 10000;
  int patch_size = 1024;
  double tissue_min = 0.05;
  MaskStrategy mask_strategy = MaskStrategy::luminance_threshold;
  double mask_threshold = kDefaultTissueThreshold;
  MacenkoParams macenko;
  ChannelWeights channel_weights;
  BackendSpec destain_backend;
  BackendSpec stain_backend;
  EccParams ecc;
  bool align = true;
  SsimParams ssim;
  EvalStatsConfig stats;
  std::vector<ComparisonDef> comparison_defs = default_comparisons();

  static RunConfig load(const std::string& path);
  static RunConfig parse(const std::string& text);
  void validate() const;
  std::string to_json() const;
};

}  // namespace stainpipe
