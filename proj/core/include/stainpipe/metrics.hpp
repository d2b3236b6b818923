#pragma once

#include <string>

#include "stainpipe/ecc.hpp"
#include "stainpipe/image.hpp"

namespace stainpipe {

// Named comparisons from the validation framework; anything else is custom.
enum class Comparison {
  gus_vs_vds,
  ghe_vs_vher,
  ghe_vs_vhe,
  vhe_vs_vher,
  custom,
};

const char* comparison_name(Comparison c);
Comparison comparison_from_name(const std::string& name);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

struct MetricRecord {
  std::string core_id;
  Comparison comparison = Comparison::custom;
  std::string comparison_label;  // role pair, e.g. "ghe_vs_vds"
  double pcc = 0.0;
  double ssim = 0.0;
  double psnr = 0.0;  // dB; +infinity when mse == 0
  double mse = 0.0;
  RigidTransform alignment;  // identity (converged) when alignment is off
  bool aligned = false;      // whether metrics ran on the warped pair
};

// Pearson correlation over all pixels of all three channels flattened into
// one vector, on the [0, 1] scale.
double pcc(const CoreImage& a, const CoreImage& b);

// Mean squared error on the [0, 1] scale.
double mse(const CoreImage& a, const CoreImage& b);

// -10 * log10(mse), peak 1.0; identical images give +infinity.
double psnr(const CoreImage& a, const CoreImage& b);
double psnr_from_mse(double mse_value);

// Single-scale SSIM on [0, 1] luminance, Gaussian-weighted windows, averaged
// over fully valid window positions only.
double ssim(const CoreImage& a, const CoreImage& b, const SsimParams& params = {});

// Aligns b onto a (when do_align) and computes all four metrics. A
// non-convergent alignment falls back to the unaligned pair and is flagged
// through the record's alignment.converged field.
MetricRecord evaluate_pair(const CoreImage& a, const CoreImage& b, bool do_align,
                           const EccParams& ecc_params = {},
                           const SsimParams& ssim_params = {});

}  // namespace stainpipe
