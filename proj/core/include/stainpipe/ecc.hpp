#pragma once

#include <vector>

#include "stainpipe/image.hpp"

namespace stainpipe {

// Euclidean motion: the implied 2x3 warp matrix is
//   [[cos t, -sin t, tx], [sin t, cos t, ty]]
// and warping samples the input at matrix * (x, y, 1), i.e. the transform
// maps output (fixed-frame) coordinates into input (moving-frame) ones.
struct RigidTransform {
  double theta = 0.0;  // radians
  double tx = 0.0;
  double ty = 0.0;
  bool converged = true;
  int iterations = 0;
  double final_ecc = 1.0;

  void apply(double x, double y, double* ox, double* oy) const;
  // Geometric inverse of the motion parameters (flags are reset).
  RigidTransform inverse() const;
  bool is_identity(double theta_tol = 0.0, double shift_tol = 0.0) const;
};

struct EccParams {
  int max_iters = 200;     // per pyramid level
  double eps = 1e-6;       // stop when the parameter-update norm drops below
  int pyramid_levels = 3;  // factor-2, box-filtered coarse-to-fine schedule
  double min_ecc = 0.3;    // estimates scoring below this are rejected
};

// Single-channel double image used by the alignment internals; exposed so
// tests can drive ecc_value on hand-built planes.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> v;

  double at(int x, int y) const {
    return v[static_cast<std::size_t>(y) * width + x];
  }
};

// rec601 luminance on the [0, 1] scale.
GrayImage to_luminance(const CoreImage& image);

// Zero-mean, unit-norm inner product: ECC = <a_hat, b_hat> with
// x_hat = (x - mean(x)) / ||x - mean(x)||.
double ecc_value(const GrayImage& a, const GrayImage& b);
double ecc_value(const CoreImage& a, const CoreImage& b);

// Estimates the rigid transform t maximizing the ECC between warp(moving, t)
// and fixed. Forward-additive iteration over (theta, tx, ty) run coarse to
// fine; any failure mode (divergence, degenerate Hessian, final ECC below
// params.min_ecc) returns the identity with converged=false, never a partial
// estimate.
RigidTransform ecc_align(const CoreImage& moving, const CoreImage& fixed,
                         const EccParams& params = {});

// Inverse-mapped bilinear resampling; out-of-bounds samples take fill.
CoreImage warp_rigid(const CoreImage& image, const RigidTransform& t,
                     Rgb fill = kWhite);

}  // namespace stainpipe
