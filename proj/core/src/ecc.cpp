#include "stainpipe/ecc.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "stainpipe/error.hpp"

namespace stainpipe {

void RigidTransform::apply(double x, double y, double* ox, double* oy) const {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  *ox = c * x - s * y + tx;
  *oy = s * x + c * y + ty;
}

RigidTransform RigidTransform::inverse() const {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  RigidTransform inv;
  inv.theta = -theta;
  // -R(-theta) * t
  inv.tx = -(c * tx + s * ty);
  inv.ty = -(-s * tx + c * ty);
  return inv;
}

bool RigidTransform::is_identity(double theta_tol, double shift_tol) const {
  return std::abs(theta) <= theta_tol && std::abs(tx) <= shift_tol &&
         std::abs(ty) <= shift_tol;
}

GrayImage to_luminance(const CoreImage& image) {
  GrayImage g;
  g.width = image.width;
  g.height = image.height;
  g.v.resize(static_cast<std::size_t>(image.width) * image.height);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      g.v[static_cast<std::size_t>(y) * image.width + x] =
          rec601_luminance(image.at(x, y, 0), image.at(x, y, 1),
                           image.at(x, y, 2)) /
          255.0;
    }
  }
  return g;
}

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double variance_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

// Factor-2 box downsample; odd trailing rows/columns fold into the last cell.
GrayImage downsample2(const GrayImage& in) {
  GrayImage out;
  out.width = std::max(1, in.width / 2);
  out.height = std::max(1, in.height / 2);
  out.v.resize(static_cast<std::size_t>(out.width) * out.height);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      const int x0 = 2 * x;
      const int y0 = 2 * y;
      const int x1 = std::min(x0 + 1, in.width - 1);
      const int y1 = std::min(y0 + 1, in.height - 1);
      out.v[static_cast<std::size_t>(y) * out.width + x] =
          0.25 * (in.at(x0, y0) + in.at(x1, y0) + in.at(x0, y1) + in.at(x1, y1));
    }
  }
  return out;
}

// Central differences with replicated borders.
void gradients(const GrayImage& img, GrayImage* gx, GrayImage* gy) {
  gx->width = gy->width = img.width;
  gx->height = gy->height = img.height;
  gx->v.resize(img.v.size());
  gy->v.resize(img.v.size());
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const int xm = std::max(0, x - 1);
      const int xp = std::min(img.width - 1, x + 1);
      const int ym = std::max(0, y - 1);
      const int yp = std::min(img.height - 1, y + 1);
      const std::size_t i = static_cast<std::size_t>(y) * img.width + x;
      gx->v[i] = 0.5 * (img.at(xp, y) - img.at(xm, y));
      gy->v[i] = 0.5 * (img.at(x, yp) - img.at(x, ym));
    }
  }
}

bool bilinear(const GrayImage& img, double x, double y, double* out) {
  if (x < 0.0 || y < 0.0 || x > img.width - 1 || y > img.height - 1) {
    return false;
  }
  const int x0 = std::min(static_cast<int>(x), img.width - 2 >= 0 ? img.width - 2 : 0);
  const int y0 = std::min(static_cast<int>(y), img.height - 2 >= 0 ? img.height - 2 : 0);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = img.at(x0, y0) * (1.0 - fx) + img.at(x1, y0) * fx;
  const double bot = img.at(x0, y1) * (1.0 - fx) + img.at(x1, y1) * fx;
  *out = top * (1.0 - fy) + bot * fy;
  return true;
}

struct LevelState {
  GrayImage fixed;
  GrayImage moving;
  GrayImage gx;
  GrayImage gy;
};

// ECC of warp(moving, p) against fixed over the in-bounds overlap.
double ecc_at(const LevelState& lv, const RigidTransform& p) {
  const double c = std::cos(p.theta);
  const double s = std::sin(p.theta);
  std::vector<double> a, b;
  a.reserve(lv.fixed.v.size());
  b.reserve(lv.fixed.v.size());
  for (int y = 0; y < lv.fixed.height; ++y) {
    for (int x = 0; x < lv.fixed.width; ++x) {
      const double mx = c * x - s * y + p.tx;
      const double my = s * x + c * y + p.ty;
      double w;
      if (!bilinear(lv.moving, mx, my, &w)) continue;
      a.push_back(lv.fixed.at(x, y));
      b.push_back(w);
    }
  }
  if (a.size() < 16) return 0.0;
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

// One coarse-to-fine level of forward-additive ECC maximization. Returns
// false on a failure that invalidates the whole estimate (degenerate Hessian,
// negative lambda denominator, vanishing overlap).
bool run_level(const LevelState& lv, const EccParams& params, RigidTransform* p,
               int* total_iters, bool* level_converged) {
  *level_converged = false;
  for (int iter = 0; iter < params.max_iters; ++iter) {
    ++*total_iters;
    const double c = std::cos(p->theta);
    const double s = std::sin(p->theta);

    // Gather the warped overlap: intensities, warped gradients, Jacobian.
    std::vector<double> tvec, wvec, j0, j1, j2;
    for (int y = 0; y < lv.fixed.height; ++y) {
      for (int x = 0; x < lv.fixed.width; ++x) {
        const double mx = c * x - s * y + p->tx;
        const double my = s * x + c * y + p->ty;
        double w, dx, dy;
        if (!bilinear(lv.moving, mx, my, &w)) continue;
        bilinear(lv.gx, mx, my, &dx);
        bilinear(lv.gy, mx, my, &dy);
        tvec.push_back(lv.fixed.at(x, y));
        wvec.push_back(w);
        // d(mx)/dtheta, d(my)/dtheta at the current angle
        const double dmx = -s * x - c * y;
        const double dmy = c * x - s * y;
        j0.push_back(dx * dmx + dy * dmy);
        j1.push_back(dx);
        j2.push_back(dy);
      }
    }
    const std::size_t n = tvec.size();
    if (n < 16) return false;

    const double tmean = mean_of(tvec);
    const double wmean = mean_of(wvec);
    for (std::size_t i = 0; i < n; ++i) {
      tvec[i] -= tmean;
      wvec[i] -= wmean;
    }

    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    Eigen::Vector3d gw = Eigen::Vector3d::Zero();
    Eigen::Vector3d gt = Eigen::Vector3d::Zero();
    double tw = 0.0, ww = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Vector3d g(j0[i], j1[i], j2[i]);
      h += g * g.transpose();
      gw += g * wvec[i];
      gt += g * tvec[i];
      tw += tvec[i] * wvec[i];
      ww += wvec[i] * wvec[i];
    }
    Eigen::LDLT<Eigen::Matrix3d> ldlt(h);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
    const Eigen::Vector3d hi_gw = ldlt.solve(gw);

    const double lambda_n = ww - gw.dot(hi_gw);
    const double lambda_d = tw - gt.dot(hi_gw);
    if (lambda_d <= 0.0) return false;  // wrong side of the optimum
    const double lambda = lambda_n / lambda_d;

    Eigen::Vector3d err_proj = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const double e = lambda * tvec[i] - wvec[i];
      err_proj += Eigen::Vector3d(j0[i], j1[i], j2[i]) * e;
    }
    const Eigen::Vector3d dp = ldlt.solve(err_proj);
    if (!dp.allFinite()) return false;

    p->theta += dp[0];
    p->tx += dp[1];
    p->ty += dp[2];
    if (dp.norm() < params.eps) {
      *level_converged = true;
      return true;
    }
  }
  return true;  // ran out of iterations at this level; caller decides
}

}  // namespace

double ecc_value(const GrayImage& a, const GrayImage& b) {
  if (a.width != b.width || a.height != b.height) {
    raise(errc::grid_mismatch, "ecc_value inputs differ in size");
  }
  if (a.v.empty()) {
    raise(errc::degenerate_image, "ecc_value on empty image");
  }
  const double ma = mean_of(a.v);
  const double mb = mean_of(b.v);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    const double da = a.v[i] - ma;
    const double db = b.v[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) {
    raise(errc::degenerate_image, "ecc_value on zero-variance image");
  }
  return sab / std::sqrt(saa * sbb);
}

double ecc_value(const CoreImage& a, const CoreImage& b) {
  return ecc_value(to_luminance(a), to_luminance(b));
}

RigidTransform ecc_align(const CoreImage& moving, const CoreImage& fixed,
                         const EccParams& params) {
  if (moving.width != fixed.width || moving.height != fixed.height) {
    raise(errc::grid_mismatch,
          "ecc_align inputs differ in size; pad them to a common frame first");
  }
  GrayImage mov = to_luminance(moving);
  GrayImage fix = to_luminance(fixed);
  if (variance_of(mov.v) <= 0.0 || variance_of(fix.v) <= 0.0) {
    raise(errc::degenerate_image, "ecc_align on zero-variance image");
  }

  // Build the pyramid, keeping the coarsest level at a workable size.
  int levels = std::max(1, params.pyramid_levels);
  const int min_dim = std::min(fixed.width, fixed.height);
  while (levels > 1 && (min_dim >> (levels - 1)) < 32) --levels;

  std::vector<LevelState> pyramid(static_cast<std::size_t>(levels));
  pyramid[0].fixed = std::move(fix);
  pyramid[0].moving = std::move(mov);
  for (int l = 1; l < levels; ++l) {
    pyramid[static_cast<std::size_t>(l)].fixed =
        downsample2(pyramid[static_cast<std::size_t>(l - 1)].fixed);
    pyramid[static_cast<std::size_t>(l)].moving =
        downsample2(pyramid[static_cast<std::size_t>(l - 1)].moving);
  }
  for (auto& lv : pyramid) gradients(lv.moving, &lv.gx, &lv.gy);

  RigidTransform p;  // identity start
  int total_iters = 0;
  bool ok = true;
  bool finest_converged = false;
  for (int l = levels - 1; l >= 0; --l) {
    bool level_converged = false;
    if (!run_level(pyramid[static_cast<std::size_t>(l)], params, &p, &total_iters,
                   &level_converged)) {
      ok = false;
      break;
    }
    if (l == 0) {
      finest_converged = level_converged;
    } else {
      // Translation doubles when moving one level finer; the angle carries.
      p.tx *= 2.0;
      p.ty *= 2.0;
    }
  }

  RigidTransform identity;
  identity.iterations = total_iters;
  if (!ok) {
    identity.converged = false;
    identity.final_ecc = ecc_at(pyramid[0], identity);
    return identity;
  }
  p.iterations = total_iters;
  p.final_ecc = ecc_at(pyramid[0], p);
  p.converged = finest_converged && p.final_ecc >= params.min_ecc;
  if (!p.converged) {
    identity.converged = false;
    identity.final_ecc = ecc_at(pyramid[0], identity);
    return identity;
  }
  return p;
}

CoreImage warp_rigid(const CoreImage& image, const RigidTransform& t, Rgb fill) {
  CoreImage out = image;
  const double c = std::cos(t.theta);
  const double s = std::sin(t.theta);
  const int w = image.width;
  const int h = image.height;
  const std::uint8_t fills[3] = {fill.r, fill.g, fill.b};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double sx = c * x - s * y + t.tx;
      const double sy = s * x + c * y + t.ty;
      std::uint8_t* dst = out.pixels.data() + out.offset(x, y, 0);
      if (sx < 0.0 || sy < 0.0 || sx > w - 1 || sy > h - 1) {
        dst[0] = fills[0];
        dst[1] = fills[1];
        dst[2] = fills[2];
        continue;
      }
      const int x0 = std::min(static_cast<int>(sx), w - 2 >= 0 ? w - 2 : 0);
      const int y0 = std::min(static_cast<int>(sy), h - 2 >= 0 ? h - 2 : 0);
      const int x1 = std::min(x0 + 1, w - 1);
      const int y1 = std::min(y0 + 1, h - 1);
      const double fx = sx - x0;
      const double fy = sy - y0;
      for (int ch = 0; ch < 3; ++ch) {
        const double top = image.at(x0, y0, ch) * (1.0 - fx) +
                           image.at(x1, y0, ch) * fx;
        const double bot = image.at(x0, y1, ch) * (1.0 - fx) +
                           image.at(x1, y1, ch) * fx;
        dst[ch] = round_to_u8(top * (1.0 - fy) + bot * fy);
      }
    }
  }
  return out;
}

}  // namespace stainpipe
