#include "stainpipe/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "stainpipe/error.hpp"

namespace stainpipe {

const char* comparison_name(Comparison c) {
  switch (c) {
    case Comparison::gus_vs_vds: return "gus_vs_vds";
    case Comparison::ghe_vs_vher: return "ghe_vs_vher";
    case Comparison::ghe_vs_vhe: return "ghe_vs_vhe";
    case Comparison::vhe_vs_vher: return "vhe_vs_vher";
    case Comparison::custom: return "custom";
  }
  return "custom";
}

Comparison comparison_from_name(const std::string& name) {
  if (name == "gus_vs_vds") return Comparison::gus_vs_vds;
  if (name == "ghe_vs_vher") return Comparison::ghe_vs_vher;
  if (name == "ghe_vs_vhe") return Comparison::ghe_vs_vhe;
  if (name == "vhe_vs_vher") return Comparison::vhe_vs_vher;
  return Comparison::custom;
}

namespace {

void require_same_dims(const CoreImage& a, const CoreImage& b, const char* op) {
  if (a.width != b.width || a.height != b.height) {
    raise(errc::grid_mismatch, std::string(op) + " inputs differ in size");
  }
}

}  // namespace

double pcc(const CoreImage& a, const CoreImage& b) {
  require_same_dims(a, b, "pcc");
  const std::size_t n = a.pixels.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a.pixels[i];
    mb += b.pixels[i];
  }
  ma /= static_cast<double>(n) * 255.0;
  mb /= static_cast<double>(n) * 255.0;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a.pixels[i] / 255.0 - ma;
    const double db = b.pixels[i] / 255.0 - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) {
    raise(errc::degenerate_image, "pcc on zero-variance image");
  }
  return sab / std::sqrt(saa * sbb);
}

double mse(const CoreImage& a, const CoreImage& b) {
  require_same_dims(a, b, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = (a.pixels[i] - b.pixels[i]) / 255.0;
    s += d * d;
  }
  return s / static_cast<double>(a.pixels.size());
}

double psnr_from_mse(double mse_value) {
  if (mse_value <= 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse_value);
}

double psnr(const CoreImage& a, const CoreImage& b) {
  return psnr_from_mse(mse(a, b));
}

double ssim(const CoreImage& a, const CoreImage& b, const SsimParams& params) {
  require_same_dims(a, b, "ssim");
  if (a.width < params.window || a.height < params.window) {
    raise(errc::too_small, "ssim input smaller than the window");
  }
  const GrayImage ga = to_luminance(a);
  const GrayImage gb = to_luminance(b);

  // Normalized Gaussian window.
  const int w = params.window;
  const int half = w / 2;
  std::vector<double> kernel(static_cast<std::size_t>(w) * w);
  double ksum = 0.0;
  for (int y = 0; y < w; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = x - half;
      const double dy = y - half;
      const double g =
          std::exp(-(dx * dx + dy * dy) / (2.0 * params.sigma * params.sigma));
      kernel[static_cast<std::size_t>(y) * w + x] = g;
      ksum += g;
    }
  }
  for (double& k : kernel) k /= ksum;

  const double c1 = params.k1 * params.k1;
  const double c2 = params.k2 * params.k2;
  double total = 0.0;
  std::size_t count = 0;
  for (int y0 = 0; y0 + w <= a.height; ++y0) {
    for (int x0 = 0; x0 + w <= a.width; ++x0) {
      double mua = 0.0, mub = 0.0;
      for (int y = 0; y < w; ++y) {
        for (int x = 0; x < w; ++x) {
          const double k = kernel[static_cast<std::size_t>(y) * w + x];
          mua += k * ga.at(x0 + x, y0 + y);
          mub += k * gb.at(x0 + x, y0 + y);
        }
      }
      double va = 0.0, vb = 0.0, cov = 0.0;
      for (int y = 0; y < w; ++y) {
        for (int x = 0; x < w; ++x) {
          const double k = kernel[static_cast<std::size_t>(y) * w + x];
          const double da = ga.at(x0 + x, y0 + y) - mua;
          const double db = gb.at(x0 + x, y0 + y) - mub;
          va += k * da * da;
          vb += k * db * db;
          cov += k * da * db;
        }
      }
      const double num = (2.0 * mua * mub + c1) * (2.0 * cov + c2);
      const double den = (mua * mua + mub * mub + c1) * (va + vb + c2);
      total += num / den;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

MetricRecord evaluate_pair(const CoreImage& a, const CoreImage& b, bool do_align,
                           const EccParams& ecc_params,
                           const SsimParams& ssim_params) {
  require_same_dims(a, b, "evaluate_pair");
  MetricRecord rec;
  rec.core_id = a.core_id;
  const CoreImage* rhs = &b;
  CoreImage warped;
  if (do_align) {
    rec.alignment = ecc_align(b, a, ecc_params);
    if (rec.alignment.converged &&
        !rec.alignment.is_identity(0.0, 0.0)) {
      warped = warp_rigid(b, rec.alignment, kWhite);
      rhs = &warped;
      rec.aligned = true;
    } else if (rec.alignment.converged) {
      rec.aligned = true;  // identity alignment: pair already registered
    }
  }
  rec.pcc = pcc(a, *rhs);
  rec.mse = mse(a, *rhs);
  rec.psnr = psnr_from_mse(rec.mse);
  rec.ssim = ssim(a, *rhs, ssim_params);
  return rec;
}

}  // namespace stainpipe
