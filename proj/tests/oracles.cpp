#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace oracle {
namespace {

using stainpipe::CoreImage;
using stainpipe::Point2d;

// Classic recursive adaptive Simpson; eps is an absolute tolerance.
template <typename F>
double simpson(F&& f, double a, double m, double b, double fa, double fm,
               double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <typename F>
double adaptive(F&& f, double a, double b, double fa, double fm, double fb,
                double whole, double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson(f, a, lm, m, fa, flm, fm);
  const double right = simpson(f, m, rm, b, fm, frm, fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * eps) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive(f, a, m, fa, flm, fm, left, eps * 0.5, depth - 1) +
         adaptive(f, m, b, fm, frm, fb, right, eps * 0.5, depth - 1);
}

template <typename F>
double integrate(F&& f, double a, double b, double eps) {
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fm = f(m);
  const double fb = f(b);
  return adaptive(f, a, b, fa, fm, fb, simpson(f, a, m, b, fa, fm, fb), eps,
                  40);
}

double luminance01(const CoreImage& img, int x, int y) {
  const double r = img.at(x, y, 0) / 255.0;
  const double g = img.at(x, y, 1) / 255.0;
  const double b = img.at(x, y, 2) / 255.0;
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

}  // namespace

bool point_in_ring(double px, double py, const std::vector<Point2d>& ring) {
  bool inside = false;
  const std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const double xi = ring[i].x, yi = ring[i].y;
    const double xj = ring[j].x, yj = ring[j].y;
    if ((yi > py) != (yj > py)) {
      const double cross = xi + (py - yi) / (yj - yi) * (xj - xi);
      if (px < cross) inside = !inside;
    }
  }
  return inside;
}

bool point_in_polygon(double px, double py, const stainpipe::RoiPolygon& roi) {
  bool inside = point_in_ring(px, py, roi.exterior);
  for (const auto& hole : roi.holes) {
    if (point_in_ring(px, py, hole)) inside = !inside;
  }
  return inside;
}

double pcc(const CoreImage& a, const CoreImage& b) {
  const std::size_t n = a.pixels.size();
  long double sa = 0.0L, sb = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    sa += a.pixels[i] / 255.0L;
    sb += b.pixels[i] / 255.0L;
  }
  const long double ma = sa / n;
  const long double mb = sb / n;
  long double sab = 0.0L, saa = 0.0L, sbb = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const long double da = a.pixels[i] / 255.0L - ma;
    const long double db = b.pixels[i] / 255.0L - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  return static_cast<double>(sab / std::sqrt(saa * sbb));
}

double mse(const CoreImage& a, const CoreImage& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const long double d = (a.pixels[i] - b.pixels[i]) / 255.0L;
    s += d * d;
  }
  return static_cast<double>(s / a.pixels.size());
}

double psnr(const CoreImage& a, const CoreImage& b) {
  const double m = mse(a, b);
  if (m <= 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(m);
}

double ssim(const CoreImage& a, const CoreImage& b, int window, double sigma,
            double k1, double k2) {
  const int w = window;
  const int half = w / 2;
  std::vector<double> kernel(static_cast<std::size_t>(w) * w);
  double ksum = 0.0;
  for (int ky = 0; ky < w; ++ky) {
    for (int kx = 0; kx < w; ++kx) {
      const double g = std::exp(-((kx - half) * (kx - half) +
                                  (ky - half) * (ky - half)) /
                                (2.0 * sigma * sigma));
      kernel[static_cast<std::size_t>(ky) * w + kx] = g;
      ksum += g;
    }
  }
  for (double& k : kernel) k /= ksum;

  const double c1 = k1 * k1;
  const double c2 = k2 * k2;
  long double total = 0.0L;
  std::size_t count = 0;
  for (int y0 = 0; y0 + w <= a.height; ++y0) {
    for (int x0 = 0; x0 + w <= a.width; ++x0) {
      double mua = 0.0, mub = 0.0;
      for (int ky = 0; ky < w; ++ky) {
        for (int kx = 0; kx < w; ++kx) {
          const double k = kernel[static_cast<std::size_t>(ky) * w + kx];
          mua += k * luminance01(a, x0 + kx, y0 + ky);
          mub += k * luminance01(b, x0 + kx, y0 + ky);
        }
      }
      double va = 0.0, vb = 0.0, cov = 0.0;
      for (int ky = 0; ky < w; ++ky) {
        for (int kx = 0; kx < w; ++kx) {
          const double k = kernel[static_cast<std::size_t>(ky) * w + kx];
          const double da = luminance01(a, x0 + kx, y0 + ky) - mua;
          const double db = luminance01(b, x0 + kx, y0 + ky) - mub;
          va += k * da * da;
          vb += k * db * db;
          cov += k * da * db;
        }
      }
      total += ((2.0 * mua * mub + c1) * (2.0 * cov + c2)) /
               ((mua * mua + mub * mub + c1) * (va + vb + c2));
      ++count;
    }
  }
  return static_cast<double>(total / count);
}

void mean_sd(const std::vector<double>& values, double* mean, double* sd) {
  long double s = 0.0L;
  for (double v : values) s += v;
  const long double m = values.empty() ? 0.0L : s / values.size();
  long double ss = 0.0L;
  for (double v : values) ss += (v - m) * (v - m);
  *mean = static_cast<double>(m);
  *sd = values.size() > 1
            ? static_cast<double>(std::sqrt(ss / (values.size() - 1)))
            : 0.0;
}

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  // Integrate the shorter tail so the possibly singular endpoint (exponent
  // below zero at t = 1) never enters the integration range.
  if (x > 0.5) return 1.0 - incomplete_beta(b, a, 1.0 - x);
  // t = u^2: integrand 2 u^(2a-1) (1 - u^2)^(b-1) over [0, sqrt(x)]. With
  // a >= 1/2 the lower endpoint is finite, and 1 - u^2 >= 1/2 holds on the
  // whole range because x <= 1/2.
  // The 1/B(a, b) normalization is folded into the integrand so the
  // absolute integration tolerance applies to the regularized result
  // (dividing afterwards would amplify quadrature error when B is tiny).
  const double log_beta =
      std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  auto f = [a, b, log_beta](double u) {
    return 2.0 * std::exp(-log_beta) * std::pow(u, 2.0 * a - 1.0) *
           std::pow(1.0 - u * u, b - 1.0);
  };
  return integrate(f, 0.0, std::sqrt(x), 1e-14);
}

double f_survival(double f, double d1, double d2) {
  if (f <= 0.0) return 1.0;
  return incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

double t_critical_two_sided(double alpha, double df) {
  // Two-sided tail of |T_df| at t: I_{df/(df+t^2)}(df/2, 1/2).
  auto tail = [df](double t) {
    return incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
  };
  double lo = 0.0, hi = 1.0;
  while (tail(hi) > alpha) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (tail(mid) > alpha ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Anova anova(const std::vector<std::vector<double>>& groups) {
  std::size_t total_n = 0;
  long double grand_sum = 0.0L;
  for (const auto& g : groups) {
    total_n += g.size();
    for (double v : g) grand_sum += v;
  }
  const long double grand_mean = grand_sum / total_n;

  long double ss_between = 0.0L, ss_within = 0.0L;
  for (const auto& g : groups) {
    long double s = 0.0L;
    for (double v : g) s += v;
    const long double gm = s / g.size();
    ss_between += g.size() * (gm - grand_mean) * (gm - grand_mean);
    for (double v : g) ss_within += (v - gm) * (v - gm);
  }

  Anova out;
  out.df_between = groups.size() - 1;
  out.df_within = total_n - groups.size();
  const long double ms_between = ss_between / out.df_between;
  const long double ms_within = ss_within / out.df_within;
  out.ms_within = static_cast<double>(ms_within);
  if (ms_within <= 0.0L) {
    if (ms_between <= 0.0L) throw std::domain_error("anova undefined");
    out.f = std::numeric_limits<double>::infinity();
    out.p = 0.0;
    return out;
  }
  out.f = static_cast<double>(ms_between / ms_within);
  out.p = f_survival(out.f, static_cast<double>(out.df_between),
                     static_cast<double>(out.df_within));
  return out;
}

std::vector<LsdFlag> lsd_flags(const std::vector<std::vector<double>>& groups,
                               double alpha) {
  const Anova base = anova(groups);
  const double t = t_critical_two_sided(alpha,
                                        static_cast<double>(base.df_within));
  std::vector<double> means(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    long double s = 0.0L;
    for (double v : groups[i]) s += v;
    means[i] = static_cast<double>(s / groups[i].size());
  }
  std::vector<LsdFlag> out;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      const double thr = t * std::sqrt(base.ms_within *
                                       (1.0 / groups[i].size() +
                                        1.0 / groups[j].size()));
      out.push_back({i, j, std::abs(means[i] - means[j]) > thr});
    }
  }
  return out;
}

}  // namespace oracle
