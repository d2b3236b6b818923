#include "stainpipe/macenko.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include <nlohmann/json.hpp>

#include "stainpipe/error.hpp"

namespace stainpipe {

namespace {

constexpr std::size_t kMinOdPixels = 100;

// linear-interpolation percentile over a sorted copy
double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double rank = std::clamp(q, 0.0, 100.0) / 100.0 *
                      static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

Eigen::Vector3d pixel_od(const CoreImage& core, int x, int y) {
  return {optical_density(core.at(x, y, 0)), optical_density(core.at(x, y, 1)),
          optical_density(core.at(x, y, 2))};
}

bool keep_od(const Eigen::Vector3d& od, double beta, OdRejectMode mode) {
  const bool r = od[0] >= beta, g = od[1] >= beta, b = od[2] >= beta;
  return mode == OdRejectMode::all_below ? (r || g || b) : (r && g && b);
}

Eigen::Matrix<double, 3, 2> profile_matrix(const StainProfile& p) {
  Eigen::Matrix<double, 3, 2> m;
  for (int c = 0; c < 3; ++c)
    for (int s = 0; s < 2; ++s) m(c, s) = p.stain_matrix[c][s];
  return m;
}

// least-squares concentrations, clipped at zero
Eigen::Matrix<double, 2, 3> pinv2x3(const Eigen::Matrix<double, 3, 2>& m) {
  return (m.transpose() * m).inverse() * m.transpose();
}

Eigen::Vector3d unit_nonneg(Eigen::Vector3d v) {
  for (int i = 0; i < 3; ++i) v[i] = std::max(v[i], 0.0);
  const double n = v.norm();
  if (n <= 0.0) raise(errc::degenerate_stain, "stain direction collapsed to zero");
  return v / n;
}

}  // namespace

double optical_density(std::uint8_t value) {
  return -std::log10((static_cast<double>(value) + 1.0) / 256.0);
}

double od_to_intensity(double od) { return 256.0 * std::pow(10.0, -od) - 1.0; }

StainProfile estimate_stain_profile(const CoreImage& core, const TissueMask& mask,
                                    const MacenkoParams& params) {
  if (mask.width != core.width || mask.height != core.height)
    raise(errc::grid_mismatch, "tissue mask dims do not match the image");

  std::vector<Eigen::Vector3d> od;
  od.reserve(mask.tissue_count());
  for (int y = 0; y < core.height; ++y)
    for (int x = 0; x < core.width; ++x) {
      if (!mask.tissue(x, y)) continue;
      Eigen::Vector3d v = pixel_od(core, x, y);
      if (keep_od(v, params.od_beta, params.reject)) od.push_back(v);
    }
  if (od.size() < kMinOdPixels)
    raise(errc::insufficient_tissue,
          "only " + std::to_string(od.size()) +
              " optical-density pixels above beta (need " +
              std::to_string(kMinOdPixels) + ")");

  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& v : od) mean += v;
  mean /= static_cast<double>(od.size());

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& v : od) {
    const Eigen::Vector3d d = v - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(od.size());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  if (eig.info() != Eigen::Success)
    raise(errc::degenerate_stain, "eigendecomposition failed");
  const Eigen::Vector3d evals = eig.eigenvalues();  // ascending
  if (evals[1] < 1e-10 || evals[1] < 1e-4 * evals[2])
    raise(errc::degenerate_stain,
          "optical-density cloud is rank-deficient (single stain?)");

  Eigen::Vector3d e1 = eig.eigenvectors().col(2);
  Eigen::Vector3d e2 = eig.eigenvectors().col(1);
  // fix signs: e1 toward the cloud so angles stay in (-pi/2, pi/2)
  if (e1.dot(mean) < 0.0) e1 = -e1;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(e2[i]) > 1e-12) {
      if (e2[i] < 0.0) e2 = -e2;
      break;
    }
  }

  std::vector<double> angles;
  angles.reserve(od.size());
  for (const auto& v : od) angles.push_back(std::atan2(v.dot(e2), v.dot(e1)));
  const double a_lo = percentile(angles, params.angle_alpha);
  const double a_hi = percentile(angles, 100.0 - params.angle_alpha);

  Eigen::Vector3d v_lo = unit_nonneg(std::cos(a_lo) * e1 + std::sin(a_lo) * e2);
  Eigen::Vector3d v_hi = unit_nonneg(std::cos(a_hi) * e1 + std::sin(a_hi) * e2);

  // hematoxylin carries the larger blue-channel OD weight
  Eigen::Vector3d hema = v_lo, eosin = v_hi;
  if (v_hi[2] > v_lo[2]) std::swap(hema, eosin);

  Eigen::Matrix<double, 3, 2> m;
  m.col(0) = hema;
  m.col(1) = eosin;

  const Eigen::Matrix<double, 2, 3> pinv = pinv2x3(m);
  std::vector<double> c_h, c_e;
  c_h.reserve(od.size());
  c_e.reserve(od.size());
  for (const auto& v : od) {
    const Eigen::Vector2d c = pinv * v;
    c_h.push_back(std::max(c[0], 0.0));
    c_e.push_back(std::max(c[1], 0.0));
  }

  StainProfile profile;
  for (int c = 0; c < 3; ++c)
    for (int s = 0; s < 2; ++s) profile.stain_matrix[c][s] = m(c, s);
  profile.max_concentrations = {
      percentile(std::move(c_h), params.concentration_percentile),
      percentile(std::move(c_e), params.concentration_percentile)};
  profile.od_beta = params.od_beta;
  profile.angle_alpha = params.angle_alpha;
  if (profile.max_concentrations[0] <= 1e-9 || profile.max_concentrations[1] <= 1e-9)
    raise(errc::degenerate_stain, "a stain has no measurable concentration");
  return profile;
}

CoreImage normalize_stains(const CoreImage& core, const StainProfile& source,
                           const StainProfile& target) {
  const Eigen::Matrix<double, 3, 2> m_src = profile_matrix(source);
  const Eigen::Matrix<double, 3, 2> m_tgt = profile_matrix(target);
  const Eigen::Matrix<double, 2, 3> pinv = pinv2x3(m_src);
  const double scale_h = target.max_concentrations[0] / source.max_concentrations[0];
  const double scale_e = target.max_concentrations[1] / source.max_concentrations[1];

  CoreImage out = core;
  for (int y = 0; y < core.height; ++y) {
    for (int x = 0; x < core.width; ++x) {
      const Eigen::Vector3d od = pixel_od(core, x, y);
      Eigen::Vector2d c = pinv * od;
      c[0] = std::max(c[0], 0.0) * scale_h;
      c[1] = std::max(c[1], 0.0) * scale_e;
      const Eigen::Vector3d od_out = m_tgt * c;
      for (int ch = 0; ch < 3; ++ch)
        out.at(x, y, ch) = round_to_u8(od_to_intensity(od_out[ch]));
    }
  }
  return out;
}

StainProfile StainProfile::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    raise(errc::parse_error, std::string("stain profile: ") + e.what());
  }
  StainProfile p;
  const auto& m = j.at("stain_matrix");
  if (!m.is_array() || m.size() != 6)
    raise(errc::parse_error, "stain_matrix must hold 6 row-major values");
  for (int c = 0; c < 3; ++c)
    for (int s = 0; s < 2; ++s) p.stain_matrix[c][s] = m[c * 2 + s].get<double>();
  p.max_concentrations[0] = j.at("max_concentrations")[0].get<double>();
  p.max_concentrations[1] = j.at("max_concentrations")[1].get<double>();
  p.od_beta = j.value("od_beta", 0.15);
  p.angle_alpha = j.value("angle_alpha", 1.0);
  return p;
}

std::string StainProfile::to_json() const {
  nlohmann::json j;
  auto& m = j["stain_matrix"] = nlohmann::json::array();
  for (int c = 0; c < 3; ++c)
    for (int s = 0; s < 2; ++s) m.push_back(stain_matrix[c][s]);
  j["max_concentrations"] = {max_concentrations[0], max_concentrations[1]};
  j["od_beta"] = od_beta;
  j["angle_alpha"] = angle_alpha;
  return j.dump(2);
}

}  // namespace stainpipe
