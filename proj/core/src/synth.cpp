#include "stainpipe/synth.hpp"

#include <cmath>
#include <filesystem>
#include <random>

#include <nlohmann/json.hpp>

#include "stainpipe/backend.hpp"
#include "stainpipe/error.hpp"
#include "stainpipe/fsutil.hpp"
#include "stainpipe/manifest.hpp"
#include "stainpipe/raster.hpp"

namespace stainpipe {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Uniform double in [0, 1) from the top 53 bits; identical on every platform,
// unlike the distribution adapters.
double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

// Bilinear value noise on a random lattice. The lattice covers the slide
// plus a margin so rigidly transformed sample coordinates stay in range.
class ValueNoise {
 public:
  ValueNoise(int width, int height, int spacing, std::mt19937_64& rng)
      : spacing_(spacing),
        nx_(2 + (width + 2 * kMargin) / spacing + 1),
        ny_(2 + (height + 2 * kMargin) / spacing + 1) {
    lattice_.resize(static_cast<std::size_t>(nx_) * ny_);
    for (double& v : lattice_) v = unit_double(rng);
  }

  double sample(double x, double y) const {
    const double fx = (x + kMargin) / spacing_;
    const double fy = (y + kMargin) / spacing_;
    const double cx = std::clamp(fx, 0.0, static_cast<double>(nx_ - 1) - 1e-9);
    const double cy = std::clamp(fy, 0.0, static_cast<double>(ny_ - 1) - 1e-9);
    const int ix = static_cast<int>(cx);
    const int iy = static_cast<int>(cy);
    const double tx = cx - ix;
    const double ty = cy - iy;
    const auto at = [&](int i, int j) {
      return lattice_[static_cast<std::size_t>(j) * nx_ + i];
    };
    const double top = at(ix, iy) + tx * (at(ix + 1, iy) - at(ix, iy));
    const double bot =
        at(ix, iy + 1) + tx * (at(ix + 1, iy + 1) - at(ix, iy + 1));
    return top + ty * (bot - top);
  }

 private:
  static constexpr int kMargin = 64;
  int spacing_;
  int nx_;
  int ny_;
  std::vector<double> lattice_;
};

// Two stain-concentration fields, sampled in tissue coordinates.
struct TissueField {
  ValueNoise h_coarse, h_fine, e_coarse, e_fine;

  TissueField(int w, int h, std::mt19937_64& rng)
      : h_coarse(w, h, 16, rng),
        h_fine(w, h, 4, rng),
        e_coarse(w, h, 16, rng),
        e_fine(w, h, 4, rng) {}

  double ch(double x, double y) const {
    return 0.15 + 0.35 * (0.75 * h_coarse.sample(x, y) +
                          0.25 * h_fine.sample(x, y));
  }
  double ce(double x, double y) const {
    return 0.15 + 0.35 * (0.75 * e_coarse.sample(x, y) +
                          0.25 * e_fine.sample(x, y));
  }
};

std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(
      std::lround(std::clamp(v, 0.0, 255.0)));
}

// Beer-Lambert rendering with the canonical hematoxylin/eosin vectors.
Rgb stained_color(double ch, double ce) {
  constexpr double kH[3] = {0.65, 0.70, 0.29};
  constexpr double kE[3] = {0.07, 0.99, 0.11};
  const auto channel = [&](int c) {
    const double od = ch * kH[c] + ce * kE[c];
    return clamp_u8(256.0 * std::pow(10.0, -od) - 1.0);
  };
  return Rgb{channel(0), channel(1), channel(2)};
}

// Faintly tinted pale rendering for the unstained scan.
Rgb unstained_color(double ch, double ce) {
  const double g0 = 225.0 - 70.0 * (ch + ce);
  return Rgb{clamp_u8(g0 + 6.0), clamp_u8(g0 + 2.0), clamp_u8(g0 - 6.0)};
}

struct Rigid {
  double theta = 0.0, tx = 0.0, ty = 0.0;

  void apply(double x, double y, double* u, double* v) const {
    const double c = std::cos(theta), s = std::sin(theta);
    *u = c * x - s * y + tx;
    *v = s * x + c * y + ty;
  }
  // Solves apply(x, y) = (u, v) for (x, y).
  void invert(double u, double v, double* x, double* y) const {
    const double c = std::cos(theta), s = std::sin(theta);
    const double du = u - tx, dv = v - ty;
    *x = c * du + s * dv;
    *y = -s * du + c * dv;
  }
};

// Renders one slide: the tissue disk (in tissue coordinates) viewed through
// the rigid transform, white elsewhere.
CoreImage render_slide(const SynthOptions& opts, const TissueField& field,
                       const Rigid& view, bool stained) {
  CoreImage img = CoreImage::filled(opts.slide_width, opts.slide_height, kWhite);
  img.mpp = opts.source_mpp;
  const double cx = opts.slide_width / 2.0;
  const double cy = opts.slide_height / 2.0;
  const double radius = 240.0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double u, v;
      view.apply(x + 0.5, y + 0.5, &u, &v);
      const double dx = u - cx, dy = v - cy;
      if (dx * dx + dy * dy > radius * radius) continue;
      const Rgb px = stained ? stained_color(field.ch(u, v), field.ce(u, v))
                             : unstained_color(field.ch(u, v), field.ce(u, v));
      const std::size_t off = img.offset(x, y, 0);
      img.pixels[off] = px.r;
      img.pixels[off + 1] = px.g;
      img.pixels[off + 2] = px.b;
    }
  }
  return img;
}

// 24-gon GeoJSON region around (cx, cy).
std::string roi_geojson(double cx, double cy, double radius,
                        const std::string& label) {
  nlohmann::ordered_json ring = nlohmann::ordered_json::array();
  for (int k = 0; k <= 24; ++k) {
    const double phi = 2.0 * kPi * (k % 24) / 24.0;
    ring.push_back({cx + radius * std::cos(phi), cy + radius * std::sin(phi)});
  }
  nlohmann::ordered_json feature;
  feature["type"] = "Feature";
  feature["properties"]["label"] = label;
  feature["geometry"]["type"] = "Polygon";
  feature["geometry"]["coordinates"] = nlohmann::ordered_json::array({ring});
  nlohmann::ordered_json root;
  root["type"] = "FeatureCollection";
  root["features"] = nlohmann::ordered_json::array({feature});
  return root.dump(2) + "\n";
}

// Reference tiles rendered directly at the working resolution.
CoreImage render_reference(int width, int height, double radius,
                           std::uint64_t seed, bool stained) {
  std::mt19937_64 rng(seed);
  TissueField field(width, height, rng);
  CoreImage img = CoreImage::filled(width, height, kWhite);
  img.mpp = 0.5;
  const double cx = width / 2.0, cy = height / 2.0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      if (dx * dx + dy * dy > radius * radius) continue;
      const double u = x + 0.5, v = y + 0.5;
      const Rgb px = stained ? stained_color(field.ch(u, v), field.ce(u, v))
                             : unstained_color(field.ch(u, v), field.ce(u, v));
      const std::size_t off = img.offset(x, y, 0);
      img.pixels[off] = px.r;
      img.pixels[off + 1] = px.g;
      img.pixels[off + 2] = px.b;
    }
  }
  return img;
}

}  // namespace

std::string generate_synthetic_dataset(const SynthOptions& opts) {
  if (opts.cores < 1 || opts.slide_width < 600 || opts.slide_height < 600) {
    raise(errc::invalid_config, "synthetic dataset needs >= 1 core and "
                                ">= 600x600 slides");
  }
  const fs::path root(opts.out_dir);
  fs::create_directories(root / "slides");
  fs::create_directories(root / "rois");
  fs::create_directories(root / "reference");

  nlohmann::ordered_json manifest;
  manifest["cores"] = nlohmann::ordered_json::array();

  for (int i = 0; i < opts.cores; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "core_%02d", i + 1);
    std::mt19937_64 rng(opts.seed + 1000 * static_cast<std::uint64_t>(i));
    TissueField field(opts.slide_width, opts.slide_height, rng);

    // The stained scan views the same tissue through a small rigid motion;
    // the unstained scan is the identity view.
    Rigid stained_view;
    stained_view.theta = (unit_double(rng) - 0.5) * 2.0 * (0.6 * kPi / 180.0);
    stained_view.tx = (unit_double(rng) - 0.5) * 6.0;
    stained_view.ty = (unit_double(rng) - 0.5) * 6.0;

    const CoreImage gus = render_slide(opts, field, Rigid{}, false);
    const CoreImage ghe = render_slide(opts, field, stained_view, true);
    const std::string gus_file = "slides/" + std::string(id) + "_gus.png";
    const std::string ghe_file = "slides/" + std::string(id) + "_ghe.png";
    save_png(gus, (root / gus_file).string());
    save_png(ghe, (root / ghe_file).string());

    // Tissue center in each slide's own pixel coordinates.
    const double cx = opts.slide_width / 2.0;
    const double cy = opts.slide_height / 2.0;
    double scx, scy;
    stained_view.invert(cx, cy, &scx, &scy);
    const std::string gus_roi = "rois/" + std::string(id) + "_gus.geojson";
    const std::string ghe_roi = "rois/" + std::string(id) + "_ghe.geojson";
    write_text_file((root / gus_roi).string(),
                    roi_geojson(cx, cy, 252.0, std::string(id) + " unstained"));
    write_text_file((root / ghe_roi).string(),
                    roi_geojson(scx, scy, 252.0, std::string(id) + " stained"));

    nlohmann::ordered_json entry;
    entry["core_id"] = id;
    entry["unstained_path"] = gus_file;
    entry["stained_path"] = ghe_file;
    entry["roi_unstained"] = gus_roi;
    entry["roi_stained"] = ghe_roi;
    manifest["cores"].push_back(entry);
  }

  save_png(render_reference(360, 320, 130.0, opts.seed + 777001, true),
           (root / "reference/he_reference.png").string());
  save_png(render_reference(360, 320, 130.0, opts.seed + 777002, false),
           (root / "reference/unstained_reference.png").string());
  manifest["reference"]["he_reference_path"] = "reference/he_reference.png";
  manifest["reference"]["unstained_reference_path"] =
      "reference/unstained_reference.png";

  const std::string manifest_path = (root / "manifest.json").string();
  write_text_file(manifest_path, manifest.dump(2) + "\n");

  // Mutually inverse affine mocks: the restain undoes the destain exactly
  // (up to 8-bit quantization) on the synthetic tissue gamut.
  RunConfig cfg;
  cfg.target_mpp = 0.5;
  cfg.patch_size = 64;
  cfg.destain_backend = BackendSpec::make_affine(
      {0.6, 0, 0, 0, 0.8, 0, 0, 0, 0.7}, {0, 30.0, 0});
  cfg.stain_backend = BackendSpec::make_affine(
      {1.0 / 0.6, 0, 0, 0, 1.25, 0, 0, 0, 1.0 / 0.7}, {0, -37.5, 0});
  write_text_file((root / "config.json").string(), cfg.to_json() + "\n");

  return manifest_path;
}

CoreImage synth_texture(int width, int height, std::uint64_t seed) {
  if (width < 1 || height < 1) {
    raise(errc::range_error, "texture dims must be positive");
  }
  CoreImage img = CoreImage::filled(width, height, kBlack);
  for (int c = 0; c < 3; ++c) {
    std::mt19937_64 rng(seed + 31 * static_cast<std::uint64_t>(c));
    ValueNoise coarse(width, height, 64, rng);
    ValueNoise mid(width, height, 16, rng);
    ValueNoise fine(width, height, 4, rng);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double v = 0.6 * coarse.sample(x, y) + 0.3 * mid.sample(x, y) +
                         0.1 * fine.sample(x, y);
        img.pixels[img.offset(x, y, c)] = clamp_u8(15.0 + 225.0 * v);
      }
    }
  }
  return img;
}

}  // namespace stainpipe
