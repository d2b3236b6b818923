#include "stainpipe/manifest.hpp"

#include <algorithm>
#include <filesystem>
#include <set>

#include <nlohmann/json.hpp>

#include "stainpipe/error.hpp"
#include "stainpipe/fsutil.hpp"

namespace stainpipe {

namespace fs = std::filesystem;

namespace {

std::string resolve(const std::string& base_dir, const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base_dir) / path).lexically_normal().string();
}

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) {
    raise(errc::invalid_config, what + " does not exist: " + path);
  }
}

const std::set<std::string>& known_roles() {
  static const std::set<std::string> roles = {
      "gus", "ghe", "gus_raw", "ghe_raw", "vds", "vhe", "vher"};
  return roles;
}

}  // namespace

Manifest Manifest::load(const std::string& path) {
  const std::string base = fs::path(path).parent_path().string();
  return parse(read_text_file(path), base);
}

Manifest Manifest::parse(const std::string& text, const std::string& base_dir) {
  Manifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& jc : j.at("cores")) {
      CoreEntry e;
      e.core_id = jc.at("core_id").get<std::string>();
      e.unstained_path = resolve(base_dir, jc.at("unstained_path").get<std::string>());
      e.stained_path = resolve(base_dir, jc.at("stained_path").get<std::string>());
      e.roi_unstained = resolve(base_dir, jc.at("roi_unstained").get<std::string>());
      e.roi_stained = resolve(base_dir, jc.at("roi_stained").get<std::string>());
      if (jc.contains("source_mpp")) {
        e.source_mpp = jc.at("source_mpp").get<double>();
      }
      m.cores.push_back(std::move(e));
    }
    if (j.contains("reference")) {
      const auto& jr = j.at("reference");
      if (jr.contains("he_reference_path")) {
        m.reference.he_reference_path =
            resolve(base_dir, jr.at("he_reference_path").get<std::string>());
      }
      if (jr.contains("unstained_reference_path")) {
        m.reference.unstained_reference_path =
            resolve(base_dir, jr.at("unstained_reference_path").get<std::string>());
      }
    }
    if (j.contains("comparisons")) {
      m.comparisons = j.at("comparisons").get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    raise(errc::parse_error, std::string("malformed manifest: ") + e.what());
  }

  if (m.cores.empty()) {
    raise(errc::invalid_config, "manifest lists no cores");
  }
  std::set<std::string> ids;
  for (const auto& core : m.cores) {
    if (core.core_id.empty()) {
      raise(errc::invalid_config, "manifest core with empty core_id");
    }
    if (!ids.insert(core.core_id).second) {
      raise(errc::invalid_config, "duplicate core_id: " + core.core_id);
    }
    if (core.source_mpp && *core.source_mpp <= 0.0) {
      raise(errc::invalid_config, "source_mpp must be positive: " + core.core_id);
    }
    require_file(core.unstained_path, "unstained scan of " + core.core_id);
    require_file(core.stained_path, "stained scan of " + core.core_id);
    require_file(core.roi_unstained, "unstained roi of " + core.core_id);
    require_file(core.roi_stained, "stained roi of " + core.core_id);
  }
  if (!m.reference.he_reference_path.empty()) {
    require_file(m.reference.he_reference_path, "stain reference");
  }
  if (!m.reference.unstained_reference_path.empty()) {
    require_file(m.reference.unstained_reference_path, "unstained reference");
  }
  return m;
}

const std::vector<ComparisonDef>& default_comparisons() {
  static const std::vector<ComparisonDef> defs = {
      {"gus_vs_vds", "gus", "vds", true, true},
      {"ghe_vs_vher", "ghe", "vher", true, true},
      {"ghe_vs_vhe", "ghe", "vhe", true, true},
      {"vhe_vs_vher", "vhe", "vher", true, true},
      {"raw_gus_vs_vds", "gus_raw", "vds", false, true},
      {"raw_ghe_vs_vher", "ghe_raw", "vher", false, true},
      {"ghe_vs_vds", "ghe", "vds", false, true},
      {"vher_vs_vds", "vher", "vds", false, true},
  };
  return defs;
}

RunConfig RunConfig::load(const std::string& path) {
  return parse(read_text_file(path));
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig cfg;
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) raise(errc::parse_error, "config root must be a JSON object");
    if (j.contains("target_mpp")) cfg.target_mpp = j.at("target_mpp").get<double>();
    if (j.contains("strip_height")) cfg.strip_height = j.at("strip_height").get<int>();
    if (j.contains("patch_size")) cfg.patch_size = j.at("patch_size").get<int>();
    if (j.contains("tissue_min")) cfg.tissue_min = j.at("tissue_min").get<double>();
    if (j.contains("mask")) {
      const auto& jm = j.at("mask");
      if (jm.contains("strategy")) {
        const std::string s = jm.at("strategy").get<std::string>();
        if (s == "luminance_threshold") {
          cfg.mask_strategy = MaskStrategy::luminance_threshold;
        } else if (s == "otsu") {
          cfg.mask_strategy = MaskStrategy::otsu;
        } else {
          raise(errc::invalid_config, "unknown mask strategy: " + s);
        }
      }
      if (jm.contains("threshold")) {
        cfg.mask_threshold = jm.at("threshold").get<double>();
      }
    }
    if (j.contains("macenko")) {
      const auto& jm = j.at("macenko");
      if (jm.contains("od_beta")) cfg.macenko.od_beta = jm.at("od_beta").get<double>();
      if (jm.contains("angle_alpha")) {
        cfg.macenko.angle_alpha = jm.at("angle_alpha").get<double>();
      }
      if (jm.contains("concentration_percentile")) {
        cfg.macenko.concentration_percentile =
            jm.at("concentration_percentile").get<double>();
      }
      if (jm.contains("reject")) {
        const std::string r = jm.at("reject").get<std::string>();
        if (r == "all_below") {
          cfg.macenko.reject = OdRejectMode::all_below;
        } else if (r == "any_below") {
          cfg.macenko.reject = OdRejectMode::any_below;
        } else {
          raise(errc::invalid_config, "unknown od reject mode: " + r);
        }
      }
    }
    if (j.contains("channel_weights")) {
      const auto& w = j.at("channel_weights");
      if (w.size() != 3) {
        raise(errc::invalid_config, "channel_weights must have 3 entries");
      }
      cfg.channel_weights.r = w[0].get<double>();
      cfg.channel_weights.g = w[1].get<double>();
      cfg.channel_weights.b = w[2].get<double>();
    }
    if (j.contains("backends")) {
      const auto& jb = j.at("backends");
      if (jb.contains("destain")) {
        cfg.destain_backend = BackendSpec::from_json(jb.at("destain").dump());
      }
      if (jb.contains("stain")) {
        cfg.stain_backend = BackendSpec::from_json(jb.at("stain").dump());
      }
    }
    if (j.contains("ecc")) {
      const auto& je = j.at("ecc");
      if (je.contains("max_iters")) cfg.ecc.max_iters = je.at("max_iters").get<int>();
      if (je.contains("eps")) cfg.ecc.eps = je.at("eps").get<double>();
      if (je.contains("pyramid_levels")) {
        cfg.ecc.pyramid_levels = je.at("pyramid_levels").get<int>();
      }
      if (je.contains("min_ecc")) cfg.ecc.min_ecc = je.at("min_ecc").get<double>();
    }
    if (j.contains("align")) cfg.align = j.at("align").get<bool>();
    if (j.contains("ssim")) {
      const auto& js = j.at("ssim");
      if (js.contains("window")) cfg.ssim.window = js.at("window").get<int>();
      if (js.contains("sigma")) cfg.ssim.sigma = js.at("sigma").get<double>();
      if (js.contains("k1")) cfg.ssim.k1 = js.at("k1").get<double>();
      if (js.contains("k2")) cfg.ssim.k2 = js.at("k2").get<double>();
    }
    if (j.contains("stats")) {
      const auto& js = j.at("stats");
      if (js.contains("alpha")) cfg.stats.alpha = js.at("alpha").get<double>();
      if (js.contains("comparisons")) {
        cfg.stats.comparisons =
            js.at("comparisons").get<std::vector<std::string>>();
      }
    }
    if (j.contains("comparison_defs")) {
      cfg.comparison_defs.clear();
      for (const auto& jd : j.at("comparison_defs")) {
        ComparisonDef def;
        def.name = jd.at("name").get<std::string>();
        def.role_a = jd.at("role_a").get<std::string>();
        def.role_b = jd.at("role_b").get<std::string>();
        if (jd.contains("pixel_metrics")) {
          def.pixel_metrics = jd.at("pixel_metrics").get<bool>();
        }
        if (jd.contains("intensity")) {
          def.intensity = jd.at("intensity").get<bool>();
        }
        cfg.comparison_defs.push_back(std::move(def));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    raise(errc::parse_error, std::string("malformed config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

void RunConfig::validate() const {
  if (target_mpp <= 0.0) raise(errc::invalid_config, "target_mpp must be positive");
  if (strip_height < 1) raise(errc::invalid_config, "strip_height must be >= 1");
  if (patch_size < 1) raise(errc::invalid_config, "patch_size must be >= 1");
  if (tissue_min < 0.0 || tissue_min > 1.0) {
    raise(errc::invalid_config, "tissue_min must lie in [0, 1]");
  }
  if (mask_threshold <= 0.0 || mask_threshold > 1.0) {
    raise(errc::invalid_config, "mask threshold must lie in (0, 1]");
  }
  if (macenko.od_beta < 0.0) {
    raise(errc::invalid_config, "macenko od_beta must be non-negative");
  }
  if (macenko.angle_alpha <= 0.0 || macenko.angle_alpha >= 50.0) {
    raise(errc::invalid_config, "macenko angle_alpha must lie in (0, 50)");
  }
  if (macenko.concentration_percentile <= 0.0 ||
      macenko.concentration_percentile > 100.0) {
    raise(errc::invalid_config, "concentration percentile must lie in (0, 100]");
  }
  for (double w : {channel_weights.r, channel_weights.g, channel_weights.b}) {
    if (w < 0.0 || w > 1.0) {
      raise(errc::invalid_config, "channel weights must lie in [0, 1]");
    }
  }
  destain_backend.validate();
  stain_backend.validate();
  if (ecc.max_iters < 1) raise(errc::invalid_config, "ecc max_iters must be >= 1");
  if (ecc.eps <= 0.0) raise(errc::invalid_config, "ecc eps must be positive");
  if (ecc.pyramid_levels < 1) {
    raise(errc::invalid_config, "ecc pyramid_levels must be >= 1");
  }
  if (ecc.min_ecc < -1.0 || ecc.min_ecc > 1.0) {
    raise(errc::invalid_config, "ecc min_ecc must lie in [-1, 1]");
  }
  if (ssim.window < 3 || ssim.window % 2 == 0) {
    raise(errc::invalid_config, "ssim window must be odd and >= 3");
  }
  if (ssim.sigma <= 0.0) raise(errc::invalid_config, "ssim sigma must be positive");
  if (ssim.k1 <= 0.0 || ssim.k2 <= 0.0) {
    raise(errc::invalid_config, "ssim stabilizers must be positive");
  }
  if (stats.alpha <= 0.0 || stats.alpha >= 1.0) {
    raise(errc::invalid_config, "stats alpha must lie in (0, 1)");
  }
  std::set<std::string> names;
  for (const auto& def : comparison_defs) {
    if (def.name.empty()) raise(errc::invalid_config, "comparison with empty name");
    if (!names.insert(def.name).second) {
      raise(errc::invalid_config, "duplicate comparison name: " + def.name);
    }
    for (const auto& role : {def.role_a, def.role_b}) {
      if (known_roles().count(role) == 0) {
        raise(errc::invalid_config,
              "comparison " + def.name + " names unknown role " + role);
      }
    }
    if (!def.pixel_metrics && !def.intensity) {
      raise(errc::invalid_config,
            "comparison " + def.name + " computes nothing");
    }
  }
}

std::string RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["target_mpp"] = target_mpp;
  j["strip_height"] = strip_height;
  j["patch_size"] = patch_size;
  j["tissue_min"] = tissue_min;
  j["mask"]["strategy"] = mask_strategy == MaskStrategy::otsu
                              ? "otsu"
                              : "luminance_threshold";
  j["mask"]["threshold"] = mask_threshold;
  j["macenko"]["od_beta"] = macenko.od_beta;
  j["macenko"]["angle_alpha"] = macenko.angle_alpha;
  j["macenko"]["concentration_percentile"] = macenko.concentration_percentile;
  j["macenko"]["reject"] =
      macenko.reject == OdRejectMode::any_below ? "any_below" : "all_below";
  j["channel_weights"] = {channel_weights.r, channel_weights.g,
                          channel_weights.b};
  j["backends"]["destain"] = nlohmann::ordered_json::parse(destain_backend.to_json());
  j["backends"]["stain"] = nlohmann::ordered_json::parse(stain_backend.to_json());
  j["ecc"]["max_iters"] = ecc.max_iters;
  j["ecc"]["eps"] = ecc.eps;
  j["ecc"]["pyramid_levels"] = ecc.pyramid_levels;
  j["ecc"]["min_ecc"] = ecc.min_ecc;
  j["align"] = align;
  j["ssim"]["window"] = ssim.window;
  j["ssim"]["sigma"] = ssim.sigma;
  j["ssim"]["k1"] = ssim.k1;
  j["ssim"]["k2"] = ssim.k2;
  j["stats"]["alpha"] = stats.alpha;
  j["stats"]["comparisons"] = stats.comparisons;
  j["comparison_defs"] = nlohmann::ordered_json::array();
  for (const auto& def : comparison_defs) {
    nlohmann::ordered_json jd;
    jd["name"] = def.name;
    jd["role_a"] = def.role_a;
    jd["role_b"] = def.role_b;
    jd["pixel_metrics"] = def.pixel_metrics;
    jd["intensity"] = def.intensity;
    j["comparison_defs"].push_back(jd);
  }
  return j.dump(2);
}

}  // namespace stainpipe
