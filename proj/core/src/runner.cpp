#include "stainpipe/runner.hpp"

#include <atomic>
#include <thread>

#include "runner_util.hpp"
#include "stainpipe/error.hpp"
#include "stainpipe/extract.hpp"
#include "stainpipe/fsutil.hpp"
#include "stainpipe/harmonize.hpp"
#include "stainpipe/pathway.hpp"
#include "stainpipe/raster.hpp"
#include "stainpipe/resample.hpp"

namespace stainpipe {

namespace fs = std::filesystem;

namespace detail {

std::string task_signature(const std::string& stage,
                           const std::vector<SourceRef>& sources,
                           const std::string& params_dump) {
  std::string text = stage;
  for (const auto& src : sources) {
    text += '\n';
    text += hex64(src.checksum);
  }
  text += '\n';
  text += params_dump;
  return hex64(fnv1a64(text));
}

bool artifact_current(const std::string& artifact_path,
                      const std::string& signature) {
  const std::string sidecar = artifact_path + ".provenance.json";
  if (!fs::exists(artifact_path) || !fs::exists(sidecar)) return false;
  try {
    const auto j = nlohmann::json::parse(read_text_file(sidecar));
    if (j.value("signature", "") != signature) return false;
    return j.value("output_fnv1a64", "") == hex64(fnv1a64_file(artifact_path));
  } catch (const std::exception&) {
    return false;
  }
}

void write_provenance(const std::string& artifact_path, const std::string& stage,
                      const std::string& core_id, const std::string& role,
                      const std::vector<SourceRef>& sources,
                      const nlohmann::ordered_json& parameters,
                      const std::string& signature) {
  nlohmann::ordered_json j;
  j["artifact"] = fs::path(artifact_path).filename().string();
  j["stage"] = stage;
  if (!core_id.empty()) j["core_id"] = core_id;
  if (!role.empty()) j["role"] = role;
  j["sources"] = nlohmann::ordered_json::array();
  for (const auto& src : sources) {
    nlohmann::ordered_json js;
    js["path"] = src.path;
    js["fnv1a64"] = hex64(src.checksum);
    j["sources"].push_back(js);
  }
  j["parameters"] = parameters;
  j["signature"] = signature;
  j["output_fnv1a64"] = hex64(fnv1a64_file(artifact_path));
  write_text_file(artifact_path + ".provenance.json", j.dump(2) + "\n");
}

std::vector<CoreStatus> map_cores(
    const std::vector<CoreEntry>& cores, int jobs,
    const std::function<CoreStatus(const CoreEntry&)>& fn) {
  std::vector<CoreStatus> out(cores.size());
  const auto work = [&](std::size_t i) {
    try {
      out[i] = fn(cores[i]);
    } catch (const std::exception& e) {
      out[i] = CoreStatus{cores[i].core_id, "failed", e.what()};
    }
    if (out[i].core_id.empty()) out[i].core_id = cores[i].core_id;
  };
  if (jobs <= 1 || cores.size() <= 1) {
    for (std::size_t i = 0; i < cores.size(); ++i) work(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  const std::size_t n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(jobs), cores.size());
  std::vector<std::thread> workers;
  workers.reserve(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < cores.size();
           i = next.fetch_add(1)) {
        work(i);
      }
    });
  }
  for (auto& t : workers) t.join();
  return out;
}

StainState role_stain_state(const std::string& role) {
  if (role == "gus" || role == "gus_raw") return StainState::unstained;
  if (role == "ghe" || role == "ghe_raw") return StainState::stained;
  if (role == "vds") return StainState::virtual_destained;
  if (role == "vhe") return StainState::virtual_stained;
  if (role == "vher") return StainState::virtual_restained;
  raise(errc::invalid_config, "unknown image role: " + role);
}

std::string mask_source_role(const std::string& role) {
  if (role == "vds" || role == "vher") return "ghe";
  if (role == "vhe") return "gus";
  return role;  // ground-truth roles mask themselves
}

CoreImage load_role_image(const std::string& out_dir, const std::string& core_id,
                          const std::string& role) {
  const std::string path = role_image_path(out_dir, core_id, role);
  if (!fs::exists(path)) {
    raise(errc::missing_artifact, "missing " + role + " image: " + path);
  }
  CoreImage img = load_core_image(path);
  img.core_id = core_id;
  img.stain_state = role_stain_state(role);
  return img;
}

void write_stage_log(const std::string& out_dir, const StageResult& result) {
  write_text_file((logs_dir(out_dir) / (result.stage + "_status.json")).string(),
                  stage_status_json(result));
}

}  // namespace detail

using namespace detail;

std::size_t StageResult::failed_count() const {
  std::size_t n = 0;
  for (const auto& c : cores) {
    if (c.status == "failed") ++n;
  }
  return n;
}

int StageResult::exit_code() const {
  const std::size_t failed = failed_count();
  if (failed == 0) return 0;
  return failed == cores.size() ? 1 : 2;
}

std::string stage_status_json(const StageResult& result) {
  nlohmann::ordered_json j;
  j["stage"] = result.stage;
  j["cores"] = nlohmann::ordered_json::array();
  for (const auto& c : result.cores) {
    nlohmann::ordered_json jc;
    jc["core_id"] = c.core_id;
    jc["status"] = c.status;
    jc["detail"] = c.detail;
    j["cores"].push_back(jc);
  }
  if (result.stage == "evaluate") {
    j["skipped_pairs"] = nlohmann::ordered_json::array();
    for (const auto& p : result.skipped_pairs) {
      nlohmann::ordered_json jp;
      jp["core_id"] = p.core_id;
      jp["comparison"] = p.comparison;
      jp["reason"] = p.reason;
      j["skipped_pairs"].push_back(jp);
    }
  }
  return j.dump(2) + "\n";
}

std::string role_image_path(const std::string& out_dir,
                            const std::string& core_id, const std::string& role) {
  if (role == "gus" || role == "ghe") {
    return (harmonized_dir(out_dir) / (core_id + "_" + role + ".png")).string();
  }
  if (role == "gus_raw") {
    return (extracted_dir(out_dir) / (core_id + "_gus.png")).string();
  }
  if (role == "ghe_raw") {
    return (extracted_dir(out_dir) / (core_id + "_ghe.png")).string();
  }
  if (role == "vds" || role == "vhe" || role == "vher") {
    return (virtual_dir(out_dir) / (core_id + "_" + role + ".png")).string();
  }
  raise(errc::invalid_config, "unknown image role: " + role);
}

// ---------------------------------------------------------------------------
// extract

namespace {

struct SideSpec {
  const char* role;        // artifact role written
  const char* suffix;      // file suffix, gus or ghe
  bool stained;
};

constexpr SideSpec kSides[2] = {{"gus_raw", "gus", false},
                                {"ghe_raw", "ghe", true}};

}  // namespace

StageResult cmd_extract(const RunContext& ctx) {
  StageResult result;
  result.stage = "extract";
  fs::create_directories(extracted_dir(ctx.out_dir));

  result.cores = map_cores(
      ctx.manifest.cores, ctx.jobs, [&](const CoreEntry& core) -> CoreStatus {
        int skipped = 0;
        for (const SideSpec& side : kSides) {
          const std::string& scan =
              side.stained ? core.stained_path : core.unstained_path;
          const std::string& roi_path =
              side.stained ? core.roi_stained : core.roi_unstained;
          const std::string out_file =
              (extracted_dir(ctx.out_dir) / (core.core_id + "_" + side.suffix + ".png"))
                  .string();

          std::vector<SourceRef> sources = {
              {scan, fnv1a64_file(scan)},
              {roi_path, fnv1a64_file(roi_path)},
          };
          nlohmann::ordered_json params;
          params["target_mpp"] = ctx.config.target_mpp;
          params["strip_height"] = ctx.config.strip_height;
          if (core.source_mpp) {
            params["source_mpp_override"] = *core.source_mpp;
          } else {
            params["source_mpp_override"] = nullptr;
          }
          params["fill"] = "white";
          const std::string sig =
              task_signature("extract", sources, params.dump());
          if (!ctx.force && artifact_current(out_file, sig)) {
            ++skipped;
            continue;
          }

          const auto rois = parse_roi(read_text_file(roi_path));
          if (rois.empty()) {
            raise(errc::empty_roi, "no polygon in " + roi_path);
          }
          const RasterSource src = probe_raster(scan, core.source_mpp);
          if (src.mpp <= 0.0) {
            raise(errc::invalid_config,
                  "no resolution for " + scan +
                      "; declare source_mpp in the manifest");
          }
          CoreImage img =
              extract_core(src, rois.front(), kWhite, ctx.config.strip_height);
          img.core_id = core.core_id;
          img.stain_state =
              side.stained ? StainState::stained : StainState::unstained;
          const CoreImage down = downsample_to_mpp(img, ctx.config.target_mpp);
          save_png(down, out_file);

          params["roi_label"] = rois.front().label;
          params["roi_polygons_in_file"] = rois.size();
          params["source_mpp"] = src.mpp;
          write_provenance(out_file, "extract", core.core_id, side.role, sources,
                           params, sig);
        }
        if (skipped == 2) {
          return {core.core_id, "skipped", "outputs current (checksums match)"};
        }
        return {core.core_id, "ok", ""};
      });
  write_stage_log(ctx.out_dir, result);
  return result;
}

// ---------------------------------------------------------------------------
// harmonize

namespace {

// Builds (or reuses) the reference stain profile and unstained CDF.
void prepare_references(const RunContext& ctx, std::string* profile_path,
                        std::string* cdf_path) {
  const auto& ref = ctx.manifest.reference;
  if (ref.he_reference_path.empty() || ref.unstained_reference_path.empty()) {
    raise(errc::invalid_config,
          "harmonize needs reference.he_reference_path and "
          "reference.unstained_reference_path in the manifest");
  }
  fs::create_directories(reference_dir(ctx.out_dir));
  *profile_path = (reference_dir(ctx.out_dir) / "he_profile.json").string();
  *cdf_path = (reference_dir(ctx.out_dir) / "unstained_cdf.json").string();

  nlohmann::ordered_json mask_params;
  mask_params["strategy"] = ctx.config.mask_strategy == MaskStrategy::otsu
                                ? "otsu"
                                : "luminance_threshold";
  mask_params["threshold"] = ctx.config.mask_threshold;

  {
    std::vector<SourceRef> sources = {
        {ref.he_reference_path, fnv1a64_file(ref.he_reference_path)}};
    nlohmann::ordered_json params;
    params["mask"] = mask_params;
    params["od_beta"] = ctx.config.macenko.od_beta;
    params["angle_alpha"] = ctx.config.macenko.angle_alpha;
    params["concentration_percentile"] =
        ctx.config.macenko.concentration_percentile;
    params["reject"] = ctx.config.macenko.reject == OdRejectMode::any_below
                           ? "any_below"
                           : "all_below";
    const std::string sig =
        task_signature("reference_profile", sources, params.dump());
    if (ctx.force || !artifact_current(*profile_path, sig)) {
      const CoreImage img = load_core_image(ref.he_reference_path);
      const TissueMask mask = tissue_mask(img, ctx.config.mask_strategy,
                                          ctx.config.mask_threshold);
      const StainProfile profile =
          estimate_stain_profile(img, mask, ctx.config.macenko);
      write_text_file(*profile_path, profile.to_json() + "\n");
      write_provenance(*profile_path, "harmonize", "", "he_reference", sources,
                       params, sig);
    }
  }
  {
    std::vector<SourceRef> sources = {
        {ref.unstained_reference_path,
         fnv1a64_file(ref.unstained_reference_path)}};
    nlohmann::ordered_json params;
    params["mask"] = mask_params;
    const std::string sig =
        task_signature("reference_cdf", sources, params.dump());
    if (ctx.force || !artifact_current(*cdf_path, sig)) {
      const CoreImage img = load_core_image(ref.unstained_reference_path);
      const TissueMask mask = tissue_mask(img, ctx.config.mask_strategy,
                                          ctx.config.mask_threshold);
      const ChannelCdf cdf = compute_channel_cdf(img, mask);
      write_text_file(*cdf_path, cdf.to_json() + "\n");
      write_provenance(*cdf_path, "harmonize", "", "unstained_reference",
                       sources, params, sig);
    }
  }
}

}  // namespace

StageResult cmd_harmonize(const RunContext& ctx) {
  StageResult result;
  result.stage = "harmonize";
  fs::create_directories(harmonized_dir(ctx.out_dir));

  std::string profile_path, cdf_path;
  prepare_references(ctx, &profile_path, &cdf_path);
  const StainProfile profile =
      StainProfile::from_json(read_text_file(profile_path));
  const ChannelCdf reference_cdf =
      ChannelCdf::from_json(read_text_file(cdf_path));

  nlohmann::ordered_json mask_params;
  mask_params["strategy"] = ctx.config.mask_strategy == MaskStrategy::otsu
                                ? "otsu"
                                : "luminance_threshold";
  mask_params["threshold"] = ctx.config.mask_threshold;

  result.cores = map_cores(
      ctx.manifest.cores, ctx.jobs, [&](const CoreEntry& core) -> CoreStatus {
        int skipped = 0;
        // Stained side: stain-vector normalization against the reference.
        {
          const std::string in_file =
              (extracted_dir(ctx.out_dir) / (core.core_id + "_ghe.png")).string();
          if (!fs::exists(in_file)) {
            raise(errc::missing_artifact, "missing extracted input: " + in_file);
          }
          const std::string out_file =
              (harmonized_dir(ctx.out_dir) / (core.core_id + "_ghe.png")).string();
          std::vector<SourceRef> sources = {
              {in_file, fnv1a64_file(in_file)},
              {profile_path, fnv1a64_file(profile_path)},
          };
          nlohmann::ordered_json params;
          params["mask"] = mask_params;
          params["od_beta"] = ctx.config.macenko.od_beta;
          params["angle_alpha"] = ctx.config.macenko.angle_alpha;
          params["concentration_percentile"] =
              ctx.config.macenko.concentration_percentile;
          params["reject"] = ctx.config.macenko.reject == OdRejectMode::any_below
                                 ? "any_below"
                                 : "all_below";
          const std::string sig =
              task_signature("harmonize_he", sources, params.dump());
          if (!ctx.force && artifact_current(out_file, sig)) {
            ++skipped;
          } else {
            CoreImage img = load_core_image(in_file);
            img.core_id = core.core_id;
            img.stain_state = StainState::stained;
            const TissueMask mask = tissue_mask(img, ctx.config.mask_strategy,
                                                ctx.config.mask_threshold);
            const CoreImage out =
                harmonize_he(img, mask, profile, ctx.config.macenko);
            save_png(out, out_file);
            write_provenance(out_file, "harmonize", core.core_id, "ghe", sources,
                             params, sig);
          }
        }
        // Unstained side: masked CDF matching against the reference.
        {
          const std::string in_file =
              (extracted_dir(ctx.out_dir) / (core.core_id + "_gus.png")).string();
          if (!fs::exists(in_file)) {
            raise(errc::missing_artifact, "missing extracted input: " + in_file);
          }
          const std::string out_file =
              (harmonized_dir(ctx.out_dir) / (core.core_id + "_gus.png")).string();
          std::vector<SourceRef> sources = {
              {in_file, fnv1a64_file(in_file)},
              {cdf_path, fnv1a64_file(cdf_path)},
          };
          nlohmann::ordered_json params;
          params["mask"] = mask_params;
          params["channel_weights"] = {ctx.config.channel_weights.r,
                                       ctx.config.channel_weights.g,
                                       ctx.config.channel_weights.b};
          const std::string sig =
              task_signature("harmonize_unstained", sources, params.dump());
          if (!ctx.force && artifact_current(out_file, sig)) {
            ++skipped;
          } else {
            CoreImage img = load_core_image(in_file);
            img.core_id = core.core_id;
            img.stain_state = StainState::unstained;
            const TissueMask mask = tissue_mask(img, ctx.config.mask_strategy,
                                                ctx.config.mask_threshold);
            const CoreImage out = harmonize_unstained(
                img, mask, reference_cdf, ctx.config.channel_weights);
            save_png(out, out_file);
            write_provenance(out_file, "harmonize", core.core_id, "gus", sources,
                             params, sig);
          }
        }
        if (skipped == 2) {
          return {core.core_id, "skipped", "outputs current (checksums match)"};
        }
        return {core.core_id, "ok", ""};
      });
  write_stage_log(ctx.out_dir, result);
  return result;
}

// ---------------------------------------------------------------------------
// infer

namespace {

struct PathwayJob {
  PathwayName name;
  std::string input_role;                 // ghe or gus (harmonized)
  std::vector<std::string> output_roles;  // roles written, stage order
};

std::vector<PathwayJob> pathway_jobs(const std::string& selector) {
  if (selector == "destain") {
    return {{PathwayName::destain, "ghe", {"vds"}}};
  }
  if (selector == "direct_stain") {
    return {{PathwayName::direct_stain, "gus", {"vhe"}}};
  }
  if (selector == "destain_restain") {
    return {{PathwayName::destain_restain, "ghe", {"vds", "vher"}}};
  }
  if (selector == "all") {
    return {{PathwayName::destain_restain, "ghe", {"vds", "vher"}},
            {PathwayName::direct_stain, "gus", {"vhe"}}};
  }
  raise(errc::invalid_config, "unknown pathway selector: " + selector);
}

Pathway build_pathway(PathwayName name, const RunConfig& cfg) {
  Pathway p;
  p.name = name;
  switch (name) {
    case PathwayName::destain:
      p.stages = {cfg.destain_backend};
      break;
    case PathwayName::direct_stain:
      p.stages = {cfg.stain_backend};
      break;
    case PathwayName::destain_restain:
      p.stages = {cfg.destain_backend, cfg.stain_backend};
      break;
  }
  return p;
}

}  // namespace

StageResult cmd_infer(const RunContext& ctx) {
  StageResult result;
  result.stage = "infer";
  fs::create_directories(virtual_dir(ctx.out_dir));
  const auto jobs = pathway_jobs(ctx.pathway);

  result.cores = map_cores(
      ctx.manifest.cores, ctx.jobs, [&](const CoreEntry& core) -> CoreStatus {
        int done = 0, skipped = 0;
        std::string warning;
        for (const PathwayJob& job : jobs) {
          const std::string in_file =
              role_image_path(ctx.out_dir, core.core_id, job.input_role);
          if (!fs::exists(in_file)) {
            raise(errc::missing_artifact, "missing harmonized input: " + in_file);
          }
          const Pathway pathway = build_pathway(job.name, ctx.config);

          std::vector<SourceRef> sources = {{in_file, fnv1a64_file(in_file)}};
          nlohmann::ordered_json params;
          params["pathway"] = pathway_name(job.name);
          params["patch_size"] = ctx.config.patch_size;
          params["tissue_min"] = ctx.config.tissue_min;
          params["mask"]["strategy"] =
              ctx.config.mask_strategy == MaskStrategy::otsu
                  ? "otsu"
                  : "luminance_threshold";
          params["mask"]["threshold"] = ctx.config.mask_threshold;
          params["stages"] = nlohmann::ordered_json::array();
          for (const auto& stage : pathway.stages) {
            params["stages"].push_back(
                nlohmann::ordered_json::parse(stage.to_json()));
          }
          const std::string sig = task_signature("infer", sources, params.dump());

          std::vector<std::string> out_files;
          for (const auto& role : job.output_roles) {
            out_files.push_back(
                role_image_path(ctx.out_dir, core.core_id, role));
          }
          const std::string grid_file =
              (virtual_dir(ctx.out_dir) /
               (core.core_id + "_" + job.input_role + "_grid.json"))
                  .string();
          bool current = !ctx.force;
          for (const auto& f : out_files) {
            current = current && artifact_current(f, sig);
          }
          if (current && fs::exists(grid_file)) {
            ++skipped;
            continue;
          }

          CoreImage input = load_core_image(in_file);
          input.core_id = core.core_id;
          input.stain_state = role_stain_state(job.input_role);
          const TissueMask mask = tissue_mask(input, ctx.config.mask_strategy,
                                              ctx.config.mask_threshold);
          const std::string work_dir =
              (exchange_dir(ctx.out_dir) / core.core_id /
               pathway_name(job.name))
                  .string();
          const PathwayResult pres =
              run_pathway(input, mask, pathway, ctx.config.patch_size,
                          ctx.config.tissue_min, work_dir);
          if (pres.empty_input) {
            warning = "no patch cleared the tissue threshold; background "
                      "canvas written";
          }

          // Stage order: intermediates first, then the final output.
          std::vector<const CoreImage*> images;
          for (const auto& inter : pres.intermediates) images.push_back(&inter);
          images.push_back(&pres.output);
          if (images.size() != job.output_roles.size()) {
            raise(errc::contract_violation, "pathway produced an unexpected "
                                            "number of images");
          }
          nlohmann::ordered_json out_params = params;
          out_params["kept_patches"] = pres.kept_patches;
          out_params["grid_cells"] = pres.grid.patch_count();
          for (std::size_t i = 0; i < images.size(); ++i) {
            save_png(*images[i], out_files[i]);
            write_provenance(out_files[i], "infer", core.core_id,
                             job.output_roles[i], sources, out_params, sig);
          }
          write_text_file(grid_file, pres.grid.to_json() + "\n");
          ++done;
        }
        if (done == 0 && skipped > 0) {
          return {core.core_id, "skipped", "outputs current (checksums match)"};
        }
        return {core.core_id, "ok", warning};
      });
  write_stage_log(ctx.out_dir, result);
  return result;
}

// ---------------------------------------------------------------------------
// run_all

int run_all(const RunContext& ctx) {
  int worst = 0;
  const auto absorb = [&worst](const StageResult& r) -> bool {
    const int code = r.exit_code();
    if (code == 1) {
      worst = 1;
      return false;  // nothing left for downstream stages
    }
    worst = std::max(worst, code);
    return true;
  };
  if (!absorb(cmd_extract(ctx))) return 1;
  if (!absorb(cmd_harmonize(ctx))) return 1;
  if (!absorb(cmd_infer(ctx))) return 1;
  if (!absorb(cmd_evaluate(ctx))) return 1;
  cmd_report(ctx.out_dir);
  return worst;
}

}  // namespace stainpipe
