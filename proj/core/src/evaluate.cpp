#include <cmath>
#include <map>

#include "runner_util.hpp"
#include "stainpipe/aggregate.hpp"
#include "stainpipe/error.hpp"
#include "stainpipe/fsutil.hpp"
#include "stainpipe/intensity.hpp"
#include "stainpipe/metrics.hpp"
#include "stainpipe/runner.hpp"
#include "stainpipe/stats.hpp"

namespace stainpipe {

namespace fs = std::filesystem;
using detail::SourceRef;

namespace {

constexpr double kRadToDeg = 180.0 / 3.14159265358979323846;

// Everything one core contributes to the reports, computed in isolation so
// cores can run in parallel and still merge in manifest order.
struct CoreEval {
  std::vector<MetricRecord> records;
  std::vector<std::pair<std::string, IntensitySummary>> summaries;  // role
  std::vector<std::pair<std::string, IntensityDifference>> diffs;   // comparison
  std::vector<PairSkip> skips;
  std::vector<SourceRef> sources;
  int computed = 0;
  bool usable = false;  // false for failed cores; their rows are dropped
};

std::vector<ComparisonDef> active_comparisons(const RunContext& ctx) {
  if (ctx.manifest.comparisons.empty()) return ctx.config.comparison_defs;
  std::vector<ComparisonDef> active;
  for (const auto& name : ctx.manifest.comparisons) {
    bool found = false;
    for (const auto& def : ctx.config.comparison_defs) {
      if (def.name == name) {
        active.push_back(def);
        found = true;
        break;
      }
    }
    if (!found) {
      raise(errc::invalid_config,
            "manifest requests unknown comparison: " + name);
    }
  }
  return active;
}

nlohmann::ordered_json stats_json(const SampleStats& s) {
  nlohmann::ordered_json j;
  j["mean"] = s.mean;
  j["sd"] = s.sd;
  j["n"] = s.n;
  return j;
}

// ANOVA + LSD for one metric across the selected comparison groups; groups
// with fewer than two samples are dropped (and named in the output).
nlohmann::ordered_json metric_stats_json(
    const std::vector<std::string>& group_names,
    const std::vector<std::vector<double>>& group_samples, double alpha) {
  nlohmann::ordered_json j;
  std::vector<std::string> kept_names;
  std::vector<std::vector<double>> kept;
  nlohmann::ordered_json dropped = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < group_samples.size(); ++i) {
    if (group_samples[i].size() >= 2) {
      kept_names.push_back(group_names[i]);
      kept.push_back(group_samples[i]);
    } else {
      dropped.push_back(group_names[i]);
    }
  }
  j["groups"] = kept_names;
  if (!dropped.empty()) j["dropped_groups"] = dropped;
  if (kept.size() < 2) {
    j["skipped"] = "needs at least two groups with two or more samples";
    return j;
  }
  StatTestResult res;
  try {
    res = fisher_lsd(kept, alpha);
  } catch (const PipelineError& e) {
    j["skipped"] = e.what();
    return j;
  }
  if (std::isinf(res.f_stat)) {
    j["f_stat"] = "inf";
  } else {
    j["f_stat"] = res.f_stat;
  }
  j["p_value"] = res.p_value;
  j["df_between"] = res.df_between;
  j["df_within"] = res.df_within;
  j["ms_within"] = res.ms_within;
  j["pairwise"] = nlohmann::ordered_json::array();
  for (const auto& pair : res.pairwise) {
    nlohmann::ordered_json jp;
    jp["group_a"] = kept_names[pair.group_a];
    jp["group_b"] = kept_names[pair.group_b];
    jp["mean_diff"] = pair.mean_diff;
    jp["lsd_threshold"] = pair.lsd_threshold;
    jp["significant"] = pair.significant;
    j["pairwise"].push_back(jp);
  }
  return j;
}

}  // namespace

StageResult cmd_evaluate(const RunContext& ctx) {
  StageResult result;
  result.stage = "evaluate";
  fs::create_directories(detail::reports_dir(ctx.out_dir));

  const std::vector<ComparisonDef> active = active_comparisons(ctx);
  const bool do_align = ctx.config.align && !ctx.no_align;
  const auto& cores = ctx.manifest.cores;
  std::vector<CoreEval> slots(cores.size());

  result.cores = detail::map_cores(
      cores, ctx.jobs, [&](const CoreEntry& core) -> CoreStatus {
        CoreEval& ev = slots[static_cast<std::size_t>(&core - cores.data())];
        std::map<std::string, CoreImage> images;
        std::map<std::string, TissueMask> masks;

        const auto image_of = [&](const std::string& role) -> const CoreImage& {
          auto it = images.find(role);
          if (it == images.end()) {
            const std::string path =
                role_image_path(ctx.out_dir, core.core_id, role);
            ev.sources.push_back({path, fnv1a64_file(path)});
            it = images
                     .emplace(role, detail::load_role_image(ctx.out_dir,
                                                            core.core_id, role))
                     .first;
          }
          return it->second;
        };
        const auto mask_of = [&](const std::string& role) -> const TissueMask& {
          const std::string src = detail::mask_source_role(role);
          auto it = masks.find(src);
          if (it == masks.end()) {
            it = masks
                     .emplace(src, tissue_mask(image_of(src),
                                               ctx.config.mask_strategy,
                                               ctx.config.mask_threshold))
                     .first;
          }
          return it->second;
        };
        const auto summary_of =
            [&](const std::string& role) -> const IntensitySummary& {
          for (const auto& [r, s] : ev.summaries) {
            if (r == role) return s;
          }
          IntensitySummary s = masked_intensity(image_of(role), mask_of(role));
          s.core_id = core.core_id;
          ev.summaries.emplace_back(role, s);
          return ev.summaries.back().second;
        };

        for (const ComparisonDef& def : active) {
          std::string missing;
          for (const std::string& role : {def.role_a, def.role_b}) {
            const std::string path =
                role_image_path(ctx.out_dir, core.core_id, role);
            if (!fs::exists(path)) {
              if (!missing.empty()) missing += "; ";
              missing += "missing " + role + " image: " + path;
            }
          }
          if (!missing.empty()) {
            ev.skips.push_back({core.core_id, def.name, missing});
            continue;
          }
          if (def.pixel_metrics) {
            CoreImage a = image_of(def.role_a);
            CoreImage b = image_of(def.role_b);
            pad_to_common(a, b, kWhite);
            MetricRecord rec =
                evaluate_pair(a, b, do_align, ctx.config.ecc, ctx.config.ssim);
            rec.core_id = core.core_id;
            rec.comparison = comparison_from_name(def.name);
            rec.comparison_label = def.name;
            ev.records.push_back(rec);
          }
          if (def.intensity) {
            IntensityDifference d = intensity_difference(
                summary_of(def.role_a), summary_of(def.role_b));
            d.core_id = core.core_id;
            ev.diffs.emplace_back(def.name, d);
          }
          ++ev.computed;
        }
        // Residual-shift reference: every core's harmonized stained image.
        if (fs::exists(role_image_path(ctx.out_dir, core.core_id, "ghe"))) {
          summary_of("ghe");
        }

        ev.usable = true;
        if (ev.computed == 0 && !active.empty()) {
          ev.usable = false;
          return {core.core_id, "failed",
                  "no configured comparison could be evaluated"};
        }
        if (!ev.skips.empty()) {
          return {core.core_id, "ok",
                  std::to_string(ev.skips.size()) + " comparison(s) skipped"};
        }
        return {core.core_id, "ok", ""};
      });

  // Failed cores contribute nothing; their partial rows would make the
  // reports depend on where the failure struck.
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (result.cores[i].status == "failed") slots[i] = CoreEval{};
    for (const auto& skip : slots[i].skips) result.skipped_pairs.push_back(skip);
  }

  // --- metrics.csv ---------------------------------------------------------
  std::string metrics_csv = csv_row(
      {"core_id", "comparison", "pcc", "ssim", "psnr_db", "mse",
       "align_theta_deg", "align_tx", "align_ty", "align_ecc",
       "align_converged"});
  for (const auto& ev : slots) {
    for (const MetricRecord& rec : ev.records) {
      metrics_csv += csv_row(
          {rec.core_id, rec.comparison_label, format_double(rec.pcc),
           format_double(rec.ssim), format_double(rec.psnr),
           format_double(rec.mse),
           format_double(rec.alignment.theta * kRadToDeg),
           format_double(rec.alignment.tx), format_double(rec.alignment.ty),
           format_double(rec.alignment.final_ecc),
           rec.alignment.converged ? "true" : "false"});
    }
  }

  // --- intensity_summaries.csv ---------------------------------------------
  std::string summaries_csv =
      csv_row({"core_id", "role", "mean_overall", "mean_r", "mean_g", "mean_b",
               "tissue_fraction"});
  for (const auto& ev : slots) {
    for (const auto& [role, s] : ev.summaries) {
      summaries_csv += csv_row({s.core_id, role, format_double(s.overall),
                                format_double(s.r), format_double(s.g),
                                format_double(s.b),
                                format_double(s.tissue_fraction)});
    }
  }

  // --- intensity_diffs.csv --------------------------------------------------
  std::string diffs_csv = csv_row({"core_id", "comparison", "delta_overall",
                                   "delta_r", "delta_g", "delta_b"});
  for (const auto& ev : slots) {
    for (const auto& [name, d] : ev.diffs) {
      diffs_csv += csv_row({d.core_id, name, format_double(d.overall),
                            format_double(d.r), format_double(d.g),
                            format_double(d.b)});
    }
  }

  // --- aggregates.json -------------------------------------------------------
  nlohmann::ordered_json agg;
  agg["metadata"]["pcc_channels"] = "joint_rgb";
  agg["metadata"]["ssim_input"] = "rec601_luminance";
  agg["metadata"]["alignment"] = do_align;
  agg["metrics"] = nlohmann::ordered_json::array();
  agg["intensity"] = nlohmann::ordered_json::array();
  for (const ComparisonDef& def : active) {
    if (def.pixel_metrics) {
      std::vector<MetricRecord> recs;
      for (const auto& ev : slots) {
        for (const auto& rec : ev.records) {
          if (rec.comparison_label == def.name) recs.push_back(rec);
        }
      }
      if (!recs.empty()) {
        const MetricAggregateRow row = aggregate_metrics(recs, def.name);
        nlohmann::ordered_json jr;
        jr["comparison"] = row.comparison;
        jr["n"] = row.n;
        jr["pcc"] = stats_json(row.pcc);
        jr["ssim"] = stats_json(row.ssim);
        jr["psnr_db"] = stats_json(row.psnr);
        jr["psnr_inf_count"] = row.psnr_inf_count;
        jr["mse"] = stats_json(row.mse);
        agg["metrics"].push_back(jr);
      }
    }
    if (def.intensity) {
      std::vector<IntensityDifference> diffs;
      for (const auto& ev : slots) {
        for (const auto& [name, d] : ev.diffs) {
          if (name == def.name) diffs.push_back(d);
        }
      }
      if (!diffs.empty()) {
        const IntensityAggregateRow row = aggregate_intensity(diffs, def.name);
        nlohmann::ordered_json jr;
        jr["comparison"] = row.comparison;
        jr["n"] = row.n;
        jr["overall"] = stats_json(row.overall);
        jr["r"] = stats_json(row.r);
        jr["g"] = stats_json(row.g);
        jr["b"] = stats_json(row.b);
        agg["intensity"].push_back(jr);
      }
    }
  }
  // Residual shift of each core against the cohort (self included, so a
  // single-core run degrades to zeros instead of erroring).
  agg["domain_shift"] = nlohmann::ordered_json::array();
  {
    std::vector<IntensitySummary> ghe_summaries;
    for (const auto& ev : slots) {
      for (const auto& [role, s] : ev.summaries) {
        if (role == "ghe") ghe_summaries.push_back(s);
      }
    }
    for (const IntensitySummary& s : ghe_summaries) {
      const DomainShift shift = domain_shift_summary(s, ghe_summaries);
      nlohmann::ordered_json jr;
      jr["core_id"] = s.core_id;
      jr["mean_diff"] = shift.mean_diff;
      jr["median_diff"] = shift.median_diff;
      agg["domain_shift"].push_back(jr);
    }
  }

  // --- stats.json ------------------------------------------------------------
  nlohmann::ordered_json stats;
  stats["alpha"] = ctx.config.stats.alpha;
  {
    std::vector<std::string> group_names;
    if (!ctx.config.stats.comparisons.empty()) {
      for (const auto& name : ctx.config.stats.comparisons) {
        bool found = false;
        for (const auto& def : active) {
          if (def.name == name && def.pixel_metrics) {
            found = true;
            break;
          }
        }
        if (!found) {
          raise(errc::invalid_config,
                "stats group is not an active pixel-metric comparison: " + name);
        }
        group_names.push_back(name);
      }
    } else {
      for (const auto& def : active) {
        if (def.pixel_metrics) group_names.push_back(def.name);
      }
    }
    const auto samples_for = [&](const std::string& name, int metric) {
      std::vector<double> vals;
      for (const auto& ev : slots) {
        for (const auto& rec : ev.records) {
          if (rec.comparison_label != name) continue;
          const double v = metric == 0   ? rec.pcc
                           : metric == 1 ? rec.ssim
                           : metric == 2 ? rec.psnr
                                         : rec.mse;
          if (metric == 2 && std::isinf(v)) continue;  // sentinel excluded
          vals.push_back(v);
        }
      }
      return vals;
    };
    const char* metric_names[4] = {"pcc", "ssim", "psnr_db", "mse"};
    for (int m = 0; m < 4; ++m) {
      std::vector<std::vector<double>> groups;
      groups.reserve(group_names.size());
      for (const auto& name : group_names) {
        groups.push_back(samples_for(name, m));
      }
      stats["metrics"][metric_names[m]] =
          metric_stats_json(group_names, groups, ctx.config.stats.alpha);
    }
  }

  // --- write + provenance -----------------------------------------------------
  std::vector<SourceRef> sources;
  for (const auto& ev : slots) {
    for (const auto& src : ev.sources) {
      bool seen = false;
      for (const auto& have : sources) {
        if (have.path == src.path) {
          seen = true;
          break;
        }
      }
      if (!seen) sources.push_back(src);
    }
  }
  nlohmann::ordered_json params;
  params["align"] = do_align;
  params["ecc"]["max_iters"] = ctx.config.ecc.max_iters;
  params["ecc"]["eps"] = ctx.config.ecc.eps;
  params["ecc"]["pyramid_levels"] = ctx.config.ecc.pyramid_levels;
  params["ecc"]["min_ecc"] = ctx.config.ecc.min_ecc;
  params["ssim"]["window"] = ctx.config.ssim.window;
  params["ssim"]["sigma"] = ctx.config.ssim.sigma;
  params["ssim"]["k1"] = ctx.config.ssim.k1;
  params["ssim"]["k2"] = ctx.config.ssim.k2;
  params["mask"]["strategy"] = ctx.config.mask_strategy == MaskStrategy::otsu
                                   ? "otsu"
                                   : "luminance_threshold";
  params["mask"]["threshold"] = ctx.config.mask_threshold;
  params["alpha"] = ctx.config.stats.alpha;
  params["comparisons"] = nlohmann::ordered_json::array();
  for (const auto& def : active) params["comparisons"].push_back(def.name);
  const std::string sig = detail::task_signature("evaluate", sources,
                                                 params.dump());

  const auto emit = [&](const char* name, const std::string& content) {
    const std::string path = (detail::reports_dir(ctx.out_dir) / name).string();
    write_text_file(path, content);
    detail::write_provenance(path, "evaluate", "", "", sources, params, sig);
  };
  emit("metrics.csv", metrics_csv);
  emit("intensity_summaries.csv", summaries_csv);
  emit("intensity_diffs.csv", diffs_csv);
  emit("aggregates.json", agg.dump(2) + "\n");
  emit("stats.json", stats.dump(2) + "\n");

  detail::write_stage_log(ctx.out_dir, result);
  return result;
}

}  // namespace stainpipe
