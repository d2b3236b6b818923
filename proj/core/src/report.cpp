#include <cmath>
#include <cstdio>

#include "runner_util.hpp"
#include "stainpipe/error.hpp"
#include "stainpipe/fsutil.hpp"
#include "stainpipe/runner.hpp"

namespace stainpipe {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v, int prec = 4) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

std::string fmt_p(double p) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", p);
  return buf;
}

std::string mean_sd(const nlohmann::json& j) {
  return fmt(j.at("mean").get<double>()) + " ± " +
         fmt(j.at("sd").get<double>());
}

std::vector<std::string> split_csv_line(const std::string& line) {
  // Report fields never carry embedded commas, so a plain split suffices.
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

}  // namespace

void cmd_report(const std::string& out_dir) {
  const fs::path rep = detail::reports_dir(out_dir);
  const char* needed[] = {"metrics.csv", "intensity_summaries.csv",
                          "intensity_diffs.csv", "aggregates.json",
                          "stats.json"};
  std::string missing;
  for (const char* name : needed) {
    if (!fs::exists(rep / name)) {
      if (!missing.empty()) missing += ", ";
      missing += (rep / name).string();
    }
  }
  if (!missing.empty()) {
    raise(errc::missing_artifact, "report inputs missing: " + missing);
  }

  const auto agg =
      nlohmann::json::parse(read_text_file((rep / "aggregates.json").string()));
  const auto stats =
      nlohmann::json::parse(read_text_file((rep / "stats.json").string()));

  std::string md = "# Virtual staining evaluation report\n";

  md += "\n## Pixel similarity\n\n";
  if (agg.at("metrics").empty()) {
    md += "No pixel-metric comparison produced any pair.\n";
  } else {
    md += "| Comparison | n | PCC | SSIM | PSNR (dB) | MSE | PSNR = inf |\n";
    md += "|---|---|---|---|---|---|---|\n";
    for (const auto& row : agg.at("metrics")) {
      md += "| " + row.at("comparison").get<std::string>() + " | " +
            std::to_string(row.at("n").get<std::size_t>()) + " | " +
            mean_sd(row.at("pcc")) + " | " + mean_sd(row.at("ssim")) + " | " +
            mean_sd(row.at("psnr_db")) + " | " + mean_sd(row.at("mse")) +
            " | " + std::to_string(row.at("psnr_inf_count").get<std::size_t>()) +
            " |\n";
    }
  }

  md += "\n## Intensity differences (tissue-masked, 8-bit units)\n\n";
  if (agg.at("intensity").empty()) {
    md += "No intensity comparison produced any pair.\n";
  } else {
    md += "| Comparison | n | Overall | R | G | B |\n";
    md += "|---|---|---|---|---|---|\n";
    for (const auto& row : agg.at("intensity")) {
      md += "| " + row.at("comparison").get<std::string>() + " | " +
            std::to_string(row.at("n").get<std::size_t>()) + " | " +
            mean_sd(row.at("overall")) + " | " + mean_sd(row.at("r")) + " | " +
            mean_sd(row.at("g")) + " | " + mean_sd(row.at("b")) + " |\n";
    }
  }

  md += "\n## Residual domain shift (stained cores vs. cohort)\n\n";
  if (agg.at("domain_shift").empty()) {
    md += "No stained summaries available.\n";
  } else {
    md += "| Core | Mean diff | Median diff |\n";
    md += "|---|---|---|\n";
    for (const auto& row : agg.at("domain_shift")) {
      md += "| " + row.at("core_id").get<std::string>() + " | " +
            fmt(row.at("mean_diff").get<double>()) + " | " +
            fmt(row.at("median_diff").get<double>()) + " |\n";
    }
  }

  md += "\n## Statistics (one-way ANOVA + Fisher LSD, alpha = " +
        fmt_p(stats.at("alpha").get<double>()) + ")\n";
  for (const auto& [metric, body] : stats.at("metrics").items()) {
    md += "\n### " + metric + "\n\n";
    if (body.contains("skipped")) {
      md += "Skipped: " + body.at("skipped").get<std::string>() + "\n";
      continue;
    }
    const std::string f_text = body.at("f_stat").is_string()
                                   ? body.at("f_stat").get<std::string>()
                                   : fmt(body.at("f_stat").get<double>());
    md += "F = " + f_text + ", p = " + fmt_p(body.at("p_value").get<double>()) +
          " (df " + std::to_string(body.at("df_between").get<std::size_t>()) +
          ", " + std::to_string(body.at("df_within").get<std::size_t>()) +
          ")\n\n";
    md += "| Pair | Mean diff | LSD threshold | Significant |\n";
    md += "|---|---|---|---|\n";
    for (const auto& pair : body.at("pairwise")) {
      md += "| " + pair.at("group_a").get<std::string>() + " vs " +
            pair.at("group_b").get<std::string>() + " | " +
            fmt(pair.at("mean_diff").get<double>()) + " | " +
            fmt(pair.at("lsd_threshold").get<double>()) + " | " +
            (pair.at("significant").get<bool>() ? "yes" : "no") + " |\n";
    }
  }

  md += "\n## Alignment\n\n";
  const bool aligned = agg.at("metadata").at("alignment").get<bool>();
  if (!aligned) {
    md += "Alignment was disabled for this run.\n";
  } else {
    const std::string metrics_text =
        read_text_file((rep / "metrics.csv").string());
    std::vector<std::string> flagged;
    std::size_t start = 0;
    bool header = true;
    while (start < metrics_text.size()) {
      std::size_t end = metrics_text.find('\n', start);
      if (end == std::string::npos) end = metrics_text.size();
      const std::string line = metrics_text.substr(start, end - start);
      start = end + 1;
      if (header) {
        header = false;
        continue;
      }
      if (line.empty()) continue;
      const auto fields = split_csv_line(line);
      if (fields.size() >= 11 && fields[10] == "false") {
        flagged.push_back("- " + fields[0] + " " + fields[1] + " (ecc " +
                          fields[9] + "); metrics computed unaligned");
      }
    }
    if (flagged.empty()) {
      md += "All alignments converged.\n";
    } else {
      md += "Non-converged alignments:\n\n";
      for (const auto& line : flagged) md += line + "\n";
    }
  }

  const fs::path eval_log = detail::logs_dir(out_dir) / "evaluate_status.json";
  if (fs::exists(eval_log)) {
    const auto log = nlohmann::json::parse(read_text_file(eval_log.string()));
    if (log.contains("skipped_pairs") && !log.at("skipped_pairs").empty()) {
      md += "\n## Skipped pairs\n\n";
      for (const auto& sp : log.at("skipped_pairs")) {
        md += "- " + sp.at("core_id").get<std::string>() + " " +
              sp.at("comparison").get<std::string>() + ": " +
              sp.at("reason").get<std::string>() + "\n";
      }
    }
  }

  md += "\n## Core status\n\n";
  bool any_log = false;
  bool any_trouble = false;
  for (const char* stage : {"extract", "harmonize", "infer", "evaluate"}) {
    const fs::path log_path =
        detail::logs_dir(out_dir) / (std::string(stage) + "_status.json");
    if (!fs::exists(log_path)) continue;
    any_log = true;
    const auto log = nlohmann::json::parse(read_text_file(log_path.string()));
    for (const auto& c : log.at("cores")) {
      const std::string status = c.at("status").get<std::string>();
      const std::string detail = c.at("detail").get<std::string>();
      // Checksum skips are routine; only failures and warnings are worth a row.
      if (status == "failed" || (status == "ok" && !detail.empty())) {
        any_trouble = true;
        md += "- " + std::string(stage) + " " +
              c.at("core_id").get<std::string>() + ": " + status;
        if (!detail.empty()) md += " (" + detail + ")";
        md += "\n";
      }
    }
  }
  if (!any_log) {
    md += "No stage logs found.\n";
  } else if (!any_trouble) {
    md += "All cores completed every stage.\n";
  }

  md += "\n## Metadata\n\n";
  md += "- PCC channels: " +
        agg.at("metadata").at("pcc_channels").get<std::string>() + "\n";
  md += "- SSIM input: " +
        agg.at("metadata").at("ssim_input").get<std::string>() + "\n";
  md += std::string("- Alignment: ") + (aligned ? "on" : "off") + "\n";

  const std::string out_path = (rep / "report.md").string();
  write_text_file(out_path, md);
  std::vector<detail::SourceRef> sources;
  for (const char* name : needed) {
    const std::string path = (rep / name).string();
    sources.push_back({path, fnv1a64_file(path)});
  }
  detail::write_provenance(out_path, "report", "", "", sources,
                           nlohmann::ordered_json::object(),
                           detail::task_signature("report", sources, "{}"));
}

}  // namespace stainpipe
