#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "stainpipe/error.hpp"
#include "stainpipe/manifest.hpp"
#include "stainpipe/runner.hpp"
#include "stainpipe/synth.hpp"

namespace {

using stainpipe::RunContext;
using stainpipe::StageResult;

void print_summary(const StageResult& result) {
  std::size_t ok = 0, skipped = 0, failed = 0;
  for (const auto& c : result.cores) {
    if (c.status == "ok") ++ok;
    if (c.status == "skipped") ++skipped;
    if (c.status == "failed") ++failed;
  }
  std::printf("%s: %zu ok, %zu skipped, %zu failed\n", result.stage.c_str(), ok,
              skipped, failed);
  for (const auto& c : result.cores) {
    if (c.status == "failed") {
      std::fprintf(stderr, "  %s failed: %s\n", c.core_id.c_str(),
                   c.detail.c_str());
    } else if (!c.detail.empty()) {
      std::printf("  %s: %s\n", c.core_id.c_str(), c.detail.c_str());
    }
  }
  for (const auto& p : result.skipped_pairs) {
    std::printf("  skipped pair %s %s: %s\n", p.core_id.c_str(),
                p.comparison.c_str(), p.reason.c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"virtual staining / destaining pipeline"};
  app.require_subcommand(1);

  std::string manifest_path, config_path, out_dir;
  std::string pathway = "all";
  int jobs = 1;
  bool force = false;
  bool no_align = false;

  const auto add_common = [&](CLI::App* cmd, bool with_pathway) {
    cmd->add_option("--manifest", manifest_path, "dataset manifest (JSON)")
        ->required();
    cmd->add_option("--config", config_path,
                    "run configuration (JSON); defaults apply when omitted");
    cmd->add_option("--out", out_dir, "output directory")->required();
    cmd->add_option("--jobs", jobs, "cores processed in parallel")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--force", force, "recompute artifacts even when current");
    cmd->add_flag("--no-align", no_align,
                  "skip rigid alignment during evaluation");
    if (with_pathway) {
      cmd->add_option("--pathway", pathway,
                      "destain | direct_stain | destain_restain | all");
    }
  };

  auto* c_extract = app.add_subcommand(
      "extract", "cut core regions out of the scans and downsample");
  add_common(c_extract, false);
  auto* c_harmonize = app.add_subcommand(
      "harmonize", "normalize stains and calibrate unstained intensities");
  add_common(c_harmonize, false);
  auto* c_infer =
      app.add_subcommand("infer", "run the virtual staining pathways");
  add_common(c_infer, true);
  auto* c_evaluate = app.add_subcommand(
      "evaluate", "compute pixel metrics, intensity analysis, and statistics");
  add_common(c_evaluate, false);
  auto* c_all =
      app.add_subcommand("all", "run every stage, then render the report");
  add_common(c_all, true);

  auto* c_report =
      app.add_subcommand("report", "render reports/report.md for a run");
  c_report->add_option("--out", out_dir, "output directory of the run")
      ->required();

  auto* c_synth = app.add_subcommand(
      "synth", "write the bundled synthetic dataset (mock scans + config)");
  std::string synth_dir;
  int synth_cores = 6;
  std::uint64_t synth_seed = 20240817;
  c_synth->add_option("--out", synth_dir, "dataset directory")->required();
  c_synth->add_option("--cores", synth_cores, "number of mock cores")
      ->check(CLI::PositiveNumber);
  c_synth->add_option("--seed", synth_seed, "generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_report->parsed()) {
      stainpipe::cmd_report(out_dir);
      std::printf("report written to %s/reports/report.md\n", out_dir.c_str());
      return 0;
    }
    if (c_synth->parsed()) {
      stainpipe::SynthOptions opts;
      opts.out_dir = synth_dir;
      opts.cores = synth_cores;
      opts.seed = synth_seed;
      const std::string manifest = stainpipe::generate_synthetic_dataset(opts);
      std::printf("synthetic dataset written, manifest at %s\n",
                  manifest.c_str());
      return 0;
    }

    RunContext ctx;
    ctx.manifest = stainpipe::Manifest::load(manifest_path);
    ctx.config = config_path.empty() ? stainpipe::RunConfig{}
                                     : stainpipe::RunConfig::load(config_path);
    ctx.out_dir = out_dir;
    ctx.jobs = jobs;
    ctx.force = force;
    ctx.no_align = no_align;
    ctx.pathway = pathway;

    if (c_all->parsed()) {
      return stainpipe::run_all(ctx);
    }
    StageResult result;
    if (c_extract->parsed()) result = stainpipe::cmd_extract(ctx);
    if (c_harmonize->parsed()) result = stainpipe::cmd_harmonize(ctx);
    if (c_infer->parsed()) result = stainpipe::cmd_infer(ctx);
    if (c_evaluate->parsed()) result = stainpipe::cmd_evaluate(ctx);
    print_summary(result);
    return result.exit_code();
  } catch (const stainpipe::PipelineError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
