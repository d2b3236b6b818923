#pragma once

#include <string>
#include <vector>

#include "stainpipe/manifest.hpp"

namespace stainpipe {

struct CoreStatus {
  std::string core_id;
  std::string status;  // "ok" | "skipped" | "failed"
  std::string detail;  // failure reason, skip reason, or warning
};

struct PairSkip {
  std::string core_id;
  std::string comparison;
  std::string reason;
};

// Outcome of one pipeline stage. Skipped cores count as successes (their
// outputs are present and current).
struct StageResult {
  std::string stage;
  std::vector<CoreStatus> cores;
  std::vector<PairSkip> skipped_pairs;  // evaluate only

  std::size_t failed_count() const;
  // 0 when every core succeeded, 2 on partial failure, 1 when all failed.
  int exit_code() const;
};

struct RunContext {
  Manifest manifest;
  RunConfig config;
  std::string out_dir;
  int jobs = 1;
  bool force = false;       // recompute even when checksums say current
  bool no_align = false;    // overrides config.align for evaluation
  std::string pathway = "all";  // destain | direct_stain | destain_restain | all
};

// Stage entry points. Each writes its artifacts plus a status log under
// <out_dir>/logs/ and returns the per-core outcomes. Configuration errors
// throw; per-core failures are captured in the result.
StageResult cmd_extract(const RunContext& ctx);
StageResult cmd_harmonize(const RunContext& ctx);
StageResult cmd_infer(const RunContext& ctx);
StageResult cmd_evaluate(const RunContext& ctx);

// Renders reports/report.md from the evaluation outputs; missing inputs
// raise a missing-artifact error naming every absent file.
void cmd_report(const std::string& out_dir);

// extract -> harmonize -> infer -> evaluate -> report. A stage with no
// surviving cores aborts the run. Returns the process exit code (0 all
// succeeded, 2 partial failures, 1 total failure).
int run_all(const RunContext& ctx);

// Canonical artifact location for an image role of one core. Roles: gus,
// ghe (harmonized), gus_raw, ghe_raw (extracted), vds, vhe, vher (virtual).
std::string role_image_path(const std::string& out_dir,
                            const std::string& core_id, const std::string& role);

// Serializes a stage status log (deterministic field order).
std::string stage_status_json(const StageResult& result);

}  // namespace stainpipe
