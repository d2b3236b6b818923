#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stainpipe/error.hpp"
#include "stainpipe/runner.hpp"
#include "stainpipe/synth.hpp"
#include "support.hpp"

using namespace stainpipe;
namespace fs = std::filesystem;

namespace {

// One synthetic two-core dataset plus a completed pipeline run, shared by
// every test in this file (built on first use).
struct MiniRun {
  support::TempDir dir{"runner"};
  RunContext ctx;
  int exit_code = -1;

  MiniRun() {
    SynthOptions opts;
    opts.out_dir = dir.join("data");
    opts.cores = 2;
    opts.slide_width = 600;
    opts.slide_height = 600;
    const std::string manifest_path = generate_synthetic_dataset(opts);
    ctx.manifest = Manifest::load(manifest_path);
    ctx.config = RunConfig::load((fs::path(opts.out_dir) / "config.json").string());
    ctx.out_dir = dir.join("out");
    exit_code = run_all(ctx);
  }
};

MiniRun& mini() {
  static MiniRun m;
  return m;
}

std::vector<std::string> core_ids(const MiniRun& m) {
  std::vector<std::string> ids;
  for (const auto& core : m.ctx.manifest.cores) ids.push_back(core.core_id);
  return ids;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

CoreStatus status(const std::string& id, const std::string& st) {
  CoreStatus c;
  c.core_id = id;
  c.status = st;
  return c;
}

}  // namespace

TEST_CASE("run_all completes the synthetic dataset") {
  const MiniRun& m = mini();
  CHECK(m.exit_code == 0);
  for (const auto& id : core_ids(m)) {
    for (const char* role :
         {"gus", "ghe", "gus_raw", "ghe_raw", "vds", "vhe", "vher"}) {
      const std::string path = role_image_path(m.ctx.out_dir, id, role);
      CHECK_MESSAGE(fs::exists(path), path);
    }
  }
  const fs::path out(m.ctx.out_dir);
  for (const char* stage : {"extract", "harmonize", "infer", "evaluate"}) {
    CHECK(fs::exists(out / "logs" / (std::string(stage) + "_status.json")));
  }
  for (const char* name :
       {"metrics.csv", "intensity_summaries.csv", "intensity_diffs.csv",
        "aggregates.json", "stats.json", "report.md"}) {
    CHECK(fs::exists(out / "reports" / name));
  }
}

TEST_CASE("rerun without force skips current artifacts and keeps bytes") {
  const MiniRun& m = mini();
  const std::string metrics =
      (fs::path(m.ctx.out_dir) / "reports" / "metrics.csv").string();
  const std::vector<std::uint8_t> before = support::read_binary(metrics);

  const StageResult ext = cmd_extract(m.ctx);
  REQUIRE(ext.cores.size() == 2);
  for (const auto& c : ext.cores) CHECK(c.status == "skipped");
  CHECK(ext.exit_code() == 0);

  // evaluate always recomputes (combined CSVs have no per-core checksum),
  // but determinism keeps the bytes identical
  const StageResult ev = cmd_evaluate(m.ctx);
  for (const auto& c : ev.cores) CHECK(c.status == "ok");
  CHECK(support::read_binary(metrics) == before);
}

TEST_CASE("force reruns every core") {
  RunContext ctx = mini().ctx;
  ctx.force = true;
  const StageResult ext = cmd_extract(ctx);
  for (const auto& c : ext.cores) CHECK(c.status == "ok");
}

TEST_CASE("no_align zeroes the alignment columns") {
  const MiniRun& m = mini();
  // evaluate into a copy so the shared fixture keeps its aligned outputs
  support::TempDir copy_dir("runner_noalign");
  const fs::path out2 = copy_dir.join("out");
  fs::copy(m.ctx.out_dir, out2, fs::copy_options::recursive);

  RunContext ctx = m.ctx;
  ctx.out_dir = out2.string();
  ctx.no_align = true;
  ctx.force = true;
  const StageResult ev = cmd_evaluate(ctx);
  CHECK(ev.exit_code() == 0);

  std::ifstream in(out2 / "reports" / "metrics.csv");
  std::string line;
  REQUIRE(std::getline(in, line));
  const std::vector<std::string> header = split_csv_line(line);
  int theta = -1, tx = -1, ty = -1, ecc = -1, conv = -1;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) {
    if (header[i] == "align_theta_deg") theta = i;
    if (header[i] == "align_tx") tx = i;
    if (header[i] == "align_ty") ty = i;
    if (header[i] == "align_ecc") ecc = i;
    if (header[i] == "align_converged") conv = i;
  }
  REQUIRE(theta >= 0);
  REQUIRE(conv >= 0);
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    REQUIRE(f.size() == header.size());
    CHECK(std::stod(f[theta]) == 0.0);
    CHECK(std::stod(f[tx]) == 0.0);
    CHECK(std::stod(f[ty]) == 0.0);
    CHECK(std::stod(f[ecc]) == 1.0);
    CHECK(f[conv] == "true");
    ++rows;
  }
  CHECK(rows > 0);
}

TEST_CASE("corrupt input fails that core and leaves the rest running") {
  support::TempDir dir("runner_corrupt");
  SynthOptions opts;
  opts.out_dir = dir.join("data");
  opts.cores = 2;
  opts.slide_width = 600;
  opts.slide_height = 600;
  const std::string manifest_path = generate_synthetic_dataset(opts);

  RunContext ctx;
  ctx.manifest = Manifest::load(manifest_path);
  ctx.config = RunConfig::load((fs::path(opts.out_dir) / "config.json").string());
  ctx.out_dir = dir.join("out");

  // clobber the stained scan of the first core
  std::ofstream(ctx.manifest.cores[0].stained_path, std::ios::trunc)
      << "not a png";
  StageResult ext = cmd_extract(ctx);
  REQUIRE(ext.cores.size() == 2);
  CHECK(ext.failed_count() == 1);
  CHECK(ext.exit_code() == 2);
  bool failed_has_detail = false;
  for (const auto& c : ext.cores) {
    if (c.status == "failed") failed_has_detail = !c.detail.empty();
  }
  CHECK(failed_has_detail);

  // clobber the second core as well: nothing survives
  std::ofstream(ctx.manifest.cores[1].stained_path, std::ios::trunc)
      << "still not a png";
  ctx.force = true;
  ext = cmd_extract(ctx);
  CHECK(ext.failed_count() == 2);
  CHECK(ext.exit_code() == 1);
  CHECK(run_all(ctx) == 1);
}

TEST_CASE("stage exit codes treat skips as successes") {
  StageResult r;
  r.stage = "extract";
  r.cores = {status("a", "ok"), status("b", "skipped")};
  CHECK(r.failed_count() == 0);
  CHECK(r.exit_code() == 0);

  r.cores.push_back(status("c", "failed"));
  CHECK(r.failed_count() == 1);
  CHECK(r.exit_code() == 2);

  r.cores = {status("a", "failed"), status("b", "failed")};
  CHECK(r.exit_code() == 1);
}

TEST_CASE("stage status json carries per-core rows") {
  StageResult r;
  r.stage = "evaluate";
  r.cores = {status("a", "ok"), status("b", "failed")};
  r.cores[1].detail = "boom";
  PairSkip skip;
  skip.core_id = "a";
  skip.comparison = "ghe_vs_vhe";
  skip.reason = "missing vhe";
  r.skipped_pairs.push_back(skip);

  const auto j = nlohmann::json::parse(stage_status_json(r));
  CHECK(j.at("stage") == "evaluate");
  REQUIRE(j.at("cores").size() == 2);
  CHECK(j.at("cores")[0].at("core_id") == "a");
  CHECK(j.at("cores")[1].at("status") == "failed");
  CHECK(j.at("cores")[1].at("detail") == "boom");
  REQUIRE(j.at("skipped_pairs").size() == 1);
  CHECK(j.at("skipped_pairs")[0].at("comparison") == "ghe_vs_vhe");

  // non-evaluate stages have no skipped_pairs key
  r.stage = "extract";
  r.skipped_pairs.clear();
  const auto j2 = nlohmann::json::parse(stage_status_json(r));
  CHECK_FALSE(j2.contains("skipped_pairs"));
}

TEST_CASE("report on an empty directory names every missing input") {
  support::TempDir dir("runner_report");
  try {
    cmd_report(dir.path());
    FAIL("missing inputs should throw");
  } catch (const PipelineError& e) {
    CHECK(e.code() == errc::missing_artifact);
    const std::string msg = e.what();
    for (const char* name :
         {"metrics.csv", "intensity_summaries.csv", "intensity_diffs.csv",
          "aggregates.json", "stats.json"}) {
      CHECK_MESSAGE(msg.find(name) != std::string::npos, name);
    }
  }
}

#ifdef STAINPIPE_CLI
TEST_CASE("cli answers --help and rejects unknown commands") {
  const std::string cli = STAINPIPE_CLI;
  REQUIRE(fs::exists(cli));
  const int help =
      std::system(("\"" + cli + "\" --help > /dev/null 2>&1").c_str());
  CHECK(help == 0);
  const int bogus =
      std::system(("\"" + cli + "\" frobnicate > /dev/null 2>&1").c_str());
  CHECK(bogus != 0);
}

TEST_CASE("cli synth and report run end to end") {
  support::TempDir dir("runner_cli");
  const std::string cli = STAINPIPE_CLI;
  const std::string data = dir.join("data");
  const std::string out = dir.join("out");
  const int synth_rc = std::system(
      ("\"" + cli + "\" synth --out \"" + data + "\" --cores 1 > /dev/null 2>&1")
          .c_str());
  REQUIRE(synth_rc == 0);
  const int all_rc = std::system(
      ("\"" + cli + "\" all --manifest \"" + data + "/manifest.json\" --config \"" +
       data + "/config.json\" --out \"" + out + "\" > /dev/null 2>&1")
          .c_str());
  CHECK(all_rc == 0);
  CHECK(fs::exists(fs::path(out) / "reports" / "report.md"));
}
#endif
