#pragma once

// Internal helpers shared by the stage implementations (runner.cpp,
// evaluate.cpp, report.cpp). Not installed.

#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "stainpipe/image.hpp"
#include "stainpipe/manifest.hpp"
#include "stainpipe/runner.hpp"

namespace stainpipe::detail {

namespace fs = std::filesystem;

inline fs::path extracted_dir(const std::string& out) {
  return fs::path(out) / "extracted";
}
inline fs::path harmonized_dir(const std::string& out) {
  return fs::path(out) / "harmonized";
}
inline fs::path virtual_dir(const std::string& out) {
  return fs::path(out) / "virtual";
}
inline fs::path reference_dir(const std::string& out) {
  return fs::path(out) / "reference";
}
inline fs::path exchange_dir(const std::string& out) {
  return fs::path(out) / "exchange";
}
inline fs::path logs_dir(const std::string& out) {
  return fs::path(out) / "logs";
}
inline fs::path reports_dir(const std::string& out) {
  return fs::path(out) / "reports";
}

struct SourceRef {
  std::string path;
  std::uint64_t checksum = 0;
};

// Content-addressed task signature: source checksums plus the parameter
// rendering. Paths are deliberately excluded so relocated-but-identical
// inputs still count as current.
std::string task_signature(const std::string& stage,
                           const std::vector<SourceRef>& sources,
                           const std::string& params_dump);

// True when the artifact exists, its sidecar records this signature, and its
// bytes still match the recorded checksum.
bool artifact_current(const std::string& artifact_path,
                      const std::string& signature);

// Writes <artifact>.provenance.json once the artifact itself is on disk.
void write_provenance(const std::string& artifact_path, const std::string& stage,
                      const std::string& core_id, const std::string& role,
                      const std::vector<SourceRef>& sources,
                      const nlohmann::ordered_json& parameters,
                      const std::string& signature);

// Runs fn over every core, catching exceptions into "failed" statuses.
// jobs > 1 uses a worker pool; results keep manifest order either way.
std::vector<CoreStatus> map_cores(
    const std::vector<CoreEntry>& cores, int jobs,
    const std::function<CoreStatus(const CoreEntry&)>& fn);

// Loads an artifact image and stamps the core id and role stain state.
CoreImage load_role_image(const std::string& out_dir, const std::string& core_id,
                          const std::string& role);

StainState role_stain_state(const std::string& role);

// The harmonized image whose tissue mask an image role inherits: virtual
// roles are never re-masked, they reuse their pathway input's mask.
std::string mask_source_role(const std::string& role);

void write_stage_log(const std::string& out_dir, const StageResult& result);

}  // namespace stainpipe::detail
