#pragma once

#include <array>
#include <string>
#include <vector>

#include "stainpipe/tiling.hpp"

namespace stainpipe {

enum class BackendKind {
  identity,
  affine_color,
  external_command,
  precomputed_dir,
};

const char* backend_kind_name(BackendKind kind);

// Opaque patch transformer. identity and affine_color run in-process;
// external_command exchanges PNG patches with a subprocess through in/out
// directories; precomputed_dir picks up patches produced out of band.
struct BackendSpec {
  BackendKind kind = BackendKind::identity;

  // affine_color: out = clip(matrix * rgb + offset), row-major 3x3.
  std::array<double, 9> matrix = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  std::array<double, 3> offset = {0, 0, 0};

  // external_command: argv template; {in_dir} and {out_dir} placeholders are
  // substituted argument-wise (no shell involved).
  std::vector<std::string> command;

  // precomputed_dir: directory holding already-transformed patches.
  std::string directory;

  static BackendSpec make_identity();
  static BackendSpec make_affine(const std::array<double, 9>& m,
                                 const std::array<double, 3>& b);
  static BackendSpec make_external(std::vector<std::string> argv);
  static BackendSpec make_precomputed(std::string dir);

  // Validates kind-specific fields; called by the factories and config load.
  void validate() const;

  std::string to_json() const;
  static BackendSpec from_json(const std::string& text);
};

// Seconds allowed for one external-command invocation; 0 or unset disables
// the limit.
inline constexpr const char* kBackendTimeoutEnv = "STAINPIPE_BACKEND_TIMEOUT";

// Runs every patch in the list through the backend. The output list carries
// the same (row, col) set, kept flags, and tissue fractions; only pixels
// change. work_dir hosts the exchange directories for external_command (it
// is created and wiped per invocation) and is ignored by the other kinds.
std::vector<Patch> transform_patches(const std::vector<Patch>& patches,
                                     const BackendSpec& backend,
                                     const PatchGrid& grid,
                                     const std::string& core_id,
                                     const std::string& work_dir = {});

}  // namespace stainpipe
