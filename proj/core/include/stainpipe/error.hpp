#pragma once

#include <stdexcept>
#include <string>

namespace stainpipe {

// Error taxonomy shared by every stage of the pipeline. Codes are stable
// identifiers; the message carries the specifics (offending file, patch
// coordinate, byte offset, ...).
enum class errc {
  parse_error,
  unsupported_geometry,
  empty_roi,
  io_error,
  format_error,
  upsample_unsupported,
  insufficient_tissue,
  degenerate_stain,
  grid_mismatch,
  duplicate_patch,
  range_error,
  backend_failure,
  incomplete_output,
  contract_violation,
  degenerate_image,
  too_small,
  undefined_statistic,
  invalid_config,
  missing_artifact,
};

const char* errc_name(errc code);

class PipelineError : public std::runtime_error {
public:
  PipelineError(errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  errc code() const noexcept { return code_; }

private:
  errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& message) {
  throw PipelineError(code, message);
}

}  // namespace stainpipe
