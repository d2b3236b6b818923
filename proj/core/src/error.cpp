#include "stainpipe/error.hpp"

namespace stainpipe {

const char* errc_name(errc code) {
  switch (code) {
    case errc::parse_error: return "parse error";
    case errc::unsupported_geometry: return "unsupported geometry";
    case errc::empty_roi: return "empty roi";
    case errc::io_error: return "i/o error";
    case errc::format_error: return "format error";
    case errc::upsample_unsupported: return "upsample unsupported";
    case errc::insufficient_tissue: return "insufficient tissue";
    case errc::degenerate_stain: return "degenerate stain";
    case errc::grid_mismatch: return "grid mismatch";
    case errc::duplicate_patch: return "duplicate patch";
    case errc::range_error: return "range error";
    case errc::backend_failure: return "backend failure";
    case errc::incomplete_output: return "incomplete output";
    case errc::contract_violation: return "contract violation";
    case errc::degenerate_image: return "degenerate image";
    case errc::too_small: return "too small";
    case errc::undefined_statistic: return "undefined statistic";
    case errc::invalid_config: return "invalid config";
    case errc::missing_artifact: return "missing artifact";
  }
  return "error";
}

}  // namespace stainpipe
