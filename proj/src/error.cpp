#include "homstokes/error.hpp"

namespace homstokes {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_resolution:
      return "invalid-resolution";
    case ErrorCode::invalid_domain:
      return "invalid-domain";
    case ErrorCode::type_mismatch:
      return "type-mismatch";
    case ErrorCode::invalid_coefficient:
      return "invalid-coefficient";
    case ErrorCode::solver_failure:
      return "solver-failure";
    case ErrorCode::incompatible_data:
      return "incompatible-data";
    case ErrorCode::invalid_radius:
      return "invalid-radius";
    case ErrorCode::invalid_layer:
      return "invalid-layer";
    case ErrorCode::undefined_ratio:
      return "undefined-ratio";
    case ErrorCode::resolution_guard:
      return "resolution-guard";
    case ErrorCode::invalid_window:
      return "invalid-window";
    case ErrorCode::incompatible_mesh:
      return "incompatible-mesh";
    case ErrorCode::insufficient_data:
      return "insufficient-data";
    case ErrorCode::io_error:
      return "io-error";
    case ErrorCode::invalid_config:
      return "invalid-config";
  }
  return "error";
}

}  // namespace homstokes
