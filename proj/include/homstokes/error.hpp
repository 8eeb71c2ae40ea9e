#pragma once

#include <stdexcept>
#include <string>

namespace homstokes {

enum class ErrorCode {
  invalid_resolution,
  invalid_domain,
  type_mismatch,
  invalid_coefficient,
  solver_failure,
  incompatible_data,
  invalid_radius,
  invalid_layer,
  undefined_ratio,
  resolution_guard,
  invalid_window,
  incompatible_mesh,
  insufficient_data,
  io_error,
  invalid_config,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace homstokes
