#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tabi {

enum class ErrorCode {
  invalid_argument,
  unknown_template,
  unbound_slot,
  invalid_template,
  empty_catalog,
  empty_history,
  backend_timeout,
  backend_unavailable,
  malformed_response,
  parse_failure,
  extraction_failure,
  catalog_too_small,
  unknown_spot,
  no_route,
  provider_unavailable,
  day_overflow,
  unknown_session,
  session_not_active,
  utterance_rejected,
  capacity_exceeded,
  config_error,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tabi
