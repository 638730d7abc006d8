#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace twin {

/// Machine-readable error categories. The names are what appears in the
/// `code` field of the CLI's stderr error object.
enum class ErrorCode {
  syntax,
  schema,
  not_found,
  archive,
  transport,
  validation,
  cycle,
  dangling_reference,
  consistency,
  unknown_unit,
  direction,
  no_surrogate,
  missing_input,
  out_of_range,
  signal_mismatch,
  empty_window,
  infeasible,
  degenerate_fit,
  io,
  usage,
};

std::string_view to_string(ErrorCode code);

/// Domain error carrying a category and, where meaningful, a path to the
/// offending element (idShort path, archive path, port id, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string path = {})
      : std::runtime_error(message), code_(code), path_(std::move(path)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& path() const noexcept { return path_; }

  /// {code, message, path?}
  nlohmann::json to_json() const;

 private:
  ErrorCode code_;
  std::string path_;
};

}  // namespace twin
