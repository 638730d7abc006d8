#include "twin/error.hpp"

namespace twin {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::syntax: return "SyntaxError";
    case ErrorCode::schema: return "SchemaError";
    case ErrorCode::not_found: return "NotFound";
    case ErrorCode::archive: return "ArchiveError";
    case ErrorCode::transport: return "TransportError";
    case ErrorCode::validation: return "ValidationError";
    case ErrorCode::cycle: return "CycleError";
    case ErrorCode::dangling_reference: return "DanglingReference";
    case ErrorCode::consistency: return "ConsistencyError";
    case ErrorCode::unknown_unit: return "UnknownUnit";
    case ErrorCode::direction: return "DirectionError";
    case ErrorCode::no_surrogate: return "NoSurrogate";
    case ErrorCode::missing_input: return "MissingInput";
    case ErrorCode::out_of_range: return "OutOfRange";
    case ErrorCode::signal_mismatch: return "SignalMismatch";
    case ErrorCode::empty_window: return "EmptyWindow";
    case ErrorCode::infeasible: return "Infeasible";
    case ErrorCode::degenerate_fit: return "DegenerateFit";
    case ErrorCode::io: return "IoError";
    case ErrorCode::usage: return "UsageError";
  }
  return "Error";
}

nlohmann::json Error::to_json() const {
  nlohmann::json j;
  j["code"] = std::string(to_string(code_));
  j["message"] = what();
  if (!path_.empty()) {
    j["path"] = path_;
  }
  return j;
}

}  // namespace twin
