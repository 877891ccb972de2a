#pragma once

#include <stdexcept>
#include <string>

namespace rfdna {

enum class ErrorCode {
  InvalidLength,
  InvalidCutoff,
  NoTransientFound,
  DegenerateSignal,
  InvalidParams,
  DegenerateTF,
  InvalidShape,
  InvalidValue,
  InvalidRelevance,
  SingularScatter,
  NumericalFailure,
  InvalidNeighborCount,
  InvalidCount,
  InvalidInput,
  TrainingFailed,
  MissingData,
  InvalidModel,
  IoError,
  FormatError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidLength: return "InvalidLength";
    case ErrorCode::InvalidCutoff: return "InvalidCutoff";
    case ErrorCode::NoTransientFound: return "NoTransientFound";
    case ErrorCode::DegenerateSignal: return "DegenerateSignal";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::DegenerateTF: return "DegenerateTF";
    case ErrorCode::InvalidShape: return "InvalidShape";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::InvalidRelevance: return "InvalidRelevance";
    case ErrorCode::SingularScatter: return "SingularScatter";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::InvalidNeighborCount: return "InvalidNeighborCount";
    case ErrorCode::InvalidCount: return "InvalidCount";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::TrainingFailed: return "TrainingFailed";
    case ErrorCode::MissingData: return "MissingData";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace rfdna
