#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace deepgreen {

enum class ErrorCode {
  MalformedDocument,
  DictionaryLoadError,
  PayloadMismatch,
  MalformedAnswer,
  OutOfRange,
  BatchAborted,
  FixtureMissing,
  TransportError,
  MissingLabels,
  DuplicatePair,
  ArmMismatch,
  NegativeCount,
  EmptyGroup,
  GroupMismatch,
  PlanInfeasible,
  EmptyConfusion,
  EmptyInput,
  RankDeficient,
  EmptyAfterFilter,
  NotBinary,
  NonCount,
  NoLag,
  InsufficientControls,
  NonConvergedFraction,
  MissingArtifact,
  InvalidConfig,
  IoError,
};

inline constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::DictionaryLoadError: return "DictionaryLoadError";
    case ErrorCode::PayloadMismatch: return "PayloadMismatch";
    case ErrorCode::MalformedAnswer: return "MalformedAnswer";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::BatchAborted: return "BatchAborted";
    case ErrorCode::FixtureMissing: return "FixtureMissing";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::MissingLabels: return "MissingLabels";
    case ErrorCode::DuplicatePair: return "DuplicatePair";
    case ErrorCode::ArmMismatch: return "ArmMismatch";
    case ErrorCode::NegativeCount: return "NegativeCount";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::GroupMismatch: return "GroupMismatch";
    case ErrorCode::PlanInfeasible: return "PlanInfeasible";
    case ErrorCode::EmptyConfusion: return "EmptyConfusion";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::EmptyAfterFilter: return "EmptyAfterFilter";
    case ErrorCode::NotBinary: return "NotBinary";
    case ErrorCode::NonCount: return "NonCount";
    case ErrorCode::NoLag: return "NoLag";
    case ErrorCode::InsufficientControls: return "InsufficientControls";
    case ErrorCode::NonConvergedFraction: return "NonConvergedFraction";
    case ErrorCode::MissingArtifact: return "MissingArtifact";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code so
/// callers (and tests) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace deepgreen
