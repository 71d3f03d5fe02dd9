#ifndef VSN_ERRORS_HPP
#define VSN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace vsn {

enum class ErrorCode {
  // sim kernel
  PastTime,
  UnknownNode,
  LinkDown,
  // wire codec
  UnsupportedCode,
  UnsupportedVersion,
  UnsupportedType,
  OversizeToken,
  Truncated,
  MalformedOption,
  EmptyBatch,
  MalformedJson,
  MissingField,
  // physical nodes
  UnknownQuantity,
  NotTypeA,
  NoGto,
  // virtual sensor runtime
  CapacityExceeded,
  DuplicateTask,
  UnknownTask,
  // sensor agent
  UnmanagedNode,
  DialectError,
  UnknownTarget,
  MalformedCommand,
  ProprietaryChannel,
  // overlay
  NoCandidates,
  AllDeclined,
  UnknownOverlay,
  AlreadyMember,
  NotMember,
  // registry
  DuplicateRegistration,
  // fire contour
  BadParams,
  RateAboveMax,
  TooFewReports,
  OverlayNotReady,
  // harness
  NoResponse,
  NeverReady,
  IncompleteRound,
  ZeroBaseline,
  ConfigInvalid,
};

constexpr const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::PastTime: return "PastTime";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::LinkDown: return "LinkDown";
    case ErrorCode::UnsupportedCode: return "UnsupportedCode";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::UnsupportedType: return "UnsupportedType";
    case ErrorCode::OversizeToken: return "OversizeToken";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::MalformedOption: return "MalformedOption";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::MalformedJson: return "MalformedJson";
    case ErrorCode::MissingField: return "MissingField";
    case ErrorCode::UnknownQuantity: return "UnknownQuantity";
    case ErrorCode::NotTypeA: return "NotTypeA";
    case ErrorCode::NoGto: return "NoGto";
    case ErrorCode::CapacityExceeded: return "CapacityExceeded";
    case ErrorCode::DuplicateTask: return "DuplicateTask";
    case ErrorCode::UnknownTask: return "UnknownTask";
    case ErrorCode::UnmanagedNode: return "UnmanagedNode";
    case ErrorCode::DialectError: return "DialectError";
    case ErrorCode::UnknownTarget: return "UnknownTarget";
    case ErrorCode::MalformedCommand: return "MalformedCommand";
    case ErrorCode::ProprietaryChannel: return "ProprietaryChannel";
    case ErrorCode::NoCandidates: return "NoCandidates";
    case ErrorCode::AllDeclined: return "AllDeclined";
    case ErrorCode::UnknownOverlay: return "UnknownOverlay";
    case ErrorCode::AlreadyMember: return "AlreadyMember";
    case ErrorCode::NotMember: return "NotMember";
    case ErrorCode::DuplicateRegistration: return "DuplicateRegistration";
    case ErrorCode::BadParams: return "BadParams";
    case ErrorCode::RateAboveMax: return "RateAboveMax";
    case ErrorCode::TooFewReports: return "TooFewReports";
    case ErrorCode::OverlayNotReady: return "OverlayNotReady";
    case ErrorCode::NoResponse: return "NoResponse";
    case ErrorCode::NeverReady: return "NeverReady";
    case ErrorCode::IncompleteRound: return "IncompleteRound";
    case ErrorCode::ZeroBaseline: return "ZeroBaseline";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
  }
  return "Error";
}

/// Exception carrying a machine-checkable error code alongside the message.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace vsn

#endif
