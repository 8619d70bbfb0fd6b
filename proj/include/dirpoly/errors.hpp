#pragma once

#include <stdexcept>
#include <string>

namespace dirpoly {

enum class ErrorCode {
  ConfigInvalid,
  TooLarge,
  BudgetExceeded,
  IndexOverflow,
  NonMonotoneCondition,
  OutsideU0,
  OutsideU1,
  OutsideU2,
  MissingSlices,
  InsufficientSamples,
  NoSurvivor,
  NumericRange,
};

// All recoverable failures carry a code so the CLI can map them to exit
// statuses (2 = config, 3 = budget/memory, 1 = everything else).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

  int exit_status() const {
    switch (code_) {
      case ErrorCode::ConfigInvalid:
        return 2;
      case ErrorCode::TooLarge:
      case ErrorCode::BudgetExceeded:
        return 3;
      default:
        return 1;
    }
  }

  const char* code_name() const {
    switch (code_) {
      case ErrorCode::ConfigInvalid: return "ConfigInvalid";
      case ErrorCode::TooLarge: return "TooLarge";
      case ErrorCode::BudgetExceeded: return "BudgetExceeded";
      case ErrorCode::IndexOverflow: return "IndexOverflow";
      case ErrorCode::NonMonotoneCondition: return "NonMonotoneCondition";
      case ErrorCode::OutsideU0: return "OutsideU0";
      case ErrorCode::OutsideU1: return "OutsideU1";
      case ErrorCode::OutsideU2: return "OutsideU2";
      case ErrorCode::MissingSlices: return "MissingSlices";
      case ErrorCode::InsufficientSamples: return "InsufficientSamples";
      case ErrorCode::NoSurvivor: return "NoSurvivor";
      case ErrorCode::NumericRange: return "NumericRange";
    }
    return "Unknown";
  }

 private:
  ErrorCode code_;
};

}  // namespace dirpoly
