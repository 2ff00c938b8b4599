#pragma once

#include <stdexcept>
#include <string>

namespace sm {

enum class ErrorKind {
    UndeclaredSignal,
    StepTooLarge,
    UndefinedCollision,
    OutOfRange,
    SyntaxError,
    ValidationError,
    ParallelLines,
    DegenerateSpeedSet,
    InconsistentGeneration,
    SpeedNotInSet,
    BootstrapFailure,
    NotClean,
    DecodeFailure,
};

inline const char* error_kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::UndeclaredSignal: return "UndeclaredSignal";
        case ErrorKind::StepTooLarge: return "StepTooLarge";
        case ErrorKind::UndefinedCollision: return "UndefinedCollision";
        case ErrorKind::OutOfRange: return "OutOfRange";
        case ErrorKind::SyntaxError: return "SyntaxError";
        case ErrorKind::ValidationError: return "ValidationError";
        case ErrorKind::ParallelLines: return "ParallelLines";
        case ErrorKind::DegenerateSpeedSet: return "DegenerateSpeedSet";
        case ErrorKind::InconsistentGeneration: return "InconsistentGeneration";
        case ErrorKind::SpeedNotInSet: return "SpeedNotInSet";
        case ErrorKind::BootstrapFailure: return "BootstrapFailure";
        case ErrorKind::NotClean: return "NotClean";
        case ErrorKind::DecodeFailure: return "DecodeFailure";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

  private:
    ErrorKind kind_;
};

}  // namespace sm
