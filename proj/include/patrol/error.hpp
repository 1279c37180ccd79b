#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace patrol {

enum class ErrorCode {
    DuplicateNodeInCircle,
    EmptyCircle,
    UnassignedCircle,
    CapacityExceeded,
    NodeNotOnCircle,
    UnknownNode,
    UnknownCircle,
    InvalidInsertion,
    NonMonotonicStep,
    NoConvergence,
    DimensionMismatch,
    IncompatibleMutation,
    InvalidConfig,
    Io,
};

std::string_view error_name(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

/// Thrown when the summed component frequencies exceed one agent's capacity.
class CapacityExceededError : public Error {
  public:
    explicit CapacityExceededError(double sum_percent);

    double sum_percent() const noexcept { return sum_percent_; }

  private:
    double sum_percent_;
};

}  // namespace patrol
