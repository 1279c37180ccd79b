#include "patrol/error.hpp"

#include <cstdio>

namespace patrol {

std::string_view error_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::DuplicateNodeInCircle: return "DuplicateNodeInCircle";
        case ErrorCode::EmptyCircle: return "EmptyCircle";
        case ErrorCode::UnassignedCircle: return "UnassignedCircle";
        case ErrorCode::CapacityExceeded: return "CapacityExceeded";
        case ErrorCode::NodeNotOnCircle: return "NodeNotOnCircle";
        case ErrorCode::UnknownNode: return "UnknownNode";
        case ErrorCode::UnknownCircle: return "UnknownCircle";
        case ErrorCode::InvalidInsertion: return "InvalidInsertion";
        case ErrorCode::NonMonotonicStep: return "NonMonotonicStep";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::IncompatibleMutation: return "IncompatibleMutation";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

namespace {

std::string capacity_message(double sum) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "sum of component frequencies is %.2f%%, team capacity requires sum <= 100%%", sum);
    return buf;
}

}  // namespace

CapacityExceededError::CapacityExceededError(double sum_percent)
    : Error(ErrorCode::CapacityExceeded, capacity_message(sum_percent)), sum_percent_(sum_percent) {}

}  // namespace patrol
