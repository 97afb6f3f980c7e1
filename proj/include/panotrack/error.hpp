// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace panotrack {

enum class ErrorCode {
    kBehindCamera,
    kInsufficientKeypoints,
    kNonPositiveHeight,
    kDegenerateHeight,
    kUnknownView,
    kInvalidRig,
    kDimensionMismatch,
    kZeroNormEmbedding,
    kNonFiniteCost,
    kNonMonotoneFrame,
    kInvalidConfig,
    kEmptyGroundTruth,
    kIo,
    kSchema,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::kBehindCamera: return "BehindCamera";
        case ErrorCode::kInsufficientKeypoints: return "InsufficientKeypoints";
        case ErrorCode::kNonPositiveHeight: return "NonPositiveHeight";
        case ErrorCode::kDegenerateHeight: return "DegenerateHeight";
        case ErrorCode::kUnknownView: return "UnknownView";
        case ErrorCode::kInvalidRig: return "InvalidRig";
        case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
        case ErrorCode::kZeroNormEmbedding: return "ZeroNormEmbedding";
        case ErrorCode::kNonFiniteCost: return "NonFiniteCost";
        case ErrorCode::kNonMonotoneFrame: return "NonMonotoneFrame";
        case ErrorCode::kInvalidConfig: return "ConfigInvalid";
        case ErrorCode::kEmptyGroundTruth: return "EmptyGroundTruth";
        case ErrorCode::kIo: return "IoError";
        case ErrorCode::kSchema: return "SchemaError";
    }
    return "Unknown";
}

/// All library failures are reported through this exception; code() tells
/// callers which contract was violated.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace panotrack
