// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace designdit {

enum class ErrorCode {
    // Layout validation.
    TooManyElements,
    DescriptionTooLong,
    DegenerateBox,
    OutOfRange,
    // Encoders.
    EmptyText,
    PlacementOutOfBounds,
    DimensionMismatch,
    // Attention mask.
    UnknownRegion,
    // Model / training.
    ShapeMismatch,
    NonFiniteLoss,
    // Dataset.
    PlacementFailed,
    UnsupportedGlyph,
    SchemaViolation,
    // Metrics.
    UnknownColorWord,
    // Plumbing.
    IoError,
    InvalidConfig,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the core carries one of the codes above so the C API
/// can translate it without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& message);

}  // namespace designdit
