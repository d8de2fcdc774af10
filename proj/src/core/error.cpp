// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#include "designdit/error.hpp"

namespace designdit {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::TooManyElements: return "TooManyElements";
    case ErrorCode::DescriptionTooLong: return "DescriptionTooLong";
    case ErrorCode::DegenerateBox: return "DegenerateBox";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::PlacementOutOfBounds: return "PlacementOutOfBounds";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UnknownRegion: return "UnknownRegion";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::PlacementFailed: return "PlacementFailed";
    case ErrorCode::UnsupportedGlyph: return "UnsupportedGlyph";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::UnknownColorWord: return "UnknownColorWord";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void raise(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace designdit
