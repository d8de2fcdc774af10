// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "designdit/tensor.hpp"
#include "json.hpp"

// File layout (all integers little-endian):
//   8 bytes   magic "DDTCKPT1"
//   8 bytes   u64 header length H
//   H bytes   UTF-8 JSON header
//   ...       tensor data, IEEE-754 f32, row-major, at header-relative offsets
//
// Header: {"format": "designdit-checkpoint", "version": 1, "config": {...},
//          "train_state": {...}, "tensors": [{"name", "shape": [rows, cols],
//          "offset": bytes from the start of the data section, "dtype": "f32"}]}
namespace designdit {

struct NamedTensor {
    std::string name;
    Mat value;
};

struct CheckpointData {
    nlohmann::json config = nlohmann::json::object();
    nlohmann::json train_state = nlohmann::json::object();
    std::vector<NamedTensor> tensors;
};

/// Values are stored as f32; doubles that already hold f32 values round-trip exactly.
void write_checkpoint(const std::filesystem::path& path, const CheckpointData& data);

/// Throws IoError for unreadable or truncated files and SchemaViolation for bad headers.
CheckpointData read_checkpoint(const std::filesystem::path& path);

}  // namespace designdit
