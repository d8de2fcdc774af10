// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "designdit/attention_mask.hpp"
#include "designdit/dataset.hpp"
#include "designdit/mmdit.hpp"
#include "json.hpp"

namespace designdit {

struct TrainingConfig {
    double lr = 1e-4;
    std::uint64_t steps = 2000;
    int batch = 8;
    std::uint64_t seed = 0;
    /// Accepted (width, height) buckets; samples of any other size are rejected.
    std::vector<std::pair<int, int>> buckets{{64, 64}, {96, 64}};
    TrainableSet trainable = TrainableSet::All;
    double weight_decay = 0.01;
    double clip_norm = 1.0;
    int jobs = 1;

    friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

struct SamplingConfig {
    int steps = 50;
    std::uint64_t seed = 0;
    friend bool operator==(const SamplingConfig&, const SamplingConfig&) = default;
};

struct DatasetConfig {
    std::uint64_t seed = 0;
    int count = 8;
    ThemeLimits limits;
    friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

struct PathsConfig {
    std::string data;
    std::string checkpoint;
    std::string log;
    friend bool operator==(const PathsConfig&, const PathsConfig&) = default;
};

struct RunConfig {
    ModelConfig model;
    MaskToggles attention;
    TrainingConfig training;
    DatasetConfig dataset;
    SamplingConfig sampling;
    PathsConfig paths;

    /// Throws InvalidConfig.
    void validate() const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Missing keys keep their defaults; unknown keys and wrong types throw InvalidConfig.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);

/// "a.b.c=value"; value is parsed as JSON when possible, otherwise taken as a string.
/// The path must name an existing key. Throws InvalidConfig.
void apply_override(nlohmann::json& j, std::string_view assignment);

/// Defaults, then the optional file, then overrides in order.
RunConfig resolve_run_config(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides);

std::string_view to_string(TrainableSet s);

}  // namespace designdit
