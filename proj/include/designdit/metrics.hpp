// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "designdit/dataset.hpp"
#include "designdit/image.hpp"
#include "designdit/tensor.hpp"
#include "designdit/types.hpp"
#include "json.hpp"

namespace designdit {

std::size_t levenshtein(std::string_view a, std::string_view b);

/// 1 - levenshtein / max length; 1 when both are empty.
double ned(std::string_view a, std::string_view b);

struct DetectedText {
    std::string text;
    BBox bbox;

    friend bool operator==(const DetectedText&, const DetectedText&) = default;
};

/// Greedy one-to-one pairing by descending IoU (> 0). Ties resolve by ground-truth
/// index, then by detection box and text, so the result does not depend on the order
/// of the detection list. Returns (gt index, detection index) pairs.
std::vector<std::pair<std::size_t, std::size_t>> greedy_iou_pairs(std::span<const BBox> gt,
                                                                  std::span<const DetectedText> det);

/// Uppercase, whitespace runs collapsed to one space, trimmed.
std::string normalize_text(std::string_view s);

/// Fraction of ground-truth strings whose paired detection matches after normalization.
double sentence_accuracy(std::span<const std::string> gt, std::span<const DetectedText> det,
                         std::span<const BBox> gt_boxes);

/// Mean IoU of greedy pairs over the ground truth; unpaired entries score 0.
double spatial_iou_score(std::span<const BBox> gt, std::span<const BBox> det);

/// Mean ned between each ground-truth string and its paired detection (0 if unpaired).
double text_ned_score(std::span<const std::string> gt, std::span<const DetectedText> det,
                      std::span<const BBox> gt_boxes);

/// Product of scores clamped to [0, 1]; 1 for an empty list.
double m_dino(std::span<const double> scores);

/// Per secondary element "<color> <shape>": 1 - min(1, |mean RGB - declared| / sqrt 3)
/// over the shape footprint inside the box (the whole box for an unknown shape
/// word), averaged; 1 when there are no secondary elements. Throws UnknownColorWord.
double region_color_score(const Image& image, const SemanticLayout& layout);

class EmbeddingOracle {
public:
    virtual ~EmbeddingOracle() = default;
    /// Unit-norm descriptor of a pixel region.
    virtual RowVec embed(const Image& image, const PixelRect& region) const = 0;
};

/// Mean color plus a 4-bin histogram per channel, normalized.
class StubEmbeddingOracle final : public EmbeddingOracle {
public:
    RowVec embed(const Image& image, const PixelRect& region) const override;
};

/// Cosine similarity clamped to [0, 1]; identical descriptors score exactly 1.
double similarity(const RowVec& a, const RowVec& b);

struct MetricReport {
    std::vector<double> subject_scores;
    double m_dino = 1.0;
    double spatial = 1.0;
    double sentence_accuracy = 1.0;
    double ned = 1.0;
    double region_color = 1.0;
};

/// Throws DimensionMismatch when generated differs in size from the target.
MetricReport evaluate_generation(const DesignSample& sample, const Image& generated, const EmbeddingOracle& oracle,
                                 std::span<const DetectedText> detections);

/// Exact detections taken from the textual annotations.
std::vector<DetectedText> detections_from_sample(const DesignSample& sample);

nlohmann::json to_json(const MetricReport& r);
nlohmann::json detections_to_json(std::span<const DetectedText> det);
/// Throws SchemaViolation.
std::vector<DetectedText> detections_from_json(const nlohmann::json& j);

}  // namespace designdit
