// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "designdit/tensor.hpp"
#include "designdit/types.hpp"

namespace designdit {

struct PromptTokens {
    Mat embeddings;  // [T_p x d_model], unit rows
    std::vector<std::string> token_texts;
};

/// Deterministic stand-in for a pretrained text encoder: each whitespace token maps to
/// a unit Gaussian vector seeded by fnv1a64(token) ^ seed_salt through SplitMix64.
PromptTokens encode_text_stub(std::string_view text, int d_model, std::uint64_t seed_salt = 0);

/// sin/cos(2^k * pi * v) for v in (x0, y0, x1, y1), k in [0, n_freq); coordinate-major,
/// then frequency, then (sin, cos). Length 8 * n_freq.
RowVec fourier_box_embed(const BBox& box, int n_freq);

/// Two-layer layout encoder: (d_model + 8 n_freq) -> d_model -> d_model with GELU.
struct LayoutEncoderParams {
    Mat w1;
    RowVec b1;
    Mat w2;
    RowVec b2;
};

struct LayoutTokens {
    Mat embeddings;                // [T_l x d_model]
    std::vector<int> element_ids;  // element index per token, contiguous runs
};

/// Semantic tokens with the box embedding appended to every row: [T x (d_model + 8 n_freq)].
Mat layout_element_features(const LayoutElement& element, int d_model, int n_freq, std::uint64_t seed_salt = 0);

LayoutTokens encode_layout_element(const LayoutElement& element, int d_model, int n_freq,
                                   const LayoutEncoderParams& params, int element_id = 0,
                                   std::uint64_t seed_salt = 0);

LayoutTokens encode_layout(const SemanticLayout& layout, int d_model, int n_freq, const LayoutEncoderParams& params,
                           std::uint64_t seed_salt = 0);

/// Pads to pad_color, then composites each raster at its box in list order.
MultiSubjectCondition build_subject_canvas(std::span<const SubjectPlacement> placements, int canvas_w, int canvas_h,
                                           Rgb pad_color = {128, 128, 128});

/// Topmost subject covering each condition patch (0 = padding background).
std::vector<int> subject_token_ids(const MultiSubjectCondition& cond, const PatchGrid& grid);

/// Row-major patches flattened as (py, px, channel): [rows*cols x patch_size^2 * 3].
Mat patchify_pixels(const FloatImage& image, int patch_size);
FloatImage unpatchify_pixels(const Mat& patches, const PatchGrid& grid);

/// Shared bias-free patch projection used for noise-image and subject tokens.
Mat patchify(const FloatImage& image, int patch_size, const Mat& projection);

struct SubjectTokens {
    Mat embeddings;
    std::vector<int> subject_ids;
    PatchGrid grid;
};

SubjectTokens encode_subjects(const MultiSubjectCondition& cond, int patch_size, const Mat& projection);

}  // namespace designdit
