// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#include "designdit/encoders.hpp"

#include <cmath>
#include <numbers>

#include "designdit/error.hpp"
#include "designdit/rng.hpp"

namespace designdit {

PromptTokens encode_text_stub(std::string_view text, int d_model, std::uint64_t seed_salt) {
    if (d_model < 8) raise(ErrorCode::ShapeMismatch, "d_model must be at least 8, got " + std::to_string(d_model));
    PromptTokens out;
    out.token_texts = split_tokens(text);
    if (out.token_texts.empty()) raise(ErrorCode::EmptyText, "cannot encode empty text");

    out.embeddings.resize(static_cast<Eigen::Index>(out.token_texts.size()), d_model);
    for (std::size_t i = 0; i < out.token_texts.size(); ++i) {
        SplitMix64 rng(fnv1a64(out.token_texts[i]) ^ seed_salt);
        auto row = out.embeddings.row(static_cast<Eigen::Index>(i));
        for (int j = 0; j < d_model; ++j) row(j) = rng.gaussian();
        row /= row.norm();
    }
    return out;
}

RowVec fourier_box_embed(const BBox& box, int n_freq) {
    if (n_freq < 1) raise(ErrorCode::ShapeMismatch, "n_freq must be positive");
    RowVec out(8 * n_freq);
    const double coords[4] = {box.x0, box.y0, box.x1, box.y1};
    int k = 0;
    for (double v : coords) {
        for (int f = 0; f < n_freq; ++f) {
            const double angle = std::ldexp(std::numbers::pi, f) * v;
            out(k++) = std::sin(angle);
            out(k++) = std::cos(angle);
        }
    }
    return out;
}

Mat layout_element_features(const LayoutElement& element, int d_model, int n_freq, std::uint64_t seed_salt) {
    const PromptTokens semantic = encode_text_stub(element.description, d_model, seed_salt);
    const RowVec box = fourier_box_embed(element.bbox, n_freq);
    Mat features(semantic.embeddings.rows(), d_model + box.size());
    features.leftCols(d_model) = semantic.embeddings;
    features.rightCols(box.size()).rowwise() = box;
    return features;
}

LayoutTokens encode_layout_element(const LayoutElement& element, int d_model, int n_freq,
                                   const LayoutEncoderParams& params, int element_id, std::uint64_t seed_salt) {
    const Mat features = layout_element_features(element, d_model, n_freq, seed_salt);
    if (params.w1.rows() != features.cols() || params.w2.cols() != d_model) {
        raise(ErrorCode::ShapeMismatch, "layout encoder parameters do not match d_model/n_freq");
    }
    Mat hidden = (features * params.w1).rowwise() + params.b1;
    hidden = hidden.unaryExpr([](double v) { return gelu(v); });
    LayoutTokens out;
    out.embeddings = (hidden * params.w2).rowwise() + params.b2;
    out.element_ids.assign(static_cast<std::size_t>(features.rows()), element_id);
    return out;
}

LayoutTokens encode_layout(const SemanticLayout& layout, int d_model, int n_freq, const LayoutEncoderParams& params,
                           std::uint64_t seed_salt) {
    std::vector<LayoutTokens> parts;
    Eigen::Index total = 0;
    for (std::size_t i = 0; i < layout.elements.size(); ++i) {
        parts.push_back(encode_layout_element(layout.elements[i], d_model, n_freq, params, static_cast<int>(i), seed_salt));
        total += parts.back().embeddings.rows();
    }
    LayoutTokens out;
    out.embeddings.resize(total, d_model);
    Eigen::Index row = 0;
    for (auto& p : parts) {
        out.embeddings.middleRows(row, p.embeddings.rows()) = p.embeddings;
        row += p.embeddings.rows();
        out.element_ids.insert(out.element_ids.end(), p.element_ids.begin(), p.element_ids.end());
    }
    return out;
}

MultiSubjectCondition build_subject_canvas(std::span<const SubjectPlacement> placements, int canvas_w, int canvas_h,
                                           Rgb pad_color) {
    MultiSubjectCondition cond;
    cond.pad_color = pad_color;
    cond.canvas = Image(canvas_w, canvas_h, {pad_color.r, pad_color.g, pad_color.b, 255});
    for (const auto& p : placements) {
        const BBox& b = p.bbox;
        if (!(b.x0 >= 0.0 && b.y0 >= 0.0 && b.x1 <= 1.0 && b.y1 <= 1.0 && b.x0 < b.x1 && b.y0 < b.y1)) {
            raise(ErrorCode::PlacementOutOfBounds, "subject " + std::to_string(p.subject_id) + " does not fit the canvas");
        }
        const PixelRect r = to_pixels(b, canvas_w, canvas_h);
        if (std::abs(p.pixels.width() - r.width()) > 1 || std::abs(p.pixels.height() - r.height()) > 1) {
            raise(ErrorCode::PlacementOutOfBounds,
                  "subject " + std::to_string(p.subject_id) + " raster " + std::to_string(p.pixels.width()) + "x" +
                      std::to_string(p.pixels.height()) + " does not match its box " + std::to_string(r.width()) + "x" +
                      std::to_string(r.height()));
        }
        for (int y = 0; y < std::min(r.height(), p.pixels.height()); ++y) {
            for (int x = 0; x < std::min(r.width(), p.pixels.width()); ++x) {
                cond.canvas.blend(r.x0 + x, r.y0 + y, p.pixels.at(x, y));
            }
        }
        cond.placements.push_back(p);
    }
    return cond;
}

std::vector<int> subject_token_ids(const MultiSubjectCondition& cond, const PatchGrid& grid) {
    std::vector<int> ids(static_cast<std::size_t>(grid.size()), 0);
    for (const auto& p : cond.placements) {
        for (int idx : patch_region(p.bbox, grid)) ids[static_cast<std::size_t>(idx)] = p.subject_id;
    }
    return ids;
}

Mat patchify_pixels(const FloatImage& image, int patch_size) {
    const PatchGrid grid = PatchGrid::for_canvas(image.width, image.height, patch_size);
    Mat out(grid.size(), patch_size * patch_size * 3);
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            auto row = out.row(grid.index(r, c));
            int k = 0;
            for (int py = 0; py < patch_size; ++py) {
                for (int px = 0; px < patch_size; ++px) {
                    for (int ch = 0; ch < 3; ++ch) row(k++) = image.at(c * patch_size + px, r * patch_size + py, ch);
                }
            }
        }
    }
    return out;
}

FloatImage unpatchify_pixels(const Mat& patches, const PatchGrid& grid) {
    const int ps = grid.patch_size;
    if (patches.rows() != grid.size() || patches.cols() != ps * ps * 3) {
        raise(ErrorCode::DimensionMismatch, "patch matrix does not match the grid");
    }
    FloatImage out(grid.canvas_w, grid.canvas_h);
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            auto row = patches.row(grid.index(r, c));
            int k = 0;
            for (int py = 0; py < ps; ++py) {
                for (int px = 0; px < ps; ++px) {
                    for (int ch = 0; ch < 3; ++ch) out.at(c * ps + px, r * ps + py, ch) = row(k++);
                }
            }
        }
    }
    return out;
}

Mat patchify(const FloatImage& image, int patch_size, const Mat& projection) {
    if (projection.rows() != patch_size * patch_size * 3) {
        raise(ErrorCode::DimensionMismatch, "projection expects " + std::to_string(projection.rows()) +
                                                " inputs, patches have " + std::to_string(patch_size * patch_size * 3));
    }
    return patchify_pixels(image, patch_size) * projection;
}

SubjectTokens encode_subjects(const MultiSubjectCondition& cond, int patch_size, const Mat& projection) {
    SubjectTokens out;
    out.grid = PatchGrid::for_canvas(cond.canvas.width(), cond.canvas.height(), patch_size);
    out.embeddings = patchify(to_signed_float(cond.canvas), patch_size, projection);
    out.subject_ids = subject_token_ids(cond, out.grid);
    return out;
}

}  // namespace designdit
