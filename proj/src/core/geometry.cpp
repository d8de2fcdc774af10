// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iterator>
#include <limits>

#include "designdit/error.hpp"
#include "designdit/types.hpp"

namespace designdit {

namespace {

std::string describe(const BBox& b) {
    return "(" + std::to_string(b.x0) + ", " + std::to_string(b.y0) + ", " + std::to_string(b.x1) + ", " +
           std::to_string(b.y1) + ")";
}

int snap_floor(double v) {
    const double r = std::round(v);
    return std::abs(v - r) < 1e-9 ? static_cast<int>(r) : static_cast<int>(std::floor(v));
}

int snap_ceil(double v) {
    const double r = std::round(v);
    return std::abs(v - r) < 1e-9 ? static_cast<int>(r) : static_cast<int>(std::ceil(v));
}

}  // namespace

void check_bbox(const BBox& b) {
    for (double v : {b.x0, b.y0, b.x1, b.y1}) {
        if (!(v >= 0.0 && v <= 1.0)) raise(ErrorCode::OutOfRange, "bbox coordinate outside [0,1]: " + describe(b));
    }
    if (!(b.x0 < b.x1 && b.y0 < b.y1)) raise(ErrorCode::DegenerateBox, "bbox has no area: " + describe(b));
}

double intersection_area(const BBox& a, const BBox& b) noexcept {
    const double w = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
    const double h = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
    return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

double iou(const BBox& a, const BBox& b) noexcept {
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

PixelRect to_pixels(const BBox& box, int canvas_w, int canvas_h) noexcept {
    PixelRect r{snap_floor(box.x0 * canvas_w), snap_floor(box.y0 * canvas_h), snap_ceil(box.x1 * canvas_w),
                snap_ceil(box.y1 * canvas_h)};
    if (r.x1 <= r.x0) r.x1 = r.x0 + 1;
    if (r.y1 <= r.y0) r.y1 = r.y0 + 1;
    return r;
}

BBox from_pixels(const PixelRect& rect, int canvas_w, int canvas_h) noexcept {
    return {static_cast<double>(rect.x0) / canvas_w, static_cast<double>(rect.y0) / canvas_h,
            static_cast<double>(rect.x1) / canvas_w, static_cast<double>(rect.y1) / canvas_h};
}

std::string_view to_string(ElementKind kind) {
    return kind == ElementKind::Textual ? "textual" : "secondary_visual";
}

ElementKind element_kind_from_string(std::string_view text) {
    if (text == "textual") return ElementKind::Textual;
    if (text == "secondary_visual") return ElementKind::SecondaryVisual;
    raise(ErrorCode::SchemaViolation, "unknown layout element kind '" + std::string(text) + "'");
}

std::vector<std::string> split_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        const std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) tokens.emplace_back(text.substr(start, i - start));
    }
    return tokens;
}

const SemanticLayout& validate_layout(const SemanticLayout& layout, const LayoutLimits& limits) {
    if (static_cast<int>(layout.elements.size()) > limits.max_layouts) {
        raise(ErrorCode::TooManyElements, std::to_string(layout.elements.size()) + " layout elements exceed the limit of " +
                                              std::to_string(limits.max_layouts));
    }
    for (std::size_t i = 0; i < layout.elements.size(); ++i) {
        const auto& e = layout.elements[i];
        const auto n_tokens = split_tokens(e.description).size();
        if (n_tokens == 0) raise(ErrorCode::EmptyText, "layout element " + std::to_string(i) + " has an empty description");
        if (static_cast<int>(n_tokens) > limits.max_desc_tokens) {
            raise(ErrorCode::DescriptionTooLong, "layout element " + std::to_string(i) + " has " + std::to_string(n_tokens) +
                                                     " tokens (limit " + std::to_string(limits.max_desc_tokens) + ")");
        }
        check_bbox(e.bbox);
    }
    return layout;
}

PatchGrid PatchGrid::for_canvas(int canvas_w, int canvas_h, int patch_size) {
    if (patch_size <= 0 || canvas_w <= 0 || canvas_h <= 0 || canvas_w % patch_size != 0 || canvas_h % patch_size != 0) {
        raise(ErrorCode::DimensionMismatch, "canvas " + std::to_string(canvas_w) + "x" + std::to_string(canvas_h) +
                                                " is not divisible into patches of " + std::to_string(patch_size));
    }
    return {canvas_h / patch_size, canvas_w / patch_size, canvas_w, canvas_h, patch_size};
}

PatchSet patch_region(const BBox& box, const PatchGrid& grid) {
    PatchSet out;
    for (int r = 0; r < grid.rows; ++r) {
        const double cy = (r + 0.5) / grid.rows;
        if (!(cy >= box.y0 && cy < box.y1)) continue;
        for (int c = 0; c < grid.cols; ++c) {
            const double cx = (c + 0.5) / grid.cols;
            if (cx >= box.x0 && cx < box.x1) out.push_back(grid.index(r, c));
        }
    }
    if (!out.empty()) return out;

    const double bx = 0.5 * (box.x0 + box.x1);
    const double by = 0.5 * (box.y0 + box.y1);
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            const double dx = (c + 0.5) / grid.cols - bx;
            const double dy = (r + 0.5) / grid.rows - by;
            const double d = dx * dx + dy * dy;
            if (d < best_d) {
                best_d = d;
                best = grid.index(r, c);
            }
        }
    }
    return {best};
}

std::map<int, PatchSet> subject_regions(std::span<const SubjectPlacement> placements, const PatchGrid& grid) {
    std::map<int, PatchSet> out;
    for (const auto& p : placements) {
        auto region = patch_region(p.bbox, grid);
        auto& slot = out[p.subject_id];
        PatchSet merged;
        std::set_union(slot.begin(), slot.end(), region.begin(), region.end(), std::back_inserter(merged));
        slot = std::move(merged);
    }
    return out;
}

std::map<int, PatchSet> subject_regions(const MultiSubjectCondition& cond, const PatchGrid& grid) {
    return subject_regions(std::span<const SubjectPlacement>(cond.placements), grid);
}

}  // namespace designdit
