// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "designdit/image.hpp"

namespace designdit {

/// Axis-aligned box in normalized canvas coordinates, top-left origin.
struct BBox {
    double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;

    double width() const noexcept { return x1 - x0; }
    double height() const noexcept { return y1 - y0; }
    double area() const noexcept { return width() * height(); }

    friend bool operator==(const BBox&, const BBox&) = default;
};

/// Throws OutOfRange / DegenerateBox.
void check_bbox(const BBox& box);

double intersection_area(const BBox& a, const BBox& b) noexcept;
double iou(const BBox& a, const BBox& b) noexcept;

/// Integer pixel rectangle [x0, x1) x [y0, y1).
struct PixelRect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    int width() const noexcept { return x1 - x0; }
    int height() const noexcept { return y1 - y0; }
    bool overlaps(const PixelRect& o) const noexcept { return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1; }

    friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

/// Low edges use floor(x*W), high edges ceil(x*W), so every valid box covers at least
/// one pixel. Products within 1e-9 of an integer snap to it first, which keeps
/// pixel -> normalized -> pixel exact for non power-of-two canvases.
PixelRect to_pixels(const BBox& box, int canvas_w, int canvas_h) noexcept;
BBox from_pixels(const PixelRect& rect, int canvas_w, int canvas_h) noexcept;

enum class ElementKind { SecondaryVisual, Textual };

std::string_view to_string(ElementKind kind);
ElementKind element_kind_from_string(std::string_view text);

struct LayoutElement {
    ElementKind kind = ElementKind::SecondaryVisual;
    std::string description;
    BBox bbox;

    friend bool operator==(const LayoutElement&, const LayoutElement&) = default;
};

struct SemanticLayout {
    std::vector<LayoutElement> elements;

    friend bool operator==(const SemanticLayout&, const SemanticLayout&) = default;
};

struct LayoutLimits {
    int max_layouts = 10;
    int max_desc_tokens = 30;
};

/// Whitespace tokenizer shared by every text path.
std::vector<std::string> split_tokens(std::string_view text);

const SemanticLayout& validate_layout(const SemanticLayout& layout, const LayoutLimits& limits = {});

struct SubjectPlacement {
    int subject_id = 1;
    Image pixels;  // raster sized to bbox on the condition canvas
    BBox bbox;

    friend bool operator==(const SubjectPlacement&, const SubjectPlacement&) = default;
};

/// Padded condition canvas carrying every primary visual element.
struct MultiSubjectCondition {
    Image canvas;
    std::vector<SubjectPlacement> placements;
    Rgb pad_color{128, 128, 128};

    friend bool operator==(const MultiSubjectCondition&, const MultiSubjectCondition&) = default;
};

struct PatchGrid {
    int rows = 0;
    int cols = 0;
    int canvas_w = 0;
    int canvas_h = 0;
    int patch_size = 0;

    static PatchGrid for_canvas(int canvas_w, int canvas_h, int patch_size);

    int size() const noexcept { return rows * cols; }
    int index(int row, int col) const noexcept { return row * cols + col; }

    friend bool operator==(const PatchGrid&, const PatchGrid&) = default;
};

using PatchSet = std::vector<int>;  // sorted, unique

/// Patches whose centers fall in [x0,x1) x [y0,y1); when none do, the patch whose
/// center is nearest the box center (ties to the lower index). Never empty.
PatchSet patch_region(const BBox& box, const PatchGrid& grid);

/// subject_id -> patch set. Overlapping subjects may share patches.
std::map<int, PatchSet> subject_regions(std::span<const SubjectPlacement> placements, const PatchGrid& grid);
std::map<int, PatchSet> subject_regions(const MultiSubjectCondition& cond, const PatchGrid& grid);

}  // namespace designdit
