// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <set>
#include <string>

#include "designdit/types.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace designdit;

namespace {

LayoutElement element(std::string desc, BBox b = {0.1, 0.1, 0.4, 0.4}) {
    return {ElementKind::Textual, std::move(desc), b};
}

std::string words(int n) {
    std::string s;
    for (int i = 0; i < n; ++i) s += (i ? " w" : "w") + std::to_string(i);
    return s;
}

// Centers of a grid in normalized coordinates, written out directly.
PatchSet centers_inside(const BBox& b, int rows, int cols) {
    PatchSet out;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double cx = (c + 0.5) / cols, cy = (r + 0.5) / rows;
            if (cx >= b.x0 && cx < b.x1 && cy >= b.y0 && cy < b.y1) out.push_back(r * cols + c);
        }
    }
    return out;
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("bbox checks") {
    CHECK_NOTHROW(check_bbox({0, 0, 1, 1}));
    CHECK_ERROR_CODE(check_bbox({0, 0, 1.5, 1}), ErrorCode::OutOfRange);
    CHECK_ERROR_CODE(check_bbox({-0.1, 0, 0.5, 1}), ErrorCode::OutOfRange);
    CHECK_ERROR_CODE(check_bbox({0.5, 0, 0.5, 1}), ErrorCode::DegenerateBox);
    CHECK_ERROR_CODE(check_bbox({0.2, 0.6, 0.5, 0.3}), ErrorCode::DegenerateBox);
}

TEST_CASE("iou of half-overlapping boxes is one third") {
    CHECK(iou({0, 0, 0.5, 0.5}, {0.25, 0, 0.75, 0.5}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(iou({0, 0, 0.5, 0.5}, {0.5, 0.5, 1, 1}) == 0.0);
}

TEST_CASE("pixel rounding covers at least one pixel and round-trips") {
    const PixelRect r = to_pixels({0.4, 0.4, 0.41, 0.41}, 64, 64);
    CHECK(r.width() >= 1);
    CHECK(r.height() >= 1);
    oracle::Gen g(7);
    for (int i = 0; i < 500; ++i) {
        const int w = 8 * g.integer(1, 16), h = 8 * g.integer(1, 16);
        const int x0 = g.integer(0, w - 1), y0 = g.integer(0, h - 1);
        const PixelRect p{x0, y0, g.integer(x0 + 1, w), g.integer(y0 + 1, h)};
        CHECK(to_pixels(from_pixels(p, w, h), w, h) == p);
    }
}

TEST_CASE("validate_layout limits") {
    CHECK_NOTHROW(validate_layout(SemanticLayout{}));

    SemanticLayout ten;
    for (int i = 0; i < 10; ++i) ten.elements.push_back(element(words(30)));
    CHECK_NOTHROW(validate_layout(ten));

    SemanticLayout eleven = ten;
    eleven.elements.push_back(element("X"));
    CHECK_ERROR_CODE(validate_layout(eleven), ErrorCode::TooManyElements);

    SemanticLayout long_desc{{element(words(31))}};
    CHECK_ERROR_CODE(validate_layout(long_desc), ErrorCode::DescriptionTooLong);

    SemanticLayout empty_desc{{element("   ")}};
    CHECK_ERROR_CODE(validate_layout(empty_desc), ErrorCode::EmptyText);

    SemanticLayout bad_box{{element("X", {0.3, 0.3, 0.3, 0.5})}};
    CHECK_ERROR_CODE(validate_layout(bad_box), ErrorCode::DegenerateBox);

    SemanticLayout outside{{element("X", {0.3, 0.3, 1.2, 0.5})}};
    CHECK_ERROR_CODE(validate_layout(outside), ErrorCode::OutOfRange);
}

TEST_CASE("patch grid") {
    const PatchGrid g = PatchGrid::for_canvas(96, 64, 8);
    CHECK(g.rows == 8);
    CHECK(g.cols == 12);
    CHECK(g.index(2, 3) == 27);
    CHECK_ERROR_CODE(PatchGrid::for_canvas(20, 16, 8), ErrorCode::DimensionMismatch);
}

TEST_CASE("patch_region examples") {
    const PatchGrid g = PatchGrid::for_canvas(32, 32, 8);
    PatchSet all(16);
    for (int i = 0; i < 16; ++i) all[static_cast<std::size_t>(i)] = i;
    CHECK(patch_region({0, 0, 1, 1}, g) == all);
    CHECK(patch_region({0, 0, 0.5, 0.5}, g) == PatchSet{0, 1, 4, 5});
    CHECK(patch_region({0.40, 0.40, 0.45, 0.45}, g) == PatchSet{5});
}

TEST_CASE("patch_region agrees with center enumeration and is never empty") {
    oracle::Gen gen(11);
    for (int i = 0; i < 2000; ++i) {
        const int rows = gen.integer(1, 12), cols = gen.integer(1, 12);
        const PatchGrid g = PatchGrid::for_canvas(cols * 8, rows * 8, 8);
        const BBox b = gen.box();
        const PatchSet got = patch_region(b, g);
        REQUIRE(!got.empty());
        CHECK(std::is_sorted(got.begin(), got.end()));
        const PatchSet want = centers_inside(b, rows, cols);
        if (!want.empty()) {
            CHECK(got == want);
        } else {
            CHECK(got.size() == 1);
        }
    }
}

TEST_CASE("patch_region is monotone without snapping") {
    oracle::Gen gen(12);
    int compared = 0;
    for (int i = 0; i < 2000; ++i) {
        const int rows = gen.integer(1, 12), cols = gen.integer(1, 12);
        const PatchGrid g = PatchGrid::for_canvas(cols * 8, rows * 8, 8);
        const BBox outer = gen.box();
        const double ax = gen.real(outer.x0, outer.x1), bx = gen.real(outer.x0, outer.x1);
        const double ay = gen.real(outer.y0, outer.y1), by = gen.real(outer.y0, outer.y1);
        const BBox inner{std::min(ax, bx), std::min(ay, by), std::max(ax, bx), std::max(ay, by)};
        if (inner.area() <= 0.0) continue;
        if (centers_inside(inner, rows, cols).empty() || centers_inside(outer, rows, cols).empty()) continue;
        const PatchSet a = patch_region(inner, g), b = patch_region(outer, g);
        CHECK(std::includes(b.begin(), b.end(), a.begin(), a.end()));
        ++compared;
    }
    CHECK(compared > 100);
}

TEST_CASE("patch-aligned partition yields a partition of indices") {
    oracle::Gen gen(13);
    for (int i = 0; i < 200; ++i) {
        const int rows = gen.integer(2, 12), cols = gen.integer(2, 12);
        const PatchGrid g = PatchGrid::for_canvas(cols * 8, rows * 8, 8);
        const int cut_r = gen.integer(1, rows - 1), cut_c = gen.integer(1, cols - 1);
        const double yr = static_cast<double>(cut_r) / rows, xc = static_cast<double>(cut_c) / cols;
        const BBox boxes[4] = {{0, 0, xc, yr}, {xc, 0, 1, yr}, {0, yr, xc, 1}, {xc, yr, 1, 1}};
        std::multiset<int> seen;
        for (const auto& b : boxes) {
            for (int p : patch_region(b, g)) seen.insert(p);
        }
        CHECK(static_cast<int>(seen.size()) == g.size());
        CHECK(static_cast<int>(std::set<int>(seen.begin(), seen.end()).size()) == g.size());
    }
}

TEST_CASE("subject_regions") {
    const PatchGrid g = PatchGrid::for_canvas(32, 32, 8);
    const Image px(4, 4, {255, 0, 0, 255});
    std::vector<SubjectPlacement> two{{1, px, {0, 0, 0.5, 0.5}}, {2, px, {0.5, 0.5, 1, 1}}};
    const auto regions = subject_regions(two, g);
    CHECK(regions.at(1) == PatchSet{0, 1, 4, 5});
    CHECK(regions.at(2) == PatchSet{10, 11, 14, 15});

    std::vector<SubjectPlacement> whole{{3, Image(16, 16, {0, 0, 0, 255}), {0, 0, 1, 1}}};
    CHECK(subject_regions(whole, g).at(3).size() == 16);
    CHECK(subject_regions(std::vector<SubjectPlacement>{}, g).empty());
}

TEST_CASE("split_tokens collapses whitespace") {
    CHECK(split_tokens("  a  b\tc\n") == std::vector<std::string>{"a", "b", "c"});
    CHECK(split_tokens("   ").empty());
}

}  // TEST_SUITE
