// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include "designdit/encoders.hpp"
#include "designdit/mmdit.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace designdit;

namespace {

LayoutEncoderParams encoder_params(int d = 64, int nf = 8) {
    ModelConfig cfg;
    cfg.d_model = d;
    cfg.n_freq = nf;
    return Model(cfg, 3).layout_encoder_params();
}

FloatImage random_float_image(oracle::Gen& g, int w, int h) {
    FloatImage img(w, h);
    for (double& v : img.values) v = g.real(-1.0, 1.0);
    return img;
}

}  // namespace

TEST_SUITE("encoders") {

TEST_CASE("text stub is deterministic with unit rows") {
    const PromptTokens a = encode_text_stub("red circle", 64);
    const PromptTokens b = encode_text_stub("red circle", 64);
    CHECK(a.embeddings == b.embeddings);
    CHECK(a.token_texts == std::vector<std::string>{"red", "circle"});
    for (Eigen::Index i = 0; i < a.embeddings.rows(); ++i) CHECK(std::abs(a.embeddings.row(i).norm() - 1.0) <= 1e-6);

    const PromptTokens aba = encode_text_stub("a b a", 64);
    CHECK(aba.embeddings.row(0) == aba.embeddings.row(2));
    CHECK(aba.embeddings.row(0) != aba.embeddings.row(1));

    CHECK(encode_text_stub("red", 64, 1).embeddings != encode_text_stub("red", 64, 2).embeddings);
    CHECK_ERROR_CODE(encode_text_stub("  ", 64), ErrorCode::EmptyText);
}

TEST_CASE("fourier box embedding") {
    const RowVec zero = fourier_box_embed({0, 0, 0, 0}, 2);
    REQUIRE(zero.size() == 16);
    for (int i = 0; i < 16; i += 2) {
        CHECK(zero(i) == 0.0);
        CHECK(zero(i + 1) == 1.0);
    }
    const RowVec half = fourier_box_embed({0.5, 0, 1, 1}, 8);
    CHECK(half.size() == 64);
    CHECK(half(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(half(1)) < 1e-12);

    // Layout: coordinate-major, then frequency, then (sin, cos).
    const BBox b{0.1, 0.2, 0.7, 0.9};
    const double coords[4] = {b.x0, b.y0, b.x1, b.y1};
    const RowVec e = fourier_box_embed(b, 3);
    for (int c = 0; c < 4; ++c) {
        for (int k = 0; k < 3; ++k) {
            const double a = std::ldexp(std::numbers::pi, k) * coords[c];
            CHECK(e(c * 6 + 2 * k) == doctest::Approx(std::sin(a)).epsilon(1e-12));
            CHECK(e(c * 6 + 2 * k + 1) == doctest::Approx(std::cos(a)).epsilon(1e-12));
        }
    }
}

TEST_CASE("fourier embedding is injective on the 1/64 grid") {
    std::vector<RowVec> rows;
    for (int i = 0; i <= 64; ++i) rows.push_back(fourier_box_embed({i / 64.0, 0, 1, 1}, 8).head(16));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = i + 1; j < rows.size(); ++j) CHECK((rows[i] - rows[j]).norm() > 1e-6);
    }
}

TEST_CASE("layout element encoding") {
    const LayoutEncoderParams p = encoder_params();
    const LayoutElement a{ElementKind::SecondaryVisual, "red circle", {0.1, 0.1, 0.3, 0.3}};
    LayoutElement b = a;
    b.bbox = {0.5, 0.5, 0.9, 0.9};
    const auto ta = encode_layout_element(a, 64, 8, p);
    CHECK(ta.embeddings.rows() == 2);
    CHECK(ta.embeddings != encode_layout_element(b, 64, 8, p).embeddings);
    CHECK(ta.embeddings == encode_layout_element(a, 64, 8, p).embeddings);

    const LayoutElement five{ElementKind::Textual, "ONE TWO THREE FOUR FIVE", {0, 0, 1, 1}};
    CHECK(encode_layout_element(five, 64, 8, p).embeddings.rows() == 5);
}

TEST_CASE("layout features are text tokens with the box embedding appended") {
    const LayoutElement el{ElementKind::Textual, "BIG SALE TODAY", {0.2, 0.3, 0.6, 0.5}};
    const Mat f = layout_element_features(el, 64, 8);
    const Mat text = encode_text_stub(el.description, 64).embeddings;
    const RowVec box = fourier_box_embed(el.bbox, 8);
    REQUIRE(f.cols() == 128);
    for (Eigen::Index r = 0; r < f.rows(); ++r) {
        CHECK(f.row(r).head(64) == text.row(r));
        CHECK(f.row(r).tail(64) == box);
    }

    // The encoder is the two-layer GELU MLP applied row by row.
    const LayoutEncoderParams p = encoder_params();
    const Mat got = encode_layout_element(el, 64, 8, p).embeddings;
    for (Eigen::Index r = 0; r < f.rows(); ++r) {
        RowVec h = f.row(r) * p.w1 + p.b1;
        for (Eigen::Index c = 0; c < h.size(); ++c) h(c) = gelu(h(c));
        const RowVec want = h * p.w2 + p.b2;
        CHECK((got.row(r) - want).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("encode_layout keeps element runs contiguous") {
    const LayoutEncoderParams p = encoder_params();
    SemanticLayout l{{{ElementKind::Textual, "A B", {0, 0, .5, .5}},
                      {ElementKind::SecondaryVisual, "red square", {.5, .5, 1, 1}},
                      {ElementKind::Textual, "C", {0, .5, .5, 1}}}};
    const LayoutTokens t = encode_layout(l, 64, 8, p);
    CHECK(t.element_ids == std::vector<int>{0, 0, 1, 1, 2});
    CHECK(t.embeddings.rows() == 5);
}

TEST_CASE("subject canvas compositing") {
    const Rgb pad{128, 128, 128};
    const MultiSubjectCondition empty = build_subject_canvas({}, 16, 8, pad);
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 16; ++x) CHECK(empty.canvas.at(x, y) == Rgba{128, 128, 128, 255});
    }

    const std::vector<SubjectPlacement> one{{1, Image(32, 32, {255, 0, 0, 255}), {0, 0, 0.5, 0.5}}};
    const MultiSubjectCondition c = build_subject_canvas(one, 64, 64, pad);
    int mismatches = 0;
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) {
            const Rgba want = x < 32 && y < 32 ? Rgba{255, 0, 0, 255} : Rgba{128, 128, 128, 255};
            mismatches += c.canvas.at(x, y) != want;
        }
    }
    CHECK(mismatches == 0);

    const std::vector<SubjectPlacement> overlap{{1, Image(4, 4, {255, 0, 0, 255}), {0, 0, 0.5, 0.5}},
                                                {2, Image(4, 4, {0, 0, 255, 255}), {0.25, 0.25, 0.75, 0.75}}};
    const MultiSubjectCondition o = build_subject_canvas(overlap, 8, 8, pad);
    CHECK(o.canvas.at(3, 3) == Rgba{0, 0, 255, 255});
    CHECK(o.canvas.at(1, 1) == Rgba{255, 0, 0, 255});

    const PatchGrid g = PatchGrid::for_canvas(8, 8, 4);
    // Patch centers decide membership; the later subject wins the shared patch.
    CHECK(subject_token_ids(o, g) == std::vector<int>{2, 0, 0, 0});

    const std::vector<SubjectPlacement> wrong{{1, Image(2, 4, {0, 0, 0, 255}), {0, 0, 0.5, 0.5}}};  // off by two columns
    CHECK_ERROR_CODE(build_subject_canvas(wrong, 8, 8), ErrorCode::PlacementOutOfBounds);
}

TEST_CASE("patchify shapes and tokens") {
    oracle::Gen g(5);
    const Mat proj = g.matrix(4 * 4 * 3, 16);
    CHECK(patchify(FloatImage(8, 8), 4, proj).rows() == 4);
    CHECK_ERROR_CODE(patchify(FloatImage(10, 8), 4, proj), ErrorCode::DimensionMismatch);

    FloatImage uniform(8, 8);
    for (double& v : uniform.values) v = 0.3;
    const Mat tu = patchify(uniform, 4, proj);
    for (Eigen::Index r = 1; r < tu.rows(); ++r) CHECK(tu.row(r) == tu.row(0));
}

TEST_CASE("patchify: swapping two patches swaps their tokens") {
    oracle::Gen g(6);
    const Mat proj = g.matrix(4 * 4 * 3, 16);
    const FloatImage img = random_float_image(g, 8, 8);
    FloatImage swapped = img;
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
            for (int c = 0; c < 3; ++c) std::swap(swapped.at(x, y, c), swapped.at(x + 4, y + 4, c));
        }
    }
    const Mat a = patchify(img, 4, proj), b = patchify(swapped, 4, proj);
    CHECK(a.row(0) == b.row(3));
    CHECK(a.row(3) == b.row(0));
    CHECK(a.row(1) == b.row(1));
}

TEST_CASE("patchify is linear") {
    oracle::Gen g(7);
    const Mat proj = g.matrix(8 * 8 * 3, 16);
    for (int i = 0; i < 20; ++i) {
        const FloatImage img = random_float_image(g, 16, 16);
        const double a = g.real(-3.0, 3.0);
        FloatImage scaled = img;
        for (double& v : scaled.values) v *= a;
        CHECK(((patchify(scaled, 8, proj) - a * patchify(img, 8, proj)).cwiseAbs().maxCoeff() < 1e-12));
    }
}

TEST_CASE("patchify_pixels and unpatchify_pixels invert each other") {
    oracle::Gen g(8);
    const FloatImage img = random_float_image(g, 24, 16);
    const Mat p = patchify_pixels(img, 8);
    CHECK(p.rows() == 6);
    CHECK(p.cols() == 192);
    // Flattening order is (py, px, channel).
    CHECK(p(1, (2 * 8 + 3) * 3 + 1) == img.at(8 + 3, 2, 1));
    const FloatImage back = unpatchify_pixels(p, PatchGrid::for_canvas(24, 16, 8));
    CHECK(back.values == img.values);
}

TEST_CASE("encode_subjects uses the shared projection") {
    oracle::Gen g(9);
    const Mat proj = g.matrix(8 * 8 * 3, 16);
    const std::vector<SubjectPlacement> one{{1, Image(8, 8, {10, 200, 30, 255}), {0, 0, 0.5, 0.5}}};
    const MultiSubjectCondition c = build_subject_canvas(one, 16, 16);
    const SubjectTokens t = encode_subjects(c, 8, proj);
    CHECK(t.subject_ids == std::vector<int>{1, 0, 0, 0});
    CHECK(t.embeddings == patchify(to_signed_float(c.canvas), 8, proj));
}

}  // TEST_SUITE
