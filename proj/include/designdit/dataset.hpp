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

#include "designdit/image.hpp"
#include "designdit/types.hpp"

namespace designdit {

// ---------------------------------------------------------------------------
// Palette and shapes shared by the renderer and the metrics.

/// Named colors usable in "<color> <shape>" descriptions.
const std::vector<std::pair<std::string, Rgb>>& color_palette();
/// Throws UnknownColorWord.
Rgb color_by_name(std::string_view name);

enum class Shape : std::uint8_t { Circle, Square, Triangle };
std::string_view to_string(Shape s);
std::optional<Shape> shape_from_string(std::string_view s);

/// Whether pixel (x, y) of a w x h box belongs to the shape. Integer arithmetic only.
bool shape_contains(Shape s, int x, int y, int w, int h) noexcept;

// ---------------------------------------------------------------------------
// Themes.

struct KeywordBanks {
    std::vector<std::string> keywords;
    std::vector<std::string> styles;
    std::vector<std::string> words;  // text-layer vocabulary, uppercase
};

const KeywordBanks& default_banks();

struct CountRange {
    int min = 0;
    int max = 0;
    friend bool operator==(const CountRange&, const CountRange&) = default;
};

struct ThemeLimits {
    CountRange subjects{1, 4};
    CountRange secondary{0, 6};
    CountRange textual{1, 4};
    /// Candidate target sizes (width, height); the condition canvas is half of each.
    std::vector<std::pair<int, int>> sizes{{64, 64}, {96, 64}};
    friend bool operator==(const ThemeLimits&, const ThemeLimits&) = default;
};

enum class BackgroundStyle : std::uint8_t { Solid, VerticalGradient, Checker };
std::string_view to_string(BackgroundStyle b);

struct ThemeSpec {
    std::vector<std::string> keywords;
    std::string style;
    int n_subjects = 1;
    int n_secondary = 0;
    int n_textual = 1;
    BackgroundStyle background = BackgroundStyle::Solid;
    int width = 64;
    int height = 64;
    std::uint64_t seed = 0;

    friend bool operator==(const ThemeSpec&, const ThemeSpec&) = default;
};

/// Throws InvalidConfig for empty banks or inverted ranges.
ThemeSpec sample_theme(std::uint64_t seed, const KeywordBanks& banks = default_banks(), const ThemeLimits& limits = {});

// ---------------------------------------------------------------------------
// Layout protocol (the text layer plan).

struct TextEntry {
    std::string text;
    PixelRect rect;  // on the target canvas; text extent plus one pixel of padding
    Rgb fill;
    int scale = 1;

    friend bool operator==(const TextEntry&, const TextEntry&) = default;
};

struct LayoutProtocol {
    int width = 0;
    int height = 0;
    std::vector<TextEntry> texts;
    std::string background;

    friend bool operator==(const LayoutProtocol&, const LayoutProtocol&) = default;
};

/// Text boxes by rejection sampling (at most 200 draws per box, then the glyph
/// scale shrinks). Throws PlacementFailed.
LayoutProtocol generate_layout_protocol(const ThemeSpec& theme, std::uint64_t seed,
                                        const KeywordBanks& banks = default_banks());

/// Text glyphs at their rect, left-aligned after the padding pixel and vertically
/// centered; transparent elsewhere. Throws UnsupportedGlyph.
Image render_text_layer(const LayoutProtocol& protocol);

// ---------------------------------------------------------------------------
// Samples.

struct DesignSample {
    std::string sample_id;
    std::uint64_t seed = 0;
    Image target;
    std::string global_prompt;
    MultiSubjectCondition condition;
    std::vector<std::string> subject_descriptions;  // aligned with condition.placements
    SemanticLayout layout;                          // secondary elements, then textual

    int width() const noexcept { return target.width(); }
    int height() const noexcept { return target.height(); }

    friend bool operator==(const DesignSample&, const DesignSample&) = default;
};

/// Background, subject sprites, secondary shapes, then the text layer. Every box is
/// disjoint from every other box; subject boxes are aligned to even pixels so the
/// condition canvas is an exact half-resolution copy. Throws PlacementFailed.
DesignSample compose_sample(const ThemeSpec& theme, const LayoutProtocol& protocol, std::uint64_t seed);

/// theme -> protocol -> compose; a crowded draw is retried with derived seeds.
DesignSample generate_sample(std::uint64_t seed, const KeywordBanks& banks = default_banks(),
                             const ThemeLimits& limits = {});

/// manifest.json, target.png, condition.png, subject_<id>.png.
void persist_sample(const DesignSample& sample, const std::filesystem::path& dir);
/// Throws IoError (naming the missing file) and SchemaViolation.
DesignSample load_sample(const std::filesystem::path& dir, const LayoutLimits& limits = {});

struct DatasetSpec {
    std::uint64_t seed = 0;
    int count = 8;
    ThemeLimits limits;
};

/// Seed of the i-th sample of a dataset.
std::uint64_t sample_seed(std::uint64_t dataset_seed, int index) noexcept;

/// Writes <out>/sample_00000 ... ; returns the sample directories.
std::vector<std::filesystem::path> generate_dataset(const std::filesystem::path& out, const DatasetSpec& spec,
                                                    int jobs = 1);

/// Sample directories (those holding a manifest.json) in lexicographic order.
std::vector<std::filesystem::path> list_samples(const std::filesystem::path& root);

}  // namespace designdit
