// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace designdit::font {

inline constexpr int kGlyphW = 5;
inline constexpr int kGlyphH = 7;
inline constexpr int kAdvance = 6;  // glyph width plus one column of spacing

/// Seven rows of five bits; bit 4 is the leftmost column.
struct Glyph {
    std::array<std::uint8_t, kGlyphH> rows;

    bool on(int x, int y) const noexcept { return (rows[static_cast<std::size_t>(y)] >> (kGlyphW - 1 - x)) & 1U; }
};

bool supported(char c) noexcept;

/// A-Z, 0-9 and space. Throws UnsupportedGlyph otherwise.
const Glyph& glyph(char c);

/// Pixel extent of a rendered string (no trailing spacing column).
inline int text_width(std::string_view text, int scale) noexcept {
    return text.empty() ? 0 : (kAdvance * static_cast<int>(text.size()) - 1) * scale;
}
inline int text_height(int scale) noexcept { return kGlyphH * scale; }

}  // namespace designdit::font
