// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#include "designdit/font.hpp"

#include <string>

#include "designdit/error.hpp"

namespace designdit::font {

namespace {

constexpr Glyph kLetters[26] = {
    {{0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},  // A
    {{0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {{0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
    {{0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E}},
    {{0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
    {{0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {{0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
    {{0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {{0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {{0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {{0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
    {{0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {{0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
    {{0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
    {{0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {{0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {{0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
    {{0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {{0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
    {{0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {{0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {{0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {{0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}},
    {{0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {{0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}},
    {{0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},  // Z
};

constexpr Glyph kDigits[10] = {
    {{0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},  // 0
    {{0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {{0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
    {{0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {{0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
    {{0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {{0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    {{0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {{0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
    {{0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},  // 9
};

constexpr Glyph kSpace{{0, 0, 0, 0, 0, 0, 0}};

}  // namespace

bool supported(char c) noexcept { return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == ' '; }

const Glyph& glyph(char c) {
    if (c >= 'A' && c <= 'Z') return kLetters[c - 'A'];
    if (c >= '0' && c <= '9') return kDigits[c - '0'];
    if (c == ' ') return kSpace;
    raise(ErrorCode::UnsupportedGlyph, std::string("no glyph for character '") + c + "'");
}

}  // namespace designdit::font
