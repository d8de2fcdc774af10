// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#include "designdit/attention_mask.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "designdit/error.hpp"

namespace designdit {

std::string_view to_string(Modality m) {
    switch (m) {
    case Modality::Layout: return "layout";
    case Modality::Prompt: return "prompt";
    case Modality::Image: return "image";
    case Modality::Subject: return "subject";
    }
    return "?";
}

int SequenceSpec::count(Modality m) const noexcept {
    return static_cast<int>(std::count_if(tokens.begin(), tokens.end(), [m](const TokenMeta& t) { return t.modality == m; }));
}

Segment SequenceSpec::segment(Modality m) const noexcept {
    Segment s{m, 0, 0};
    for (const auto& t : tokens) {
        if (t.modality < m) ++s.offset;
        if (t.modality == m) ++s.length;
    }
    return s;
}

SequenceSpec build_sequence_spec(SequenceParts parts) {
    SequenceSpec spec;
    spec.image_grid = parts.image_grid;
    spec.condition_grid = parts.condition_grid;
    spec.layout_regions = std::move(parts.layout_regions);
    spec.subject_regions = std::move(parts.subject_regions);

    int seq = 0;
    for (int e : parts.layout_token_elements) {
        TokenMeta t;
        t.modality = Modality::Layout;
        t.element_id = e;
        t.sequence_index = seq++;
        spec.tokens.push_back(t);
    }
    for (int i = 0; i < parts.prompt_tokens; ++i) {
        TokenMeta t;
        t.modality = Modality::Prompt;
        t.sequence_index = seq++;
        spec.tokens.push_back(t);
    }
    for (int p = 0; p < parts.image_grid.size(); ++p) {
        TokenMeta t;
        t.modality = Modality::Image;
        t.patch_index = p;
        t.sequence_index = seq++;
        spec.tokens.push_back(t);
    }
    for (std::size_t p = 0; p < parts.subject_token_ids.size(); ++p) {
        TokenMeta t;
        t.modality = Modality::Subject;
        t.subject_id = parts.subject_token_ids[p];
        t.patch_index = static_cast<int>(p);
        t.sequence_index = seq++;
        spec.tokens.push_back(t);
    }
    return spec;
}

AttentionMask::AttentionMask(int size, bool fill)
    : size_(size), allow_(static_cast<std::size_t>(size) * static_cast<std::size_t>(size), fill ? 1 : 0) {}

bool AttentionMask::is_symmetric() const noexcept {
    for (int q = 0; q < size_; ++q) {
        for (int k = q + 1; k < size_; ++k) {
            if ((*this)(q, k) != (*this)(k, q)) return false;
        }
    }
    return true;
}

bool AttentionMask::has_full_diagonal() const noexcept {
    for (int i = 0; i < size_; ++i) {
        if (!(*this)(i, i)) return false;
    }
    return true;
}

bool AttentionMask::rows_nonempty() const noexcept {
    for (int q = 0; q < size_; ++q) {
        bool any = false;
        for (int k = 0; k < size_ && !any; ++k) any = (*this)(q, k);
        if (!any) return false;
    }
    return true;
}

std::size_t AttentionMask::allowed_count() const noexcept {
    return static_cast<std::size_t>(std::count(allow_.begin(), allow_.end(), std::uint8_t{1}));
}

namespace {

const PatchSet& region_of(const std::map<int, PatchSet>& regions, int id, std::string_view what) {
    auto it = regions.find(id);
    if (it == regions.end()) raise(ErrorCode::UnknownRegion, std::string(what) + " " + std::to_string(id) + " has no region");
    return it->second;
}

bool contains(const PatchSet& set, int patch) { return std::binary_search(set.begin(), set.end(), patch); }

// Rule table with a.modality <= b.modality.
bool ordered_rule(const TokenMeta& a, const TokenMeta& b, const SequenceSpec& spec) {
    switch (a.modality) {
    case Modality::Layout:
        switch (b.modality) {
        case Modality::Layout: return *a.element_id == *b.element_id;
        case Modality::Image: return contains(region_of(spec.layout_regions, *a.element_id, "layout element"), *b.patch_index);
        case Modality::Prompt:
        case Modality::Subject: return false;
        }
        break;
    case Modality::Prompt:
        return b.modality != Modality::Subject;
    case Modality::Image:
        if (b.modality == Modality::Image) return true;
        // b is a subject token.
        if (*b.subject_id == 0) return false;
        return contains(region_of(spec.subject_regions, *b.subject_id, "subject"), *a.patch_index);
    case Modality::Subject:
        return *a.subject_id != 0 && *a.subject_id == *b.subject_id;
    }
    return false;
}

}  // namespace

bool allowed(const TokenMeta& q, const TokenMeta& k, const SequenceSpec& spec, MaskToggles toggles) {
    // Region lookups run first so that a missing region is reported regardless of toggles.
    const bool rule = q.modality <= k.modality ? ordered_rule(q, k, spec) : ordered_rule(k, q, spec);
    if (q.sequence_index == k.sequence_index) return true;
    if (!toggles.layout_mask && (q.modality == Modality::Layout || k.modality == Modality::Layout)) return true;
    if (!toggles.subject_mask && (q.modality == Modality::Subject || k.modality == Modality::Subject)) return true;
    return rule;
}

AttentionMask build_mask(const SequenceSpec& spec, MaskToggles toggles) {
    const int n = spec.size();
    const Segment lay = spec.segment(Modality::Layout);
    const Segment pro = spec.segment(Modality::Prompt);
    const Segment img = spec.segment(Modality::Image);
    const Segment sub = spec.segment(Modality::Subject);
    const int n_patches = spec.image_grid.size();

    // Dense patch-membership rows for every region id referenced by a token.
    auto membership = [&](const std::map<int, PatchSet>& regions, int id, std::string_view what) {
        std::vector<std::uint8_t> row(static_cast<std::size_t>(n_patches), 0);
        for (int p : region_of(regions, id, what)) {
            if (p < 0 || p >= n_patches) raise(ErrorCode::UnknownRegion, std::string(what) + " region exceeds the image grid");
            row[static_cast<std::size_t>(p)] = 1;
        }
        return row;
    };
    std::map<int, std::vector<std::uint8_t>> layout_rows, subject_rows;
    for (int i = lay.offset; i < lay.offset + lay.length; ++i) {
        const int e = *spec.tokens[i].element_id;
        if (!layout_rows.contains(e)) layout_rows.emplace(e, membership(spec.layout_regions, e, "layout element"));
    }
    for (int i = sub.offset; i < sub.offset + sub.length; ++i) {
        const int s = *spec.tokens[i].subject_id;
        if (s != 0 && !subject_rows.contains(s)) subject_rows.emplace(s, membership(spec.subject_regions, s, "subject"));
    }

    AttentionMask mask(n, false);
    auto fill_block = [&](const Segment& a, const Segment& b) {
        for (int q = a.offset; q < a.offset + a.length; ++q) {
            for (int k = b.offset; k < b.offset + b.length; ++k) mask.set(q, k, true);
        }
    };
    auto fill_sym = [&](int q, int k) {
        mask.set(q, k, true);
        mask.set(k, q, true);
    };

    // Unconditional prompt/image interactions.
    const Segment prompt_image{Modality::Prompt, pro.offset, pro.length + img.length};
    fill_block(prompt_image, prompt_image);

    // Layout.
    if (!toggles.layout_mask) {
        const Segment all{Modality::Layout, 0, n};
        fill_block(lay, all);
        fill_block(all, lay);
    } else {
        for (int q = lay.offset; q < lay.offset + lay.length; ++q) {
            const int e = *spec.tokens[q].element_id;
            for (int k = lay.offset; k < lay.offset + lay.length; ++k) {
                if (*spec.tokens[k].element_id == e) mask.set(q, k, true);
            }
            const auto& row = layout_rows.at(e);
            for (int p = 0; p < img.length; ++p) {
                if (row[static_cast<std::size_t>(*spec.tokens[img.offset + p].patch_index)]) fill_sym(q, img.offset + p);
            }
        }
    }

    // Subjects.
    if (!toggles.subject_mask) {
        const Segment all{Modality::Subject, 0, n};
        fill_block(sub, all);
        fill_block(all, sub);
    } else {
        for (int q = sub.offset; q < sub.offset + sub.length; ++q) {
            const int s = *spec.tokens[q].subject_id;
            mask.set(q, q, true);
            if (s == 0) continue;
            for (int k = sub.offset; k < sub.offset + sub.length; ++k) {
                if (*spec.tokens[k].subject_id == s) mask.set(q, k, true);
            }
            const auto& row = subject_rows.at(s);
            for (int p = 0; p < img.length; ++p) {
                if (row[static_cast<std::size_t>(*spec.tokens[img.offset + p].patch_index)]) fill_sym(q, img.offset + p);
            }
        }
    }

    for (int i = 0; i < n; ++i) mask.set(i, i, true);
    return mask;
}

void dump_mask_pgm(const AttentionMask& mask, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
    out << "P5\n" << mask.size() << ' ' << mask.size() << "\n255\n";
    std::vector<char> bytes(mask.data().size());
    std::transform(mask.data().begin(), mask.data().end(), bytes.begin(),
                   [](std::uint8_t v) { return static_cast<char>(v ? 0xFF : 0x00); });
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) raise(ErrorCode::IoError, "failed writing '" + path.string() + "'");
}

AttentionMask read_mask_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (magic != "P5" || w != h || w < 0 || maxval != 255) raise(ErrorCode::IoError, "'" + path.string() + "' is not a square 8-bit P5 mask");
    in.get();  // single whitespace after maxval
    std::vector<char> bytes(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) raise(ErrorCode::IoError, "'" + path.string() + "' is truncated");
    AttentionMask mask(w, false);
    for (int q = 0; q < w; ++q) {
        for (int k = 0; k < w; ++k) mask.set(q, k, bytes[static_cast<std::size_t>(q) * w + k] != 0);
    }
    return mask;
}

}  // namespace designdit
