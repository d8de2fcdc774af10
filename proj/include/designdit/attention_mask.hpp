// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "designdit/types.hpp"

namespace designdit {

/// Sequence order is always layout, prompt, image, subject.
enum class Modality : std::uint8_t { Layout, Prompt, Image, Subject };

std::string_view to_string(Modality m);

struct TokenMeta {
    Modality modality = Modality::Prompt;
    std::optional<int> element_id;   // layout only
    std::optional<int> subject_id;   // subject only, 0 = padding background
    std::optional<int> patch_index;  // image (target grid) and subject (condition grid)
    int sequence_index = 0;
};

struct Segment {
    Modality modality;
    int offset = 0;
    int length = 0;
};

/// Token metadata plus the patch regions the mask rules consult. Both region maps
/// are expressed on the target image grid; subject tokens carry condition-grid
/// patch indices only to identify which subject they belong to.
struct SequenceSpec {
    std::vector<TokenMeta> tokens;
    std::map<int, PatchSet> layout_regions;   // element_id -> target patches
    std::map<int, PatchSet> subject_regions;  // subject_id -> target patches
    PatchGrid image_grid;
    PatchGrid condition_grid;

    int size() const noexcept { return static_cast<int>(tokens.size()); }
    int count(Modality m) const noexcept;
    Segment segment(Modality m) const noexcept;
};

struct SequenceParts {
    std::vector<int> layout_token_elements;  // element id of each layout token
    int prompt_tokens = 0;
    PatchGrid image_grid;
    std::vector<int> subject_token_ids;  // one per condition patch; empty -> no subject segment
    PatchGrid condition_grid;
    std::map<int, PatchSet> layout_regions;
    std::map<int, PatchSet> subject_regions;
};

SequenceSpec build_sequence_spec(SequenceParts parts);

struct MaskToggles {
    bool layout_mask = true;   // LAM
    bool subject_mask = true;  // SAM

    friend bool operator==(const MaskToggles&, const MaskToggles&) = default;
};

/// Dense boolean matrix; allow(q, k) means query q may attend key k.
class AttentionMask {
public:
    AttentionMask() = default;
    explicit AttentionMask(int size, bool fill = false);

    int size() const noexcept { return size_; }
    bool operator()(int q, int k) const noexcept { return allow_[index(q, k)] != 0; }
    void set(int q, int k, bool v) noexcept { allow_[index(q, k)] = v ? 1 : 0; }

    bool is_symmetric() const noexcept;
    bool has_full_diagonal() const noexcept;
    bool rows_nonempty() const noexcept;
    std::size_t allowed_count() const noexcept;

    const std::vector<std::uint8_t>& data() const noexcept { return allow_; }

    friend bool operator==(const AttentionMask&, const AttentionMask&) = default;

private:
    std::size_t index(int q, int k) const noexcept {
        return static_cast<std::size_t>(q) * static_cast<std::size_t>(size_) + static_cast<std::size_t>(k);
    }

    int size_ = 0;
    std::vector<std::uint8_t> allow_;
};

/// Pairwise rule. Throws UnknownRegion when a referenced element or subject has
/// no region in the spec.
bool allowed(const TokenMeta& q, const TokenMeta& k, const SequenceSpec& spec, MaskToggles toggles = {});

AttentionMask build_mask(const SequenceSpec& spec, MaskToggles toggles = {});

/// Binary PGM (P5), 8-bit, 255 = allowed, 0 = blocked.
void dump_mask_pgm(const AttentionMask& mask, const std::filesystem::path& path);
AttentionMask read_mask_pgm(const std::filesystem::path& path);

}  // namespace designdit
