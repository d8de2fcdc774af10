// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string_view>

#include "designdit/attention_mask.hpp"
#include "designdit/mmdit.hpp"
#include "designdit/types.hpp"

namespace designdit {

/// Encodes (prompt, layout, subject canvas) for a target of target_w x target_h pixels
/// into the constant model inputs: token features, sequence metadata, mask and
/// rotary tables. The prompt is truncated to config.prompt_cap tokens. A condition
/// without placements contributes no subject tokens.
ModelInputs prepare_inputs(const ModelConfig& config, std::string_view prompt, const SemanticLayout& layout,
                           const MultiSubjectCondition& condition, int target_w, int target_h,
                           MaskToggles toggles = {});

}  // namespace designdit
