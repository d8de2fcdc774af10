// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#include "designdit/conditioning.hpp"

#include "designdit/encoders.hpp"
#include "designdit/error.hpp"
#include "designdit/image.hpp"

namespace designdit {

ModelInputs prepare_inputs(const ModelConfig& config, std::string_view prompt, const SemanticLayout& layout,
                           const MultiSubjectCondition& condition, int target_w, int target_h, MaskToggles toggles) {
    config.validate();
    validate_layout(layout, {config.max_layouts, config.max_desc_tokens});
    const PatchGrid image_grid = PatchGrid::for_canvas(target_w, target_h, config.patch_size);

    ModelInputs in;
    const PromptTokens p = encode_text_stub(prompt, config.d_model, config.text_salt);
    in.prompt = p.embeddings.topRows(std::min<Eigen::Index>(p.embeddings.rows(), config.prompt_cap));

    SequenceParts parts;
    parts.image_grid = image_grid;
    parts.prompt_tokens = static_cast<int>(in.prompt.rows());

    std::vector<Mat> feats;
    Eigen::Index layout_rows = 0;
    for (std::size_t i = 0; i < layout.elements.size(); ++i) {
        const LayoutElement& e = layout.elements[i];
        Mat f = config.layout_encoder
                    ? layout_element_features(e, config.d_model, config.n_freq, config.text_salt)
                    : encode_text_stub(e.description, config.d_model, config.text_salt).embeddings;
        parts.layout_token_elements.insert(parts.layout_token_elements.end(), static_cast<std::size_t>(f.rows()),
                                           static_cast<int>(i));
        parts.layout_regions[static_cast<int>(i)] = patch_region(e.bbox, image_grid);
        layout_rows += f.rows();
        feats.push_back(std::move(f));
    }
    in.layout.resize(layout_rows, config.layout_feature_dim());
    Eigen::Index row = 0;
    for (const Mat& f : feats) {
        in.layout.middleRows(row, f.rows()) = f;
        row += f.rows();
    }

    if (!condition.placements.empty()) {
        const PatchGrid cond_grid =
            PatchGrid::for_canvas(condition.canvas.width(), condition.canvas.height(), config.patch_size);
        parts.condition_grid = cond_grid;
        parts.subject_token_ids = subject_token_ids(condition, cond_grid);
        parts.subject_regions = subject_regions(condition, image_grid);
        in.subject_patches = patchify_pixels(to_signed_float(condition.canvas), config.patch_size);
    } else {
        in.subject_patches.resize(0, config.patch_dim());
    }

    in.spec = build_sequence_spec(std::move(parts));
    in.mask = build_mask(in.spec, toggles);
    in.rope = rope_tables(assign_positional_ids(in.spec, config.prompt_cap), config.head_dim(), config.rope_base);
    return in;
}

}  // namespace designdit
