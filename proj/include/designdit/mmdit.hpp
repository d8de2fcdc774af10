// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "designdit/attention_mask.hpp"
#include "designdit/autograd.hpp"
#include "designdit/encoders.hpp"
#include "designdit/tensor.hpp"

namespace designdit {

struct ModelConfig {
    int d_model = 64;
    int n_heads = 4;
    int n_blocks = 2;
    int patch_size = 8;
    int n_freq = 8;
    int lora_rank = 8;
    double lora_alpha = 8.0;
    int max_layouts = 10;
    int max_desc_tokens = 30;
    int prompt_cap = 32;
    bool layout_encoder = true;  // false: layout tokens are the raw semantic tokens
    double rope_base = 10000.0;
    std::uint64_t text_salt = 0;

    int head_dim() const noexcept { return d_model / n_heads; }
    int patch_dim() const noexcept { return patch_size * patch_size * 3; }
    int layout_feature_dim() const noexcept { return layout_encoder ? d_model + 8 * n_freq : d_model; }

    /// Throws InvalidConfig.
    void validate() const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

enum class ParamGroup : std::uint8_t { Base, Lora, LayoutEncoder, ConditionAdaLN };

std::string_view to_string(ParamGroup g);

struct Param {
    std::string name;
    Mat value;
    ParamGroup group = ParamGroup::Base;
};

/// Ordered, name-addressable parameter set. Order is the checkpoint order.
class ParamStore {
public:
    std::size_t add(std::string name, Mat value, ParamGroup group);

    std::size_t size() const noexcept { return params_.size(); }
    Param& operator[](std::size_t i) { return params_[i]; }
    const Param& operator[](std::size_t i) const { return params_[i]; }
    std::size_t index_of(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.contains(name); }
    std::size_t element_count() const noexcept;

    auto begin() noexcept { return params_.begin(); }
    auto end() noexcept { return params_.end(); }
    auto begin() const noexcept { return params_.begin(); }
    auto end() const noexcept { return params_.end(); }

private:
    std::vector<Param> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Canonical parameter set for a config, drawn from a seeded initializer.
ParamStore init_params(const ModelConfig& config, std::uint64_t seed);

enum class TrainableSet : std::uint8_t {
    All,       // desk default: there is no pretrained base to protect
    Adapters,  // LoRA pairs, layout encoder, condition AdaLN tables
};

bool is_trainable(ParamGroup g, TrainableSet set) noexcept;

/// Rounds every value to the nearest float. Parameters live at single precision;
/// arithmetic runs in double.
void round_to_float(Mat& m) noexcept;

// ---------------------------------------------------------------------------
// Building blocks with plain-matrix signatures.

/// y = x W + (alpha / r) (x A) B.
Mat lora_linear(const Mat& x, const Mat& w, const Mat& a, const Mat& b, double alpha, int rank);

/// Sinusoidal embedding of t (scaled by 1000), [cos | sin], length dim.
RowVec timestep_embedding(double t, int dim);

struct AdaLNTable {
    Mat weight;  // [d x 6d]
    RowVec bias; // [6d]
};

/// The six modulation vectors produced from one time embedding.
struct Modulation {
    RowVec shift_attn, scale_attn, gate_attn, shift_ffn, scale_ffn, gate_ffn;
};

Modulation adaln_table_eval(const AdaLNTable& table, const RowVec& t_embedding);

/// scale/shift applied to LayerNorm(tokens) for the attention branch; returns
/// the modulated tokens and the gate for that branch.
std::pair<Mat, RowVec> adaln_modulate(const Mat& tokens, const RowVec& t_embedding, const AdaLNTable& table);

/// (axis0, axis1) integer position per token.
using PositionalIds = std::vector<std::pair<int, int>>;

/// image (row, col); subject (row, col + image cols); prompt (-1, k);
/// layout (-2, prompt_cap + j).
PositionalIds assign_positional_ids(const SequenceSpec& spec, int prompt_cap);

struct RopeTables {
    Mat cos;  // [tokens x head_dim/2]
    Mat sin;
};

/// Pair m of each head rotates with axis (m % 2) at frequency base^(-(m/2) / pairs_on_axis).
RopeTables rope_tables(const PositionalIds& ids, int head_dim, double base = 10000.0);

Mat rope_apply(const Mat& x, const PositionalIds& ids, int n_heads, double base = 10000.0);

/// Multi-head attention over the full [layout|prompt|image|subject] sequence; blocked
/// pairs receive exactly zero weight. Returns heads concatenated (pre output projection).
Mat masked_mm_attention(const Mat& q, const Mat& k, const Mat& v, const AttentionMask& mask, int n_heads);

// ---------------------------------------------------------------------------
// Model.

/// Everything the model consumes besides the noisy image tokens.
struct ModelInputs {
    Mat prompt;           // [T_p x d_model]
    Mat layout;           // [T_l x layout_feature_dim]
    Mat subject_patches;  // [T_s x patch_dim]
    SequenceSpec spec;
    AttentionMask mask;
    RopeTables rope;
};

struct ForwardOptions {
    bool adapters = true;  // false: no LoRA branches, condition tokens use the base AdaLN table
};

class Model {
public:
    /// Fresh parameters from a seeded initializer.
    Model(ModelConfig config, std::uint64_t seed);
    /// Wraps existing parameters (e.g. from a checkpoint); validates names and shapes.
    Model(ModelConfig config, ParamStore params);

    const ModelConfig& config() const noexcept { return config_; }
    ParamStore& params() noexcept { return params_; }
    const ParamStore& params() const noexcept { return params_; }

    /// Binds every parameter as a tape leaf; frozen ones do not collect gradients.
    std::vector<ad::Var> bind(ad::Tape& tape, TrainableSet trainable = TrainableSet::All, bool grads = true) const;

    /// Concatenated input tokens [layout | prompt | image | subject] in d_model space.
    ad::Var embed(ad::Tape& tape, std::span<const ad::Var> bound, const ModelInputs& in, const Mat& noisy) const;

    /// One transformer block. When attention_only is set the FFN half is skipped and
    /// the result is the tokens after the gated attention residual.
    ad::Var block(ad::Tape& tape, std::span<const ad::Var> bound, int index, ad::Var tokens, const ModelInputs& in,
                  double t, const ForwardOptions& opts = {}, bool attention_only = false) const;

    /// Velocity prediction for the image tokens, [T_z x patch_dim].
    ad::Var forward(ad::Tape& tape, std::span<const ad::Var> bound, const ModelInputs& in, const Mat& noisy, double t,
                    const ForwardOptions& opts = {}) const;

    Mat predict(const ModelInputs& in, const Mat& noisy, double t, const ForwardOptions& opts = {}) const;

    /// Current adaptive-norm table of a block for a group ("base", "layout", "subject").
    AdaLNTable adaln_table(int block, const std::string& group) const;
    /// Layout encoder weights; throws InvalidConfig when the encoder is disabled.
    LayoutEncoderParams layout_encoder_params() const;

private:
    struct BlockIndex {
        std::size_t adaln_w[3], adaln_b[3];  // base, layout, subject
        std::size_t wq, wk, wv, wo;
        std::size_t q_gain, k_gain;
        std::size_t lora_a[2][3], lora_b[2][3];  // [layout|subject][q|k|v]
        std::size_t ffn_w1, ffn_b1, ffn_w2, ffn_b2;
    };

    void index_params();
    ad::Var time_embedding(ad::Tape& tape, std::span<const ad::Var> bound, double t) const;

    ModelConfig config_;
    ParamStore params_;
    std::size_t patch_w_{}, time_w1_{}, time_b1_{}, time_w2_{}, time_b2_{};
    std::size_t le_w1_{}, le_b1_{}, le_w2_{}, le_b2_{};
    std::size_t final_w_{}, final_b_{}, out_w_{}, out_b_{};
    std::vector<BlockIndex> blocks_;
};

}  // namespace designdit
