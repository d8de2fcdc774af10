// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#include "designdit/mmdit.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "designdit/error.hpp"
#include "designdit/rng.hpp"

namespace designdit {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
constexpr const char* kGroupNames[3] = {"base", "layout", "subject"};
constexpr const char* kCondNames[2] = {"layout", "subject"};
constexpr const char* kQkv[3] = {"q", "k", "v"};

std::string block_prefix(int i) { return "blocks." + std::to_string(i) + "."; }

Mat layer_norm_rows(const Mat& x, double eps = 1e-6) {
    Mat out(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double mean = x.row(i).mean();
        const double var = (x.row(i).array() - mean).square().mean();
        out.row(i) = (x.row(i).array() - mean) / std::sqrt(var + eps);
    }
    return out;
}

}  // namespace

void ModelConfig::validate() const {
    auto bad = [](const std::string& what) { raise(ErrorCode::InvalidConfig, what); };
    if (d_model < 8) bad("model.d_model must be at least 8");
    if (n_heads < 1 || d_model % n_heads != 0) bad("model.n_heads must divide model.d_model");
    if (head_dim() % 4 != 0) bad("head dimension must be a multiple of 4 for two-axis rotary embedding");
    if (n_blocks < 1) bad("model.n_blocks must be positive");
    if (patch_size < 1) bad("model.patch_size must be positive");
    if (n_freq < 1) bad("model.n_freq must be positive");
    if (lora_rank < 1) bad("model.lora_rank must be positive");
    if (!(lora_alpha > 0.0)) bad("model.lora_alpha must be positive");
    if (max_layouts < 1) bad("model.max_layouts must be positive");
    if (max_desc_tokens < 1) bad("model.max_desc_tokens must be positive");
    if (prompt_cap < 1) bad("model.prompt_cap must be positive");
    if (!(rope_base > 1.0)) bad("model.rope_base must exceed 1");
}

std::string_view to_string(ParamGroup g) {
    switch (g) {
    case ParamGroup::Base: return "base";
    case ParamGroup::Lora: return "lora";
    case ParamGroup::LayoutEncoder: return "layout_encoder";
    case ParamGroup::ConditionAdaLN: return "condition_adaln";
    }
    return "?";
}

std::size_t ParamStore::add(std::string name, Mat value, ParamGroup group) {
    if (index_.contains(name)) raise(ErrorCode::SchemaViolation, "duplicate parameter '" + name + "'");
    index_.emplace(name, params_.size());
    params_.push_back({std::move(name), std::move(value), group});
    return params_.size() - 1;
}

std::size_t ParamStore::index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) raise(ErrorCode::SchemaViolation, "unknown parameter '" + name + "'");
    return it->second;
}

std::size_t ParamStore::element_count() const noexcept {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
    return n;
}

bool is_trainable(ParamGroup g, TrainableSet set) noexcept {
    return set == TrainableSet::All || g != ParamGroup::Base;
}

void round_to_float(Mat& m) noexcept {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<double>(static_cast<float>(m.data()[i]));
}

ParamStore init_params(const ModelConfig& c, std::uint64_t seed) {
    c.validate();
    SplitMix64 rng(derive_seed(seed, fnv1a64("params")));
    ParamStore ps;
    const int d = c.d_model;
    auto normal = [&](int rows, int cols, double stddev) {
        Mat m(rows, cols);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.gaussian() * stddev;
        return m;
    };
    auto lecun = [&](int rows, int cols) { return normal(rows, cols, 1.0 / std::sqrt(static_cast<double>(rows))); };
    auto zeros = [](int rows, int cols) { return Mat::Zero(rows, cols).eval(); };

    ps.add("patch_embed.w", lecun(c.patch_dim(), d), ParamGroup::Base);
    ps.add("time.w1", lecun(d, d), ParamGroup::Base);
    ps.add("time.b1", zeros(1, d), ParamGroup::Base);
    ps.add("time.w2", lecun(d, d), ParamGroup::Base);
    ps.add("time.b2", zeros(1, d), ParamGroup::Base);
    if (c.layout_encoder) {
        ps.add("layout_encoder.w1", lecun(c.layout_feature_dim(), d), ParamGroup::LayoutEncoder);
        ps.add("layout_encoder.b1", zeros(1, d), ParamGroup::LayoutEncoder);
        ps.add("layout_encoder.w2", lecun(d, d), ParamGroup::LayoutEncoder);
        ps.add("layout_encoder.b2", zeros(1, d), ParamGroup::LayoutEncoder);
    }
    for (int b = 0; b < c.n_blocks; ++b) {
        const std::string pre = block_prefix(b);
        const Mat ada_w = normal(d, 6 * d, 0.02);
        ps.add(pre + "adaln.base.w", ada_w, ParamGroup::Base);
        ps.add(pre + "adaln.base.b", zeros(1, 6 * d), ParamGroup::Base);
        // Condition tables start as copies of the base table.
        for (const char* g : kCondNames) {
            ps.add(pre + "adaln." + g + ".w", ada_w, ParamGroup::ConditionAdaLN);
            ps.add(pre + "adaln." + g + ".b", zeros(1, 6 * d), ParamGroup::ConditionAdaLN);
        }
        for (const char* m : kQkv) ps.add(pre + "attn.w" + m, lecun(d, d), ParamGroup::Base);
        ps.add(pre + "attn.wo", lecun(d, d), ParamGroup::Base);
        ps.add(pre + "attn.q_gain", Mat::Ones(1, c.head_dim()), ParamGroup::Base);
        ps.add(pre + "attn.k_gain", Mat::Ones(1, c.head_dim()), ParamGroup::Base);
        for (const char* g : kCondNames) {
            for (const char* m : kQkv) {
                const std::string stem = pre + "lora." + g + "." + m;
                ps.add(stem + ".a", lecun(d, c.lora_rank), ParamGroup::Lora);
                ps.add(stem + ".b", zeros(c.lora_rank, d), ParamGroup::Lora);
            }
        }
        ps.add(pre + "ffn.w1", lecun(d, 4 * d), ParamGroup::Base);
        ps.add(pre + "ffn.b1", zeros(1, 4 * d), ParamGroup::Base);
        ps.add(pre + "ffn.w2", lecun(4 * d, d), ParamGroup::Base);
        ps.add(pre + "ffn.b2", zeros(1, d), ParamGroup::Base);
    }
    ps.add("final.adaln.w", normal(d, 2 * d, 0.02), ParamGroup::Base);
    ps.add("final.adaln.b", zeros(1, 2 * d), ParamGroup::Base);
    ps.add("final.out.w", normal(d, c.patch_dim(), 0.02), ParamGroup::Base);
    ps.add("final.out.b", zeros(1, c.patch_dim()), ParamGroup::Base);
    for (auto& p : ps) round_to_float(p.value);
    return ps;
}

// ---------------------------------------------------------------------------

Mat lora_linear(const Mat& x, const Mat& w, const Mat& a, const Mat& b, double alpha, int rank) {
    if (rank < 1 || x.cols() != w.rows() || x.cols() != a.rows() || a.cols() != rank || b.rows() != rank ||
        b.cols() != w.cols()) {
        raise(ErrorCode::ShapeMismatch, "lora_linear: incompatible shapes");
    }
    Mat y = x * w;
    y.noalias() += (alpha / rank) * ((x * a) * b);
    return y;
}

RowVec timestep_embedding(double t, int dim) {
    RowVec e = RowVec::Zero(dim);
    const int half = dim / 2;
    for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * i / half);
        const double arg = 1000.0 * t * freq;
        e(i) = std::cos(arg);
        e(half + i) = std::sin(arg);
    }
    return e;
}

Modulation adaln_table_eval(const AdaLNTable& table, const RowVec& t_embedding) {
    const Eigen::Index d = t_embedding.size();
    if (table.weight.rows() != d || table.weight.cols() != 6 * d || table.bias.size() != 6 * d) {
        raise(ErrorCode::ShapeMismatch, "adaptive-norm table does not match the embedding width");
    }
    const RowVec act = t_embedding.unaryExpr([](double v) { return silu(v); });
    const RowVec m = act * table.weight + table.bias;
    return {m.segment(0, d), m.segment(d, d), m.segment(2 * d, d),
            m.segment(3 * d, d), m.segment(4 * d, d), m.segment(5 * d, d)};
}

std::pair<Mat, RowVec> adaln_modulate(const Mat& tokens, const RowVec& t_embedding, const AdaLNTable& table) {
    if (tokens.cols() != t_embedding.size()) raise(ErrorCode::ShapeMismatch, "adaln_modulate: token width differs");
    const Modulation m = adaln_table_eval(table, t_embedding);
    Mat out = layer_norm_rows(tokens);
    out.array().rowwise() *= (1.0 + m.scale_attn.array());
    out.rowwise() += m.shift_attn;
    return {std::move(out), m.gate_attn};
}

PositionalIds assign_positional_ids(const SequenceSpec& spec, int prompt_cap) {
    PositionalIds ids;
    ids.reserve(spec.tokens.size());
    int prompt_k = 0, layout_j = 0;
    for (const auto& t : spec.tokens) {
        switch (t.modality) {
        case Modality::Layout: ids.emplace_back(-2, prompt_cap + layout_j++); break;
        case Modality::Prompt: ids.emplace_back(-1, prompt_k++); break;
        case Modality::Image: {
            const int p = *t.patch_index;
            ids.emplace_back(p / spec.image_grid.cols, p % spec.image_grid.cols);
            break;
        }
        case Modality::Subject: {
            const int p = *t.patch_index;
            ids.emplace_back(p / spec.condition_grid.cols, p % spec.condition_grid.cols + spec.image_grid.cols);
            break;
        }
        }
    }
    return ids;
}

RopeTables rope_tables(const PositionalIds& ids, int head_dim, double base) {
    if (head_dim % 4 != 0) raise(ErrorCode::ShapeMismatch, "rotary head dimension must be a multiple of 4");
    const int pairs = head_dim / 2;
    const int per_axis[2] = {(pairs + 1) / 2, pairs / 2};
    RopeTables rt{Mat(static_cast<Eigen::Index>(ids.size()), pairs), Mat(static_cast<Eigen::Index>(ids.size()), pairs)};
    for (std::size_t i = 0; i < ids.size(); ++i) {
        for (int m = 0; m < pairs; ++m) {
            const int axis = m % 2;
            const double freq = std::pow(base, -static_cast<double>(m / 2) / per_axis[axis]);
            const double pos = axis == 0 ? ids[i].first : ids[i].second;
            rt.cos(static_cast<Eigen::Index>(i), m) = std::cos(pos * freq);
            rt.sin(static_cast<Eigen::Index>(i), m) = std::sin(pos * freq);
        }
    }
    return rt;
}

Mat rope_apply(const Mat& x, const PositionalIds& ids, int n_heads, double base) {
    if (n_heads < 1 || x.cols() % n_heads != 0 || static_cast<std::size_t>(x.rows()) != ids.size()) {
        raise(ErrorCode::ShapeMismatch, "rope_apply: shape does not match ids/heads");
    }
    const RopeTables rt = rope_tables(ids, static_cast<int>(x.cols()) / n_heads, base);
    Mat out = x;
    detail::rope_rotate(out, rt.cos, rt.sin, n_heads, false);
    return out;
}

Mat masked_mm_attention(const Mat& q, const Mat& k, const Mat& v, const AttentionMask& mask, int n_heads) {
    return detail::attention_forward(q, k, v, mask, n_heads, nullptr);
}

// ---------------------------------------------------------------------------

Model::Model(ModelConfig config, std::uint64_t seed) : config_(config), params_(init_params(config, seed)) {
    index_params();
}

Model::Model(ModelConfig config, ParamStore params) : config_(config) {
    // Re-emit in canonical order with canonical groups, checking names and shapes.
    const ParamStore skeleton = init_params(config, 0);
    std::set<std::string> expected;
    for (const auto& p : skeleton) expected.insert(p.name);
    for (const auto& p : params) {
        if (!expected.contains(p.name)) raise(ErrorCode::SchemaViolation, "unexpected parameter '" + p.name + "'");
    }
    for (const auto& ref : skeleton) {
        if (!params.contains(ref.name)) raise(ErrorCode::SchemaViolation, "missing parameter '" + ref.name + "'");
        Param& p = params[params.index_of(ref.name)];
        if (p.value.rows() != ref.value.rows() || p.value.cols() != ref.value.cols()) {
            raise(ErrorCode::ShapeMismatch, "parameter '" + ref.name + "' has the wrong shape");
        }
        params_.add(ref.name, std::move(p.value), ref.group);
    }
    index_params();
}

void Model::index_params() {
    auto at = [&](const std::string& n) { return params_.index_of(n); };
    patch_w_ = at("patch_embed.w");
    time_w1_ = at("time.w1");
    time_b1_ = at("time.b1");
    time_w2_ = at("time.w2");
    time_b2_ = at("time.b2");
    if (config_.layout_encoder) {
        le_w1_ = at("layout_encoder.w1");
        le_b1_ = at("layout_encoder.b1");
        le_w2_ = at("layout_encoder.w2");
        le_b2_ = at("layout_encoder.b2");
    } else {
        le_w1_ = le_b1_ = le_w2_ = le_b2_ = kNone;
    }
    blocks_.clear();
    for (int b = 0; b < config_.n_blocks; ++b) {
        const std::string pre = block_prefix(b);
        BlockIndex bi{};
        for (int g = 0; g < 3; ++g) {
            bi.adaln_w[g] = at(pre + "adaln." + kGroupNames[g] + ".w");
            bi.adaln_b[g] = at(pre + "adaln." + kGroupNames[g] + ".b");
        }
        bi.wq = at(pre + "attn.wq");
        bi.wk = at(pre + "attn.wk");
        bi.wv = at(pre + "attn.wv");
        bi.wo = at(pre + "attn.wo");
        bi.q_gain = at(pre + "attn.q_gain");
        bi.k_gain = at(pre + "attn.k_gain");
        for (int g = 0; g < 2; ++g) {
            for (int m = 0; m < 3; ++m) {
                const std::string stem = pre + "lora." + kCondNames[g] + "." + kQkv[m];
                bi.lora_a[g][m] = at(stem + ".a");
                bi.lora_b[g][m] = at(stem + ".b");
            }
        }
        bi.ffn_w1 = at(pre + "ffn.w1");
        bi.ffn_b1 = at(pre + "ffn.b1");
        bi.ffn_w2 = at(pre + "ffn.w2");
        bi.ffn_b2 = at(pre + "ffn.b2");
        blocks_.push_back(bi);
    }
    final_w_ = at("final.adaln.w");
    final_b_ = at("final.adaln.b");
    out_w_ = at("final.out.w");
    out_b_ = at("final.out.b");
}

std::vector<ad::Var> Model::bind(ad::Tape& tape, TrainableSet trainable, bool grads) const {
    std::vector<ad::Var> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(tape.parameter(p.value, grads && is_trainable(p.group, trainable)));
    return out;
}

ad::Var Model::time_embedding(ad::Tape& tape, std::span<const ad::Var> bound, double t) const {
    using namespace ad;
    const Var s = tape.constant(timestep_embedding(t, config_.d_model));
    const Var h = silu(tape, add_row(tape, matmul(tape, s, bound[time_w1_]), bound[time_b1_]));
    return add_row(tape, matmul(tape, h, bound[time_w2_]), bound[time_b2_]);
}

ad::Var Model::embed(ad::Tape& tape, std::span<const ad::Var> bound, const ModelInputs& in, const Mat& noisy) const {
    using namespace ad;
    const int d = config_.d_model;
    const Segment lay = in.spec.segment(Modality::Layout);
    const Segment pro = in.spec.segment(Modality::Prompt);
    const Segment img = in.spec.segment(Modality::Image);
    const Segment sub = in.spec.segment(Modality::Subject);
    if (in.layout.rows() != lay.length || in.prompt.rows() != pro.length || noisy.rows() != img.length ||
        in.subject_patches.rows() != sub.length) {
        raise(ErrorCode::ShapeMismatch, "model inputs do not match the sequence layout");
    }
    if ((lay.length && in.layout.cols() != config_.layout_feature_dim()) || (pro.length && in.prompt.cols() != d) ||
        noisy.cols() != config_.patch_dim() || (sub.length && in.subject_patches.cols() != config_.patch_dim())) {
        raise(ErrorCode::ShapeMismatch, "model input widths do not match the config");
    }

    std::vector<Var> parts;
    if (lay.length) {
        Var l = tape.constant(in.layout);
        if (config_.layout_encoder) {
            l = gelu(tape, add_row(tape, matmul(tape, l, bound[le_w1_]), bound[le_b1_]));
            l = add_row(tape, matmul(tape, l, bound[le_w2_]), bound[le_b2_]);
        }
        parts.push_back(l);
    }
    if (pro.length) parts.push_back(tape.constant(in.prompt));
    parts.push_back(matmul(tape, tape.constant(noisy), bound[patch_w_]));
    if (sub.length) parts.push_back(matmul(tape, tape.constant(in.subject_patches), bound[patch_w_]));
    return concat_rows(tape, parts);
}

ad::Var Model::block(ad::Tape& tape, std::span<const ad::Var> bound, int index, ad::Var tokens,
                     const ModelInputs& in, double t, const ForwardOptions& opts, bool attention_only) const {
    using namespace ad;
    if (index < 0 || index >= config_.n_blocks) raise(ErrorCode::OutOfRange, "block index out of range");
    const BlockIndex& bi = blocks_[static_cast<std::size_t>(index)];
    const int d = config_.d_model;
    const int h = config_.n_heads;
    const double lora_scale = config_.lora_alpha / config_.lora_rank;

    const Var act_t = silu(tape, time_embedding(tape, bound, t));
    const Var act_0 = silu(tape, time_embedding(tape, bound, 0.0));

    struct Part {
        int offset, length, group;  // group: 0 base, 1 layout, 2 subject
    };
    const Segment lay = in.spec.segment(Modality::Layout);
    const Segment pro = in.spec.segment(Modality::Prompt);
    const Segment img = in.spec.segment(Modality::Image);
    const Segment sub = in.spec.segment(Modality::Subject);
    std::vector<Part> parts;
    if (lay.length) parts.push_back({lay.offset, lay.length, 1});
    parts.push_back({pro.offset, pro.length + img.length, 0});
    if (sub.length) parts.push_back({sub.offset, sub.length, 2});

    struct Mods {
        Var shift1, scale1, gate1, shift2, scale2, gate2;
    };
    auto mods_for = [&](int group) {
        const int table = opts.adapters ? group : 0;
        const Var act = group == 2 ? act_0 : act_t;
        const Var m = add_row(tape, matmul(tape, act, bound[bi.adaln_w[table]]), bound[bi.adaln_b[table]]);
        return Mods{slice_cols(tape, m, 0, d),     slice_cols(tape, m, d, d),     slice_cols(tape, m, 2 * d, d),
                    slice_cols(tape, m, 3 * d, d), slice_cols(tape, m, 4 * d, d), slice_cols(tape, m, 5 * d, d)};
    };

    std::vector<Var> xs, qs, ks, vs;
    std::vector<Mods> mods;
    for (const Part& p : parts) {
        const Var x = slice_rows(tape, tokens, p.offset, p.length);
        const Mods m = mods_for(p.group);
        const Var hmod = modulate(tape, layer_norm(tape, x), m.shift1, m.scale1);
        const std::size_t w[3] = {bi.wq, bi.wk, bi.wv};
        Var proj[3];
        for (int j = 0; j < 3; ++j) {
            proj[j] = matmul(tape, hmod, bound[w[j]]);
            if (opts.adapters && p.group != 0) {
                const int g = p.group - 1;
                const Var low = matmul(tape, matmul(tape, hmod, bound[bi.lora_a[g][j]]), bound[bi.lora_b[g][j]]);
                proj[j] = add(tape, proj[j], scale(tape, low, lora_scale));
            }
        }
        xs.push_back(x);
        mods.push_back(m);
        qs.push_back(proj[0]);
        ks.push_back(proj[1]);
        vs.push_back(proj[2]);
    }

    Var q = head_rms_norm(tape, concat_rows(tape, qs), bound[bi.q_gain], h);
    Var k = head_rms_norm(tape, concat_rows(tape, ks), bound[bi.k_gain], h);
    q = rope(tape, q, in.rope.cos, in.rope.sin, h);
    k = rope(tape, k, in.rope.cos, in.rope.sin, h);
    const Var attn = matmul(tape, masked_attention(tape, q, k, concat_rows(tape, vs), in.mask, h), bound[bi.wo]);

    std::vector<Var> outs;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const Mods& m = mods[i];
        Var x = add(tape, xs[i], mul_row(tape, slice_rows(tape, attn, parts[i].offset, parts[i].length), m.gate1));
        if (!attention_only) {
            const Var hmod = modulate(tape, layer_norm(tape, x), m.shift2, m.scale2);
            Var f = gelu(tape, add_row(tape, matmul(tape, hmod, bound[bi.ffn_w1]), bound[bi.ffn_b1]));
            f = add_row(tape, matmul(tape, f, bound[bi.ffn_w2]), bound[bi.ffn_b2]);
            x = add(tape, x, mul_row(tape, f, m.gate2));
        }
        outs.push_back(x);
    }
    return concat_rows(tape, outs);
}

ad::Var Model::forward(ad::Tape& tape, std::span<const ad::Var> bound, const ModelInputs& in, const Mat& noisy,
                       double t, const ForwardOptions& opts) const {
    using namespace ad;
    if (bound.size() != params_.size()) raise(ErrorCode::ShapeMismatch, "bound parameters do not match the model");
    const int d = config_.d_model;
    Var x = embed(tape, bound, in, noisy);
    for (int b = 0; b < config_.n_blocks; ++b) x = block(tape, bound, b, x, in, t, opts);

    const Segment img = in.spec.segment(Modality::Image);
    const Var act = silu(tape, time_embedding(tape, bound, t));
    const Var m = add_row(tape, matmul(tape, act, bound[final_w_]), bound[final_b_]);
    const Var z = modulate(tape, layer_norm(tape, slice_rows(tape, x, img.offset, img.length)), slice_cols(tape, m, 0, d),
                           slice_cols(tape, m, d, d));
    return add_row(tape, matmul(tape, z, bound[out_w_]), bound[out_b_]);
}

Mat Model::predict(const ModelInputs& in, const Mat& noisy, double t, const ForwardOptions& opts) const {
    ad::Tape tape;
    const auto bound = bind(tape, TrainableSet::All, false);
    return tape.value(forward(tape, bound, in, noisy, t, opts));
}

AdaLNTable Model::adaln_table(int block, const std::string& group) const {
    if (block < 0 || block >= config_.n_blocks) raise(ErrorCode::OutOfRange, "block index out of range");
    const std::string pre = block_prefix(block) + "adaln." + group;
    return {params_[params_.index_of(pre + ".w")].value, params_[params_.index_of(pre + ".b")].value.row(0)};
}

LayoutEncoderParams Model::layout_encoder_params() const {
    if (!config_.layout_encoder) raise(ErrorCode::InvalidConfig, "the layout encoder is disabled");
    return {params_[le_w1_].value, params_[le_b1_].value.row(0), params_[le_w2_].value, params_[le_b2_].value.row(0)};
}

}  // namespace designdit
