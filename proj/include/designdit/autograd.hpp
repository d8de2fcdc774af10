// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "designdit/attention_mask.hpp"
#include "designdit/tensor.hpp"

// Minimal reverse-mode differentiation over dense matrices. One Tape records one
// forward pass; nodes are appended in evaluation order, so replaying them backwards
// is a valid topological order. A Tape is single-threaded; run one per batch item.
namespace designdit::ad {

struct Var {
    int id = -1;
};

class Tape {
public:
    using Backward = std::function<void(Tape&, int self)>;

    Var constant(Mat value);
    /// Leaf that refers to externally owned storage (the parameter must outlive the tape).
    Var parameter(const Mat& value, bool requires_grad = true);

    const Mat& value(Var v) const;
    /// Gradient accumulated into v, or nullptr when nothing flowed into it.
    const Mat* grad(Var v) const;
    bool requires_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].requires_grad; }

    /// Seeds d(loss)/d(loss) = 1 for a 1x1 loss and replays the tape.
    void backward(Var loss);

    // Op plumbing.
    Var record(Mat value, std::span<const Var> inputs, Backward backward);
    void accumulate(Var v, const Mat& g);
    const Mat& upstream(int self) const { return nodes_[static_cast<std::size_t>(self)].grad; }
    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        Mat owned;
        const Mat* ref = nullptr;
        Mat grad;
        bool requires_grad = false;
        Backward backward;
    };
    std::deque<Node> nodes_;
};

Var matmul(Tape& t, Var a, Var b);
Var add(Tape& t, Var a, Var b);
/// a + broadcast row vector r.
Var add_row(Tape& t, Var a, Var r);
/// a * broadcast row vector r (elementwise per column).
Var mul_row(Tape& t, Var a, Var r);
Var scale(Tape& t, Var a, double s);
Var gelu(Tape& t, Var a);
Var silu(Tape& t, Var a);
/// Per-row normalization without affine parameters.
Var layer_norm(Tape& t, Var a, double eps = 1e-6);
/// a * (1 + scale) + shift with broadcast rows.
Var modulate(Tape& t, Var a, Var shift, Var scale);
Var slice_rows(Tape& t, Var a, int begin, int count);
Var slice_cols(Tape& t, Var a, int begin, int count);
Var concat_rows(Tape& t, std::span<const Var> parts);
/// RMS normalization of every head slice with a gain shared across heads.
Var head_rms_norm(Tape& t, Var a, Var gain, int n_heads, double eps = 1e-6);
/// Rotary rotation of each head; cos/sin are [tokens x head_dim/2].
Var rope(Tape& t, Var a, const Mat& cos, const Mat& sin, int n_heads);
/// Masked multi-head attention; output is the per-head results concatenated.
Var masked_attention(Tape& t, Var q, Var k, Var v, const AttentionMask& mask, int n_heads);
/// Mean squared error against a constant target, as a 1x1 node.
Var mse(Tape& t, Var pred, const Mat& target);

}  // namespace designdit::ad

namespace designdit::detail {

/// Shared attention kernel. Blocked pairs get weight exactly 0; when probs is
/// non-null it receives the per-head [N x N] weights.
Mat attention_forward(const Mat& q, const Mat& k, const Mat& v, const AttentionMask& mask, int n_heads,
                      std::vector<Mat>* probs);

void rope_rotate(Mat& x, const Mat& cos, const Mat& sin, int n_heads, bool inverse);

}  // namespace designdit::detail
