// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#include "designdit/autograd.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include "designdit/error.hpp"

namespace designdit::detail {

Mat attention_forward(const Mat& q, const Mat& k, const Mat& v, const AttentionMask& mask, int n_heads,
                      std::vector<Mat>* probs) {
    const Eigen::Index n = q.rows();
    const Eigen::Index d = q.cols();
    if (k.rows() != n || v.rows() != n || k.cols() != d || v.cols() != d || mask.size() != n || n_heads <= 0 ||
        d % n_heads != 0) {
        raise(ErrorCode::ShapeMismatch, "attention inputs do not conform to the mask/head count");
    }
    const Eigen::Index hd = d / n_heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));
    Mat out(n, d);
    if (probs) probs->assign(static_cast<std::size_t>(n_heads), Mat());

    for (int h = 0; h < n_heads; ++h) {
        Mat p = (q.middleCols(h * hd, hd) * k.middleCols(h * hd, hd).transpose()) * inv_sqrt;
        for (Eigen::Index i = 0; i < n; ++i) {
            double row_max = -std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < n; ++j) {
                if (mask(static_cast<int>(i), static_cast<int>(j))) row_max = std::max(row_max, p(i, j));
            }
            double sum = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (mask(static_cast<int>(i), static_cast<int>(j))) {
                    p(i, j) = std::exp(p(i, j) - row_max);
                    sum += p(i, j);
                } else {
                    p(i, j) = 0.0;
                }
            }
            p.row(i) /= sum;
        }
        out.middleCols(h * hd, hd).noalias() = p * v.middleCols(h * hd, hd);
        if (probs) (*probs)[static_cast<std::size_t>(h)] = std::move(p);
    }
    return out;
}

void rope_rotate(Mat& x, const Mat& cos, const Mat& sin, int n_heads, bool inverse) {
    const Eigen::Index hd = x.cols() / n_heads;
    const Eigen::Index pairs = hd / 2;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (int h = 0; h < n_heads; ++h) {
            for (Eigen::Index m = 0; m < pairs; ++m) {
                const double c = cos(i, m);
                const double s = inverse ? -sin(i, m) : sin(i, m);
                double& a = x(i, h * hd + 2 * m);
                double& b = x(i, h * hd + 2 * m + 1);
                const double a0 = a, b0 = b;
                a = a0 * c - b0 * s;
                b = a0 * s + b0 * c;
            }
        }
    }
}

}  // namespace designdit::detail

namespace designdit::ad {

Var Tape::constant(Mat value) {
    Node n;
    n.owned = std::move(value);
    nodes_.push_back(std::move(n));
    return {static_cast<int>(nodes_.size()) - 1};
}

Var Tape::parameter(const Mat& value, bool requires_grad) {
    Node n;
    n.ref = &value;
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return {static_cast<int>(nodes_.size()) - 1};
}

const Mat& Tape::value(Var v) const {
    const Node& n = nodes_[static_cast<std::size_t>(v.id)];
    return n.ref ? *n.ref : n.owned;
}

const Mat* Tape::grad(Var v) const {
    const Node& n = nodes_[static_cast<std::size_t>(v.id)];
    return n.grad.size() > 0 ? &n.grad : nullptr;
}

Var Tape::record(Mat value, std::span<const Var> inputs, Backward backward) {
    Node n;
    n.owned = std::move(value);
    for (Var in : inputs) n.requires_grad = n.requires_grad || nodes_[static_cast<std::size_t>(in.id)].requires_grad;
    if (n.requires_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return {static_cast<int>(nodes_.size()) - 1};
}

void Tape::accumulate(Var v, const Mat& g) {
    Node& n = nodes_[static_cast<std::size_t>(v.id)];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
        n.grad = g;
    } else {
        n.grad += g;
    }
}

void Tape::backward(Var loss) {
    const Mat& l = value(loss);
    if (l.rows() != 1 || l.cols() != 1) raise(ErrorCode::ShapeMismatch, "backward expects a 1x1 loss");
    nodes_[static_cast<std::size_t>(loss.id)].grad = Mat::Ones(1, 1);
    for (int i = loss.id; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.backward && n.grad.size() > 0) n.backward(*this, i);
    }
}

namespace {

void require(bool ok, const char* what) {
    if (!ok) raise(ErrorCode::ShapeMismatch, what);
}

RowVec col_sum(const Mat& m) { return m.colwise().sum(); }

}  // namespace

Var matmul(Tape& t, Var a, Var b) {
    const Mat& av = t.value(a);
    const Mat& bv = t.value(b);
    require(av.cols() == bv.rows(), "matmul: inner dimensions differ");
    Mat out = av * bv;
    const Var in[] = {a, b};
    return t.record(std::move(out), in, [a, b](Tape& tp, int self) {
        const Mat& g = tp.upstream(self);
        if (tp.requires_grad(a)) tp.accumulate(a, g * tp.value(b).transpose());
        if (tp.requires_grad(b)) tp.accumulate(b, tp.value(a).transpose() * g);
    });
}

Var add(Tape& t, Var a, Var b) {
    require(t.value(a).rows() == t.value(b).rows() && t.value(a).cols() == t.value(b).cols(), "add: shapes differ");
    Mat out = t.value(a) + t.value(b);
    const Var in[] = {a, b};
    return t.record(std::move(out), in, [a, b](Tape& tp, int self) {
        tp.accumulate(a, tp.upstream(self));
        tp.accumulate(b, tp.upstream(self));
    });
}

Var add_row(Tape& t, Var a, Var r) {
    const Mat& rv = t.value(r);
    require(rv.rows() == 1 && rv.cols() == t.value(a).cols(), "add_row: row vector width differs");
    Mat out = t.value(a).rowwise() + RowVec(rv.row(0));
    const Var in[] = {a, r};
    return t.record(std::move(out), in, [a, r](Tape& tp, int self) {
        const Mat& g = tp.upstream(self);
        tp.accumulate(a, g);
        if (tp.requires_grad(r)) tp.accumulate(r, col_sum(g));
    });
}

Var mul_row(Tape& t, Var a, Var r) {
    const Mat& rv = t.value(r);
    require(rv.rows() == 1 && rv.cols() == t.value(a).cols(), "mul_row: row vector width differs");
    Mat out = t.value(a).array().rowwise() * rv.row(0).array();
    const Var in[] = {a, r};
    return t.record(std::move(out), in, [a, r](Tape& tp, int self) {
        const Mat& g = tp.upstream(self);
        if (tp.requires_grad(a)) tp.accumulate(a, g.array().rowwise() * tp.value(r).row(0).array());
        if (tp.requires_grad(r)) tp.accumulate(r, col_sum(g.cwiseProduct(tp.value(a))));
    });
}

Var scale(Tape& t, Var a, double s) {
    Mat out = t.value(a) * s;
    const Var in[] = {a};
    return t.record(std::move(out), in, [a, s](Tape& tp, int self) { tp.accumulate(a, tp.upstream(self) * s); });
}

Var gelu(Tape& t, Var a) {
    Mat out = t.value(a).unaryExpr([](double x) { return designdit::gelu(x); });
    const Var in[] = {a};
    return t.record(std::move(out), in, [a](Tape& tp, int self) {
        tp.accumulate(a, tp.upstream(self).cwiseProduct(tp.value(a).unaryExpr([](double x) { return gelu_grad(x); })));
    });
}

Var silu(Tape& t, Var a) {
    Mat out = t.value(a).unaryExpr([](double x) { return designdit::silu(x); });
    const Var in[] = {a};
    return t.record(std::move(out), in, [a](Tape& tp, int self) {
        tp.accumulate(a, tp.upstream(self).cwiseProduct(tp.value(a).unaryExpr([](double x) { return silu_grad(x); })));
    });
}

Var layer_norm(Tape& t, Var a, double eps) {
    const Mat& x = t.value(a);
    const Eigen::Index n = x.rows(), d = x.cols();
    auto xhat = std::make_shared<Mat>(n, d);
    auto inv_std = std::make_shared<Eigen::VectorXd>(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mean = x.row(i).mean();
        const double var = (x.row(i).array() - mean).square().mean();
        (*inv_std)(i) = 1.0 / std::sqrt(var + eps);
        xhat->row(i) = (x.row(i).array() - mean) * (*inv_std)(i);
    }
    const Var in[] = {a};
    return t.record(*xhat, in, [a, xhat, inv_std](Tape& tp, int self) {
        const Mat& g = tp.upstream(self);
        const Eigen::Index cols = g.cols();
        Mat gx(g.rows(), cols);
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
            const double mg = g.row(i).mean();
            const double mgx = g.row(i).dot(xhat->row(i)) / static_cast<double>(cols);
            gx.row(i) = (g.row(i).array() - mg - xhat->row(i).array() * mgx) * (*inv_std)(i);
        }
        tp.accumulate(a, gx);
    });
}

Var modulate(Tape& t, Var a, Var shift, Var scale_v) {
    const Mat& x = t.value(a);
    const Mat& sh = t.value(shift);
    const Mat& sc = t.value(scale_v);
    require(sh.rows() == 1 && sc.rows() == 1 && sh.cols() == x.cols() && sc.cols() == x.cols(), "modulate: widths differ");
    Mat out = (x.array().rowwise() * (sc.row(0).array() + 1.0)).rowwise() + sh.row(0).array();
    const Var in[] = {a, shift, scale_v};
    return t.record(std::move(out), in, [a, shift, scale_v](Tape& tp, int self) {
        const Mat& g = tp.upstream(self);
        if (tp.requires_grad(a)) tp.accumulate(a, g.array().rowwise() * (tp.value(scale_v).row(0).array() + 1.0));
        if (tp.requires_grad(shift)) tp.accumulate(shift, col_sum(g));
        if (tp.requires_grad(scale_v)) tp.accumulate(scale_v, col_sum(g.cwiseProduct(tp.value(a))));
    });
}

Var slice_rows(Tape& t, Var a, int begin, int count) {
    const Mat& x = t.value(a);
    require(begin >= 0 && count >= 0 && begin + count <= x.rows(), "slice_rows: out of range");
    Mat out = x.middleRows(begin, count);
    const Var in[] = {a};
    return t.record(std::move(out), in, [a, begin, count](Tape& tp, int self) {
        const Mat& x = tp.value(a);
        Mat g = Mat::Zero(x.rows(), x.cols());
        g.middleRows(begin, count) = tp.upstream(self);
        tp.accumulate(a, g);
    });
}

Var slice_cols(Tape& t, Var a, int begin, int count) {
    const Mat& x = t.value(a);
    require(begin >= 0 && count >= 0 && begin + count <= x.cols(), "slice_cols: out of range");
    Mat out = x.middleCols(begin, count);
    const Var in[] = {a};
    return t.record(std::move(out), in, [a, begin, count](Tape& tp, int self) {
        const Mat& x = tp.value(a);
        Mat g = Mat::Zero(x.rows(), x.cols());
        g.middleCols(begin, count) = tp.upstream(self);
        tp.accumulate(a, g);
    });
}

Var concat_rows(Tape& t, std::span<const Var> parts) {
    require(!parts.empty(), "concat_rows: no inputs");
    Eigen::Index rows = 0;
    const Eigen::Index cols = t.value(parts[0]).cols();
    for (Var p : parts) {
        require(t.value(p).cols() == cols, "concat_rows: widths differ");
        rows += t.value(p).rows();
    }
    Mat out(rows, cols);
    Eigen::Index r = 0;
    for (Var p : parts) {
        out.middleRows(r, t.value(p).rows()) = t.value(p);
        r += t.value(p).rows();
    }
    std::vector<Var> inputs(parts.begin(), parts.end());
    return t.record(std::move(out), parts, [inputs](Tape& tp, int self) {
        const Mat& g = tp.upstream(self);
        Eigen::Index r = 0;
        for (Var p : inputs) {
            const Eigen::Index n = tp.value(p).rows();
            if (tp.requires_grad(p)) tp.accumulate(p, g.middleRows(r, n));
            r += n;
        }
    });
}

Var head_rms_norm(Tape& t, Var a, Var gain, int n_heads, double eps) {
    const Mat& x = t.value(a);
    const Mat& gv = t.value(gain);
    const Eigen::Index hd = x.cols() / n_heads;
    require(x.cols() % n_heads == 0 && gv.rows() == 1 && gv.cols() == hd, "head_rms_norm: gain width differs");
    auto inv_rms = std::make_shared<Mat>(x.rows(), n_heads);
    Mat out(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (int h = 0; h < n_heads; ++h) {
            auto seg = x.row(i).segment(h * hd, hd);
            const double r = 1.0 / std::sqrt(seg.squaredNorm() / static_cast<double>(hd) + eps);
            (*inv_rms)(i, h) = r;
            out.row(i).segment(h * hd, hd) = seg.cwiseProduct(gv.row(0)) * r;
        }
    }
    const Var in[] = {a, gain};
    return t.record(std::move(out), in, [a, gain, n_heads, inv_rms](Tape& tp, int self) {
        const Mat& g = tp.upstream(self);
        const Mat& x = tp.value(a);
        const Mat& gv = tp.value(gain);
        const Eigen::Index hd = x.cols() / n_heads;
        Mat gx(x.rows(), x.cols());
        RowVec ggain = RowVec::Zero(hd);
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            for (int h = 0; h < n_heads; ++h) {
                const double r = (*inv_rms)(i, h);
                auto seg = x.row(i).segment(h * hd, hd);
                auto gseg = g.row(i).segment(h * hd, hd);
                ggain += gseg.cwiseProduct(seg) * r;
                const RowVec gy = gseg.cwiseProduct(gv.row(0));
                const double dot = gy.dot(seg);
                gx.row(i).segment(h * hd, hd) = gy * r - seg * (dot * r * r * r / static_cast<double>(hd));
            }
        }
        if (tp.requires_grad(a)) tp.accumulate(a, gx);
        if (tp.requires_grad(gain)) tp.accumulate(gain, ggain);
    });
}

Var rope(Tape& t, Var a, const Mat& cos, const Mat& sin, int n_heads) {
    Mat out = t.value(a);
    require(out.rows() == cos.rows() && out.cols() == n_heads * cos.cols() * 2, "rope: table shape differs");
    detail::rope_rotate(out, cos, sin, n_heads, false);
    auto cos_c = std::make_shared<Mat>(cos);
    auto sin_c = std::make_shared<Mat>(sin);
    const Var in[] = {a};
    return t.record(std::move(out), in, [a, cos_c, sin_c, n_heads](Tape& tp, int self) {
        Mat g = tp.upstream(self);
        detail::rope_rotate(g, *cos_c, *sin_c, n_heads, true);
        tp.accumulate(a, g);
    });
}

Var masked_attention(Tape& t, Var q, Var k, Var v, const AttentionMask& mask, int n_heads) {
    auto probs = std::make_shared<std::vector<Mat>>();
    Mat out = detail::attention_forward(t.value(q), t.value(k), t.value(v), mask, n_heads, probs.get());
    const Var in[] = {q, k, v};
    return t.record(std::move(out), in, [q, k, v, n_heads, probs](Tape& tp, int self) {
        const Mat& g = tp.upstream(self);
        const Mat& qv = tp.value(q);
        const Mat& kv = tp.value(k);
        const Mat& vv = tp.value(v);
        const Eigen::Index hd = qv.cols() / n_heads;
        const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));
        Mat gq(qv.rows(), qv.cols()), gk(kv.rows(), kv.cols()), gv(vv.rows(), vv.cols());
        for (int h = 0; h < n_heads; ++h) {
            const Mat& p = (*probs)[static_cast<std::size_t>(h)];
            const auto go = g.middleCols(h * hd, hd);
            gv.middleCols(h * hd, hd).noalias() = p.transpose() * go;
            Mat gp = go * vv.middleCols(h * hd, hd).transpose();
            const Eigen::VectorXd row_dot = gp.cwiseProduct(p).rowwise().sum();
            Mat gs = p.cwiseProduct(gp.colwise() - row_dot) * inv_sqrt;
            gq.middleCols(h * hd, hd).noalias() = gs * kv.middleCols(h * hd, hd);
            gk.middleCols(h * hd, hd).noalias() = gs.transpose() * qv.middleCols(h * hd, hd);
        }
        tp.accumulate(q, gq);
        tp.accumulate(k, gk);
        tp.accumulate(v, gv);
    });
}

Var mse(Tape& t, Var pred, const Mat& target) {
    const Mat& p = t.value(pred);
    require(p.rows() == target.rows() && p.cols() == target.cols(), "mse: shapes differ");
    Mat out(1, 1);
    out(0, 0) = (p - target).squaredNorm() / static_cast<double>(p.size());
    auto target_c = std::make_shared<Mat>(target);
    const Var in[] = {pred};
    return t.record(std::move(out), in, [pred, target_c](Tape& tp, int self) {
        const Mat& p = tp.value(pred);
        const double g = tp.upstream(self)(0, 0);
        tp.accumulate(pred, (p - *target_c) * (2.0 * g / static_cast<double>(p.size())));
    });
}

}  // namespace designdit::ad
