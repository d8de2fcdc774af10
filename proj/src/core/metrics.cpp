// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#include "designdit/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <tuple>

#include "designdit/error.hpp"

namespace designdit {

std::size_t levenshtein(std::string_view a, std::string_view b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

double ned(std::string_view a, std::string_view b) {
    const std::size_t n = std::max(a.size(), b.size());
    if (n == 0) return 1.0;
    return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(n);
}

std::vector<std::pair<std::size_t, std::size_t>> greedy_iou_pairs(std::span<const BBox> gt,
                                                                  std::span<const DetectedText> det) {
    struct Cand {
        double iou;
        std::size_t g, d;
    };
    std::vector<Cand> cands;
    for (std::size_t g = 0; g < gt.size(); ++g) {
        for (std::size_t d = 0; d < det.size(); ++d) {
            const double v = iou(gt[g], det[d].bbox);
            if (v > 0.0) cands.push_back({v, g, d});
        }
    }
    auto key = [&](const Cand& c) {
        const BBox& b = det[c.d].bbox;
        return std::make_tuple(-c.iou, c.g, b.x0, b.y0, b.x1, b.y1, std::string_view(det[c.d].text));
    };
    std::sort(cands.begin(), cands.end(), [&](const Cand& a, const Cand& b) { return key(a) < key(b); });
    std::vector<char> gt_used(gt.size(), 0), det_used(det.size(), 0);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (const Cand& c : cands) {
        if (gt_used[c.g] || det_used[c.d]) continue;
        gt_used[c.g] = det_used[c.d] = 1;
        pairs.emplace_back(c.g, c.d);
    }
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

std::string normalize_text(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (char ch : s) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out += ' ';
        pending_space = false;
        out += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    }
    return out;
}

namespace {

void require_aligned(std::span<const std::string> gt, std::span<const BBox> boxes) {
    if (gt.size() != boxes.size()) raise(ErrorCode::ShapeMismatch, "ground-truth strings and boxes differ in count");
}

}  // namespace

double sentence_accuracy(std::span<const std::string> gt, std::span<const DetectedText> det,
                         std::span<const BBox> gt_boxes) {
    require_aligned(gt, gt_boxes);
    if (gt.empty()) return 1.0;
    std::size_t correct = 0;
    for (auto [g, d] : greedy_iou_pairs(gt_boxes, det)) {
        if (normalize_text(gt[g]) == normalize_text(det[d].text)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(gt.size());
}

double spatial_iou_score(std::span<const BBox> gt, std::span<const BBox> det) {
    if (gt.empty()) return 1.0;
    std::vector<DetectedText> wrapped;
    for (const BBox& b : det) wrapped.push_back({"", b});
    double total = 0.0;
    for (auto [g, d] : greedy_iou_pairs(gt, wrapped)) total += iou(gt[g], det[d]);
    return total / static_cast<double>(gt.size());
}

double text_ned_score(std::span<const std::string> gt, std::span<const DetectedText> det,
                      std::span<const BBox> gt_boxes) {
    require_aligned(gt, gt_boxes);
    if (gt.empty()) return 1.0;
    double total = 0.0;
    for (auto [g, d] : greedy_iou_pairs(gt_boxes, det)) total += ned(normalize_text(gt[g]), normalize_text(det[d].text));
    return total / static_cast<double>(gt.size());
}

double m_dino(std::span<const double> scores) {
    double p = 1.0;
    for (double s : scores) p *= std::clamp(s, 0.0, 1.0);
    return p;
}

double region_color_score(const Image& image, const SemanticLayout& layout) {
    double total = 0.0;
    int n = 0;
    for (const auto& e : layout.elements) {
        if (e.kind != ElementKind::SecondaryVisual) continue;
        const auto words = split_tokens(e.description);
        if (words.empty()) raise(ErrorCode::UnknownColorWord, "secondary element without a color word");
        const Rgb declared = color_by_name(words[0]);
        const std::optional<Shape> shape = words.size() > 1 ? shape_from_string(words[1]) : std::nullopt;
        const PixelRect r = to_pixels(e.bbox, image.width(), image.height());
        long long sum[3] = {0, 0, 0};
        long long count = 0;
        for (int y = r.y0; y < r.y1; ++y) {
            for (int x = r.x0; x < r.x1; ++x) {
                if (shape && !shape_contains(*shape, x - r.x0, y - r.y0, r.width(), r.height())) continue;
                const Rgba c = image.at(x, y);
                sum[0] += c.r;
                sum[1] += c.g;
                sum[2] += c.b;
                ++count;
            }
        }
        double score = 0.0;
        if (count > 0) {
            const double dr = static_cast<double>(sum[0]) / count / 255.0 - declared.r / 255.0;
            const double dg = static_cast<double>(sum[1]) / count / 255.0 - declared.g / 255.0;
            const double db = static_cast<double>(sum[2]) / count / 255.0 - declared.b / 255.0;
            score = 1.0 - std::min(1.0, std::sqrt(dr * dr + dg * dg + db * db) / std::sqrt(3.0));
        }
        total += score;
        ++n;
    }
    return n ? total / n : 1.0;
}

RowVec StubEmbeddingOracle::embed(const Image& image, const PixelRect& region) const {
    const int x0 = std::clamp(region.x0, 0, image.width()), x1 = std::clamp(region.x1, 0, image.width());
    const int y0 = std::clamp(region.y0, 0, image.height()), y1 = std::clamp(region.y1, 0, image.height());
    if (x1 <= x0 || y1 <= y0) raise(ErrorCode::OutOfRange, "embedding region is empty");
    long long sum[3] = {0, 0, 0};
    long long hist[3][4] = {};
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            const Rgba c = image.at(x, y);
            const int v[3] = {c.r, c.g, c.b};
            for (int ch = 0; ch < 3; ++ch) {
                sum[ch] += v[ch];
                ++hist[ch][v[ch] / 64];
            }
        }
    }
    const double n = static_cast<double>(x1 - x0) * (y1 - y0);
    RowVec f(15);
    for (int ch = 0; ch < 3; ++ch) {
        f(ch) = static_cast<double>(sum[ch]) / (255.0 * n);
        for (int b = 0; b < 4; ++b) f(3 + ch * 4 + b) = static_cast<double>(hist[ch][b]) / n;
    }
    return f / f.norm();
}

double similarity(const RowVec& a, const RowVec& b) {
    if (a.size() != b.size()) raise(ErrorCode::ShapeMismatch, "descriptors differ in length");
    if (a == b) return 1.0;
    const double na = a.squaredNorm(), nb = b.squaredNorm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(a.dot(b) / std::sqrt(na * nb), 0.0, 1.0);
}

std::vector<DetectedText> detections_from_sample(const DesignSample& sample) {
    std::vector<DetectedText> out;
    for (const auto& e : sample.layout.elements) {
        if (e.kind == ElementKind::Textual) out.push_back({e.description, e.bbox});
    }
    return out;
}

MetricReport evaluate_generation(const DesignSample& sample, const Image& generated, const EmbeddingOracle& oracle,
                                 std::span<const DetectedText> detections) {
    if (generated.width() != sample.width() || generated.height() != sample.height()) {
        raise(ErrorCode::DimensionMismatch, "generated image does not match the target size");
    }
    MetricReport r;
    for (const auto& p : sample.condition.placements) {
        const RowVec ref = oracle.embed(p.pixels, {0, 0, p.pixels.width(), p.pixels.height()});
        const RowVec got = oracle.embed(generated, to_pixels(p.bbox, generated.width(), generated.height()));
        r.subject_scores.push_back(similarity(ref, got));
    }
    r.m_dino = m_dino(r.subject_scores);

    std::vector<std::string> texts;
    std::vector<BBox> boxes;
    for (const auto& e : sample.layout.elements) {
        if (e.kind != ElementKind::Textual) continue;
        texts.push_back(e.description);
        boxes.push_back(e.bbox);
    }
    std::vector<BBox> det_boxes;
    for (const auto& d : detections) det_boxes.push_back(d.bbox);
    r.spatial = spatial_iou_score(boxes, det_boxes);
    r.sentence_accuracy = sentence_accuracy(texts, detections, boxes);
    r.ned = text_ned_score(texts, detections, boxes);
    r.region_color = region_color_score(generated, sample.layout);
    return r;
}

nlohmann::json to_json(const MetricReport& r) {
    return {{"subject_scores", r.subject_scores}, {"m_dino", r.m_dino},   {"spatial", r.spatial},
            {"sentence_accuracy", r.sentence_accuracy}, {"ned", r.ned}, {"region_color", r.region_color}};
}

nlohmann::json detections_to_json(std::span<const DetectedText> det) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& d : det) j.push_back({{"text", d.text}, {"bbox", {d.bbox.x0, d.bbox.y0, d.bbox.x1, d.bbox.y1}}});
    return j;
}

std::vector<DetectedText> detections_from_json(const nlohmann::json& j) {
    std::vector<DetectedText> out;
    try {
        if (!j.is_array()) raise(ErrorCode::SchemaViolation, "detections must be a JSON array");
        for (const auto& d : j) {
            const auto& b = d.at("bbox");
            if (!b.is_array() || b.size() != 4) raise(ErrorCode::SchemaViolation, "detection bbox must be [x0, y0, x1, y1]");
            DetectedText t{d.at("text").get<std::string>(),
                           {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()}};
            try {
                check_bbox(t.bbox);
            } catch (const Error& e) {
                raise(ErrorCode::SchemaViolation, std::string("detection bbox: ") + e.what());
            }
            out.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::SchemaViolation, std::string("detections: ") + e.what());
    }
    return out;
}

}  // namespace designdit
