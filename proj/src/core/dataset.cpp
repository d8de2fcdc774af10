// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#include "designdit/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "designdit/encoders.hpp"
#include "designdit/error.hpp"
#include "designdit/font.hpp"
#include "designdit/rng.hpp"
#include "json.hpp"

namespace designdit {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------

const std::vector<std::pair<std::string, Rgb>>& color_palette() {
    static const std::vector<std::pair<std::string, Rgb>> palette = {
        {"red", {220, 40, 40}},     {"green", {40, 170, 60}},   {"blue", {40, 80, 220}},
        {"yellow", {240, 210, 40}}, {"orange", {240, 140, 30}}, {"purple", {140, 60, 190}},
        {"cyan", {40, 200, 210}},   {"magenta", {220, 50, 180}}, {"white", {255, 255, 255}},
        {"black", {0, 0, 0}},       {"pink", {250, 160, 190}},  {"brown", {130, 80, 40}},
    };
    return palette;
}

Rgb color_by_name(std::string_view name) {
    for (const auto& [n, c] : color_palette()) {
        if (n == name) return c;
    }
    raise(ErrorCode::UnknownColorWord, "unknown color word '" + std::string(name) + "'");
}

std::string_view to_string(Shape s) {
    switch (s) {
    case Shape::Circle: return "circle";
    case Shape::Square: return "square";
    case Shape::Triangle: return "triangle";
    }
    return "?";
}

std::optional<Shape> shape_from_string(std::string_view s) {
    for (Shape v : {Shape::Circle, Shape::Square, Shape::Triangle}) {
        if (to_string(v) == s) return v;
    }
    return std::nullopt;
}

bool shape_contains(Shape s, int x, int y, int w, int h) noexcept {
    if (x < 0 || y < 0 || x >= w || y >= h) return false;
    // Doubled coordinates put pixel centers on integers.
    const long long dx = 2LL * x + 1 - w;
    const long long dy = 2LL * y + 1 - h;
    switch (s) {
    case Shape::Square: return true;
    case Shape::Circle: return dx * dx * h * h + dy * dy * w * w <= 1LL * w * w * h * h;
    case Shape::Triangle: return (dx < 0 ? -dx : dx) * h <= (y + 1LL) * w;  // apex at the top
    }
    return false;
}

std::string_view to_string(BackgroundStyle b) {
    switch (b) {
    case BackgroundStyle::Solid: return "solid";
    case BackgroundStyle::VerticalGradient: return "vertical-gradient";
    case BackgroundStyle::Checker: return "checker";
    }
    return "?";
}

const KeywordBanks& default_banks() {
    static const KeywordBanks banks{
        {"stars", "moon", "flowers", "leaves", "waves", "mountains", "coffee", "music", "summer", "winter",
         "festival", "travel", "books", "sports", "ocean", "city", "garden", "party", "sunrise", "autumn"},
        {"minimalist", "retro", "modern", "playful", "elegant", "bold", "vintage", "geometric"},
        {"SALE", "NEW", "OPEN", "SHOP", "FRESH", "BEST", "DEAL", "HOT", "JOIN", "LIVE",
         "FUN", "WIN", "GO", "COOL", "2026", "TOP", "BIG", "ART", "JAZZ", "CAFE"},
    };
    return banks;
}

namespace {

template <typename T>
const T& pick(SplitMix64& rng, const std::vector<T>& v) {
    return v[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(v.size()) - 1))];
}

int draw(SplitMix64& rng, int lo, int hi) { return static_cast<int>(rng.uniform_int(lo, hi)); }

bool collides(const PixelRect& r, const std::vector<PixelRect>& taken) {
    return std::any_of(taken.begin(), taken.end(), [&](const PixelRect& o) { return r.overlaps(o); });
}

void check_range(const CountRange& r, const char* what) {
    if (r.min < 0 || r.max < r.min) raise(ErrorCode::InvalidConfig, std::string("invalid count range for ") + what);
}

}  // namespace

ThemeSpec sample_theme(std::uint64_t seed, const KeywordBanks& banks, const ThemeLimits& limits) {
    if (banks.keywords.empty() || banks.styles.empty() || banks.words.empty()) {
        raise(ErrorCode::InvalidConfig, "keyword banks must be non-empty");
    }
    check_range(limits.subjects, "subjects");
    check_range(limits.secondary, "secondary elements");
    check_range(limits.textual, "textual elements");
    if (limits.sizes.empty()) raise(ErrorCode::InvalidConfig, "at least one target size is required");
    for (auto [w, h] : limits.sizes) {
        if (w <= 0 || h <= 0 || w % 2 || h % 2) raise(ErrorCode::InvalidConfig, "target sizes must be positive and even");
    }

    SplitMix64 rng(derive_seed(seed, fnv1a64("theme")));
    ThemeSpec t;
    t.seed = seed;
    const int n_kw = std::min<int>(draw(rng, 2, 3), static_cast<int>(banks.keywords.size()));
    std::vector<std::string> pool = banks.keywords;
    for (int i = 0; i < n_kw; ++i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1));
        t.keywords.push_back(pool[j]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
    }
    t.style = pick(rng, banks.styles);
    t.n_subjects = draw(rng, limits.subjects.min, limits.subjects.max);
    t.n_secondary = draw(rng, limits.secondary.min, limits.secondary.max);
    t.n_textual = draw(rng, limits.textual.min, limits.textual.max);
    t.background = static_cast<BackgroundStyle>(draw(rng, 0, 2));
    const auto size = pick(rng, limits.sizes);
    t.width = size.first;
    t.height = size.second;
    return t;
}

LayoutProtocol generate_layout_protocol(const ThemeSpec& theme, std::uint64_t seed, const KeywordBanks& banks) {
    if (banks.words.empty()) raise(ErrorCode::InvalidConfig, "the word bank is empty");
    SplitMix64 rng(derive_seed(seed, fnv1a64("protocol")));
    LayoutProtocol p;
    p.width = theme.width;
    p.height = theme.height;
    p.background = std::string(to_string(theme.background)) + " background";
    std::vector<PixelRect> taken;
    for (int i = 0; i < theme.n_textual; ++i) {
        TextEntry e;
        e.text = pick(rng, banks.words);
        if (rng.uniform() < 0.3) e.text += " " + pick(rng, banks.words);
        e.fill = pick(rng, color_palette()).second;
        bool placed = false;
        for (int scale = 2; scale >= 1 && !placed; --scale) {
            const int w = font::text_width(e.text, scale) + 2;
            const int h = font::text_height(scale) + 2;
            if (w > p.width || h > p.height) continue;
            for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
                const int x0 = draw(rng, 0, p.width - w);
                const int y0 = draw(rng, 0, p.height - h);
                const PixelRect r{x0, y0, x0 + w, y0 + h};
                if (collides(r, taken)) continue;
                e.rect = r;
                e.scale = scale;
                placed = true;
            }
        }
        if (!placed) raise(ErrorCode::PlacementFailed, "no room for text '" + e.text + "'");
        taken.push_back(e.rect);
        p.texts.push_back(std::move(e));
    }
    return p;
}

Image render_text_layer(const LayoutProtocol& protocol) {
    Image layer(protocol.width, protocol.height, {0, 0, 0, 0});
    for (const auto& e : protocol.texts) {
        const int s = e.scale;
        const int ox = e.rect.x0 + 1;
        const int oy = e.rect.y0 + (e.rect.height() - font::text_height(s)) / 2;
        for (std::size_t i = 0; i < e.text.size(); ++i) {
            const font::Glyph& g = font::glyph(e.text[i]);
            const int gx = ox + static_cast<int>(i) * font::kAdvance * s;
            for (int y = 0; y < font::kGlyphH * s; ++y) {
                for (int x = 0; x < font::kGlyphW * s; ++x) {
                    if (!g.on(x / s, y / s)) continue;
                    const int px = gx + x, py = oy + y;
                    if (px < e.rect.x0 || px >= e.rect.x1 || py < e.rect.y0 || py >= e.rect.y1) continue;
                    layer.set(px, py, {e.fill.r, e.fill.g, e.fill.b, 255});
                }
            }
        }
    }
    return layer;
}

namespace {

struct SpriteStyle {
    const char* name;
    Rgb base;
};

constexpr SpriteStyle kSpriteHues[] = {
    {"teal", {0, 128, 128}},  {"coral", {255, 127, 80}}, {"olive", {128, 128, 0}},  {"violet", {148, 80, 211}},
    {"navy", {20, 30, 110}},  {"gold", {230, 180, 20}},  {"crimson", {180, 20, 60}}, {"lime", {140, 220, 50}},
};
constexpr const char* kPatterns[] = {"striped", "dotted", "checkered"};

Rgb shade(Rgb c, int delta) {
    auto f = [delta](std::uint8_t v) { return static_cast<std::uint8_t>(std::clamp(v + delta, 0, 255)); };
    return {f(c.r), f(c.g), f(c.b)};
}

Image make_sprite(int w, int h, Rgb base, int pattern) {
    Image img(w, h);
    const Rgb alt = shade(base, base.r + base.g + base.b > 384 ? -70 : 70);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            bool second = false;
            switch (pattern) {
            case 0: second = (x / 2) % 2 == 1; break;
            case 1: second = x % 3 == 1 && y % 3 == 1; break;
            default: second = ((x / 2) + (y / 2)) % 2 == 1; break;
            }
            const Rgb c = second ? alt : base;
            img.set(x, y, {c.r, c.g, c.b, 255});
        }
    }
    // One-pixel border so every sprite has a visible outline.
    const Rgb edge = shade(base, -90);
    for (int x = 0; x < w; ++x) {
        img.set(x, 0, {edge.r, edge.g, edge.b, 255});
        img.set(x, h - 1, {edge.r, edge.g, edge.b, 255});
    }
    for (int y = 0; y < h; ++y) {
        img.set(0, y, {edge.r, edge.g, edge.b, 255});
        img.set(w - 1, y, {edge.r, edge.g, edge.b, 255});
    }
    return img;
}

Rgb random_rgb(SplitMix64& rng) {
    return {static_cast<std::uint8_t>(draw(rng, 40, 215)), static_cast<std::uint8_t>(draw(rng, 40, 215)),
            static_cast<std::uint8_t>(draw(rng, 40, 215))};
}

// Rejection sampling; on exhaustion both sides shrink by `shrink` down to min_side.
PixelRect place_box(SplitMix64& rng, int canvas_w, int canvas_h, int w, int h, int min_side, int align,
                    const std::vector<PixelRect>& taken, const std::string& what) {
    while (true) {
        if (w <= canvas_w && h <= canvas_h) {
            for (int attempt = 0; attempt < 200; ++attempt) {
                const int x0 = draw(rng, 0, (canvas_w - w) / align) * align;
                const int y0 = draw(rng, 0, (canvas_h - h) / align) * align;
                const PixelRect r{x0, y0, x0 + w, y0 + h};
                if (!collides(r, taken)) return r;
            }
        }
        if (w <= min_side && h <= min_side) break;
        w = std::max(min_side, w - 2);
        h = std::max(min_side, h - 2);
    }
    raise(ErrorCode::PlacementFailed, "canvas too crowded for " + what);
}

}  // namespace

DesignSample compose_sample(const ThemeSpec& theme, const LayoutProtocol& protocol, std::uint64_t seed) {
    const int W = protocol.width, H = protocol.height;
    if (W != theme.width || H != theme.height || W % 2 || H % 2) {
        raise(ErrorCode::DimensionMismatch, "protocol canvas does not match the theme");
    }
    SplitMix64 rng(derive_seed(seed, fnv1a64("compose")));
    DesignSample s;
    s.seed = seed;
    char id[32];
    std::snprintf(id, sizeof id, "%016llx", static_cast<unsigned long long>(seed));
    s.sample_id = id;

    // Background.
    const Rgb c1 = random_rgb(rng), c2 = random_rgb(rng);
    s.target = Image(W, H);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            Rgb c = c1;
            if (theme.background == BackgroundStyle::VerticalGradient) {
                auto lerp = [&](int a, int b) { return static_cast<std::uint8_t>(a + (b - a) * y / std::max(1, H - 1)); };
                c = {lerp(c1.r, c2.r), lerp(c1.g, c2.g), lerp(c1.b, c2.b)};
            } else if (theme.background == BackgroundStyle::Checker) {
                c = ((x / 8 + y / 8) % 2) ? c2 : c1;
            }
            s.target.set(x, y, {c.r, c.g, c.b, 255});
        }
    }

    std::vector<PixelRect> taken;
    for (const auto& t : protocol.texts) taken.push_back(t.rect);

    // Subjects: even-aligned so that the half-resolution canvas copies them exactly.
    std::vector<int> hues(std::size(kSpriteHues));
    for (std::size_t i = 0; i < hues.size(); ++i) hues[i] = static_cast<int>(i);
    for (std::size_t i = hues.size(); i > 1; --i) {
        std::swap(hues[i - 1], hues[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    }
    std::vector<SubjectPlacement> placements;
    for (int k = 0; k < theme.n_subjects; ++k) {
        const int subject_id = k + 1;
        const int w = 2 * draw(rng, 6, 10), h = 2 * draw(rng, 6, 10);
        const PixelRect r = place_box(rng, W, H, w, h, 8, 2, taken, "subject " + std::to_string(subject_id));
        taken.push_back(r);
        const SpriteStyle& style = kSpriteHues[hues[static_cast<std::size_t>(k) % hues.size()]];
        const int pattern = k % 3;
        Image sprite = make_sprite(r.width() / 2, r.height() / 2, style.base, pattern);
        for (int y = r.y0; y < r.y1; ++y) {
            for (int x = r.x0; x < r.x1; ++x) s.target.set(x, y, sprite.at((x - r.x0) / 2, (y - r.y0) / 2));
        }
        placements.push_back({subject_id, std::move(sprite), from_pixels(r, W, H)});
        s.subject_descriptions.push_back(std::string(style.name) + " " + kPatterns[pattern] + " emblem");
    }
    s.condition = build_subject_canvas(placements, W / 2, H / 2);
    s.condition.placements = std::move(placements);

    // Secondary visual elements.
    for (int k = 0; k < theme.n_secondary; ++k) {
        const auto& [color_name, color] = pick(rng, color_palette());
        const Shape shape = static_cast<Shape>(draw(rng, 0, 2));
        const int w = draw(rng, 8, 16), h = draw(rng, 8, 16);
        const PixelRect r = place_box(rng, W, H, w, h, 4, 1, taken, "secondary element");
        taken.push_back(r);
        for (int y = r.y0; y < r.y1; ++y) {
            for (int x = r.x0; x < r.x1; ++x) {
                if (shape_contains(shape, x - r.x0, y - r.y0, r.width(), r.height())) {
                    s.target.set(x, y, {color.r, color.g, color.b, 255});
                }
            }
        }
        s.layout.elements.push_back(
            {ElementKind::SecondaryVisual, color_name + " " + std::string(to_string(shape)), from_pixels(r, W, H)});
    }

    // Text layer on top.
    const Image layer = render_text_layer(protocol);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) s.target.blend(x, y, layer.at(x, y));
    }
    for (const auto& t : protocol.texts) s.layout.elements.push_back({ElementKind::Textual, t.text, from_pixels(t.rect, W, H)});

    std::string kws;
    for (std::size_t i = 0; i < theme.keywords.size(); ++i) kws += (i ? ", " : "") + theme.keywords[i];
    s.global_prompt = "A " + theme.style + " design featuring " + kws + " with text elements.";
    return s;
}

DesignSample generate_sample(std::uint64_t seed, const KeywordBanks& banks, const ThemeLimits& limits) {
    constexpr int kRetries = 32;
    for (int attempt = 0; attempt < kRetries; ++attempt) {
        const std::uint64_t s = attempt == 0 ? seed : derive_seed(seed, fnv1a64("retry"), static_cast<std::uint64_t>(attempt));
        try {
            const ThemeSpec theme = sample_theme(s, banks, limits);
            const LayoutProtocol protocol = generate_layout_protocol(theme, s, banks);
            DesignSample out = compose_sample(theme, protocol, s);
            out.seed = seed;
            char id[32];
            std::snprintf(id, sizeof id, "%016llx", static_cast<unsigned long long>(seed));
            out.sample_id = id;
            return out;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::PlacementFailed) throw;
        }
    }
    raise(ErrorCode::PlacementFailed, "no feasible sample after " + std::to_string(kRetries) + " draws");
}

// ---------------------------------------------------------------------------

namespace {

json bbox_json(const BBox& b) { return json::array({b.x0, b.y0, b.x1, b.y1}); }

BBox bbox_from_json(const json& j) {
    if (!j.is_array() || j.size() != 4) raise(ErrorCode::SchemaViolation, "bbox must be [x0, y0, x1, y1]");
    BBox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    try {
        check_bbox(b);
    } catch (const Error& e) {
        raise(ErrorCode::SchemaViolation, std::string("invalid bbox: ") + e.what());
    }
    return b;
}

std::string subject_file(int id) { return "subject_" + std::to_string(id) + ".png"; }

}  // namespace

void persist_sample(const DesignSample& sample, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) raise(ErrorCode::IoError, "cannot create '" + dir.string() + "': " + ec.message());

    json m;
    m["sample_id"] = sample.sample_id;
    m["canvas"] = {{"w", sample.width()}, {"h", sample.height()}};
    m["global_prompt"] = sample.global_prompt;
    m["subjects"] = json::array();
    for (std::size_t i = 0; i < sample.condition.placements.size(); ++i) {
        const auto& p = sample.condition.placements[i];
        m["subjects"].push_back({{"id", p.subject_id},
                                 {"sprite_path", subject_file(p.subject_id)},
                                 {"bbox", bbox_json(p.bbox)},
                                 {"description", i < sample.subject_descriptions.size() ? sample.subject_descriptions[i] : ""}});
        write_png(p.pixels, dir / subject_file(p.subject_id));
    }
    m["layout"] = json::array();
    for (const auto& e : sample.layout.elements) {
        m["layout"].push_back({{"kind", to_string(e.kind)}, {"description", e.description}, {"bbox", bbox_json(e.bbox)}});
    }
    m["target_path"] = "target.png";
    m["condition_path"] = "condition.png";
    m["seed"] = sample.seed;

    write_png(sample.target, dir / "target.png");
    write_png(sample.condition.canvas, dir / "condition.png");
    std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorCode::IoError, "cannot write '" + (dir / "manifest.json").string() + "'");
    out << m.dump(2) << '\n';
    if (!out) raise(ErrorCode::IoError, "failed writing '" + (dir / "manifest.json").string() + "'");
}

DesignSample load_sample(const fs::path& dir, const LayoutLimits& limits) {
    const fs::path manifest = fs::is_directory(dir) ? dir / "manifest.json" : dir;
    const fs::path base = manifest.parent_path();
    std::ifstream in(manifest, std::ios::binary);
    if (!in) raise(ErrorCode::IoError, "cannot open '" + manifest.string() + "'");

    DesignSample s;
    json m;
    try {
        m = json::parse(in);
        s.sample_id = m.at("sample_id").get<std::string>();
        s.seed = m.at("seed").get<std::uint64_t>();
        s.global_prompt = m.at("global_prompt").get<std::string>();
        const int w = m.at("canvas").at("w").get<int>();
        const int h = m.at("canvas").at("h").get<int>();
        for (const auto& e : m.at("layout")) {
            s.layout.elements.push_back({element_kind_from_string(e.at("kind").get<std::string>()),
                                         e.at("description").get<std::string>(), bbox_from_json(e.at("bbox"))});
        }
        try {
            validate_layout(s.layout, limits);
        } catch (const Error& e) {
            raise(ErrorCode::SchemaViolation, std::string("layout: ") + e.what());
        }
        s.target = read_png(base / m.at("target_path").get<std::string>());
        if (s.target.width() != w || s.target.height() != h) {
            raise(ErrorCode::SchemaViolation, "target.png does not match the manifest canvas");
        }
        s.condition.canvas = read_png(base / m.at("condition_path").get<std::string>());
        for (const auto& sub : m.at("subjects")) {
            SubjectPlacement p;
            p.subject_id = sub.at("id").get<int>();
            p.bbox = bbox_from_json(sub.at("bbox"));
            p.pixels = read_png(base / sub.at("sprite_path").get<std::string>());
            s.condition.placements.push_back(std::move(p));
            s.subject_descriptions.push_back(sub.at("description").get<std::string>());
        }
    } catch (const json::exception& e) {
        raise(ErrorCode::SchemaViolation, "'" + manifest.string() + "': " + e.what());
    }
    return s;
}

std::uint64_t sample_seed(std::uint64_t dataset_seed, int index) noexcept {
    return derive_seed(dataset_seed, fnv1a64("sample"), static_cast<std::uint64_t>(index));
}

std::vector<fs::path> generate_dataset(const fs::path& out, const DatasetSpec& spec, int jobs) {
    if (spec.count < 0) raise(ErrorCode::InvalidConfig, "dataset count must be non-negative");
    std::vector<fs::path> dirs(static_cast<std::size_t>(spec.count));
    for (int i = 0; i < spec.count; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "sample_%05d", i);
        dirs[static_cast<std::size_t>(i)] = out / name;
    }
    auto work = [&](int i) {
        persist_sample(generate_sample(sample_seed(spec.seed, i), default_banks(), spec.limits), dirs[static_cast<std::size_t>(i)]);
    };
    const int workers = std::clamp(jobs, 1, std::max(1, spec.count));
    if (workers == 1) {
        for (int i = 0; i < spec.count; ++i) work(i);
        return dirs;
    }
    std::exception_ptr failure;
    std::mutex mu;
    {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (int i = w; i < spec.count; i += workers) {
                    try {
                        work(i);
                    } catch (...) {
                        std::lock_guard lock(mu);
                        if (!failure) failure = std::current_exception();
                        return;
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
    return dirs;
}

std::vector<fs::path> list_samples(const fs::path& root) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) raise(ErrorCode::IoError, "'" + root.string() + "' is not a directory");
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace designdit
