// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#include "designdit/run_config.hpp"

#include <fstream>
#include <set>

#include "designdit/error.hpp"

namespace designdit {

using nlohmann::json;

std::string_view to_string(TrainableSet s) { return s == TrainableSet::All ? "all" : "adapters"; }

namespace {

// Reads known keys from an object and rejects anything else.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) raise(ErrorCode::InvalidConfig, where() + " must be an object");
    }
    ~Reader() noexcept(false) {
        if (std::uncaught_exceptions()) return;
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.contains(k)) raise(ErrorCode::InvalidConfig, "unknown key '" + path_ + (path_.empty() ? "" : ".") + k + "'");
        }
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!it->is_boolean()) throw std::invalid_argument("expected a boolean");
            } else if constexpr (std::is_integral_v<T>) {
                if (!it->is_number_integer()) throw std::invalid_argument("expected an integer");
                if constexpr (std::is_unsigned_v<T>) {
                    if (it->is_number_integer() && !it->is_number_unsigned() && it->template get<std::int64_t>() < 0) {
                        throw std::invalid_argument("expected a non-negative integer");
                    }
                }
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!it->is_number()) throw std::invalid_argument("expected a number");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!it->is_string()) throw std::invalid_argument("expected a string");
            }
            out = it->template get<T>();
        } catch (const std::exception& e) {
            raise(ErrorCode::InvalidConfig, where(key) + ": " + e.what());
        }
    }

    const json* child(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    std::string where(const char* key = nullptr) const {
        std::string p = path_.empty() ? std::string("config") : path_;
        if (key) p = (path_.empty() ? "" : path_ + ".") + key;
        return "'" + p + "'";
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

std::vector<std::pair<int, int>> read_sizes(const json& j, const std::string& where) {
    std::vector<std::pair<int, int>> out;
    if (!j.is_array()) raise(ErrorCode::InvalidConfig, "'" + where + "' must be a list of [width, height]");
    for (const auto& e : j) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
            raise(ErrorCode::InvalidConfig, "'" + where + "' entries must be [width, height]");
        }
        out.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    return out;
}

CountRange read_range(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
        raise(ErrorCode::InvalidConfig, "'" + where + "' must be [min, max]");
    }
    return {j[0].get<int>(), j[1].get<int>()};
}

json sizes_json(const std::vector<std::pair<int, int>>& s) {
    json j = json::array();
    for (auto [w, h] : s) j.push_back({w, h});
    return j;
}

}  // namespace

void RunConfig::validate() const {
    model.validate();
    auto bad = [](const std::string& what) { raise(ErrorCode::InvalidConfig, what); };
    if (!(training.lr >= 0.0)) bad("training.lr must be non-negative");
    if (training.batch < 1) bad("training.batch must be positive");
    if (training.jobs < 1) bad("training.jobs must be positive");
    if (!(training.weight_decay >= 0.0)) bad("training.weight_decay must be non-negative");
    if (!(training.clip_norm >= 0.0)) bad("training.clip_norm must be non-negative");
    for (auto [w, h] : training.buckets) {
        if (w <= 0 || h <= 0 || w % model.patch_size || h % model.patch_size) bad("training.buckets must be multiples of the patch size");
    }
    if (sampling.steps < 1) bad("sampling.steps must be positive");
    if (dataset.count < 0) bad("dataset.count must be non-negative");
    auto range = [&](const CountRange& r, const char* name) {
        if (r.min < 0 || r.max < r.min) bad(std::string("dataset.") + name + " must be [min, max] with 0 <= min <= max");
    };
    range(dataset.limits.subjects, "subjects");
    range(dataset.limits.secondary, "secondary");
    range(dataset.limits.textual, "textual");
    if (dataset.limits.secondary.max + dataset.limits.textual.max > model.max_layouts) {
        bad("dataset layouts can exceed model.max_layouts");
    }
    if (dataset.limits.sizes.empty()) bad("dataset.sizes must not be empty");
    for (auto [w, h] : dataset.limits.sizes) {
        if (w <= 0 || h <= 0 || w % (2 * model.patch_size) || h % (2 * model.patch_size)) {
            bad("dataset.sizes must be multiples of twice the patch size");
        }
    }
}

RunConfig run_config_from_json(const json& j) {
    RunConfig c;
    {
        Reader r(j, "");
        if (const json* m = r.child("model")) {
            Reader rm(*m, "model");
            rm.get("d_model", c.model.d_model);
            rm.get("n_heads", c.model.n_heads);
            rm.get("n_blocks", c.model.n_blocks);
            rm.get("patch_size", c.model.patch_size);
            rm.get("n_freq", c.model.n_freq);
            rm.get("lora_rank", c.model.lora_rank);
            rm.get("lora_alpha", c.model.lora_alpha);
            rm.get("max_layouts", c.model.max_layouts);
            rm.get("max_desc_tokens", c.model.max_desc_tokens);
            rm.get("prompt_cap", c.model.prompt_cap);
            rm.get("layout_encoder", c.model.layout_encoder);
            rm.get("rope_base", c.model.rope_base);
            rm.get("text_salt", c.model.text_salt);
        }
        if (const json* a = r.child("attention")) {
            Reader ra(*a, "attention");
            ra.get("layout_mask", c.attention.layout_mask);
            ra.get("subject_mask", c.attention.subject_mask);
        }
        if (const json* t = r.child("training")) {
            Reader rt(*t, "training");
            rt.get("lr", c.training.lr);
            rt.get("steps", c.training.steps);
            rt.get("batch", c.training.batch);
            rt.get("seed", c.training.seed);
            if (const json* b = rt.child("buckets")) c.training.buckets = read_sizes(*b, "training.buckets");
            std::string trainable(to_string(c.training.trainable));
            rt.get("trainable", trainable);
            if (trainable == "all") {
                c.training.trainable = TrainableSet::All;
            } else if (trainable == "adapters") {
                c.training.trainable = TrainableSet::Adapters;
            } else {
                raise(ErrorCode::InvalidConfig, "'training.trainable' must be \"all\" or \"adapters\"");
            }
            rt.get("weight_decay", c.training.weight_decay);
            rt.get("clip_norm", c.training.clip_norm);
            rt.get("jobs", c.training.jobs);
        }
        if (const json* d = r.child("dataset")) {
            Reader rd(*d, "dataset");
            rd.get("seed", c.dataset.seed);
            rd.get("count", c.dataset.count);
            if (const json* x = rd.child("subjects")) c.dataset.limits.subjects = read_range(*x, "dataset.subjects");
            if (const json* x = rd.child("secondary")) c.dataset.limits.secondary = read_range(*x, "dataset.secondary");
            if (const json* x = rd.child("textual")) c.dataset.limits.textual = read_range(*x, "dataset.textual");
            if (const json* x = rd.child("sizes")) c.dataset.limits.sizes = read_sizes(*x, "dataset.sizes");
        }
        if (const json* s = r.child("sampling")) {
            Reader rs(*s, "sampling");
            rs.get("steps", c.sampling.steps);
            rs.get("seed", c.sampling.seed);
        }
        if (const json* p = r.child("paths")) {
            Reader rp(*p, "paths");
            rp.get("data", c.paths.data);
            rp.get("checkpoint", c.paths.checkpoint);
            rp.get("log", c.paths.log);
        }
    }
    c.validate();
    return c;
}

json to_json(const RunConfig& c) {
    const auto& m = c.model;
    const auto& l = c.dataset.limits;
    return {
        {"model",
         {{"d_model", m.d_model}, {"n_heads", m.n_heads}, {"n_blocks", m.n_blocks}, {"patch_size", m.patch_size},
          {"n_freq", m.n_freq}, {"lora_rank", m.lora_rank}, {"lora_alpha", m.lora_alpha},
          {"max_layouts", m.max_layouts}, {"max_desc_tokens", m.max_desc_tokens}, {"prompt_cap", m.prompt_cap},
          {"layout_encoder", m.layout_encoder}, {"rope_base", m.rope_base}, {"text_salt", m.text_salt}}},
        {"attention", {{"layout_mask", c.attention.layout_mask}, {"subject_mask", c.attention.subject_mask}}},
        {"training",
         {{"lr", c.training.lr}, {"steps", c.training.steps}, {"batch", c.training.batch}, {"seed", c.training.seed},
          {"buckets", sizes_json(c.training.buckets)}, {"trainable", to_string(c.training.trainable)},
          {"weight_decay", c.training.weight_decay}, {"clip_norm", c.training.clip_norm}, {"jobs", c.training.jobs}}},
        {"dataset",
         {{"seed", c.dataset.seed}, {"count", c.dataset.count}, {"subjects", {l.subjects.min, l.subjects.max}},
          {"secondary", {l.secondary.min, l.secondary.max}}, {"textual", {l.textual.min, l.textual.max}},
          {"sizes", sizes_json(l.sizes)}}},
        {"sampling", {{"steps", c.sampling.steps}, {"seed", c.sampling.seed}}},
        {"paths", {{"data", c.paths.data}, {"checkpoint", c.paths.checkpoint}, {"log", c.paths.log}}},
    };
}

void apply_override(json& j, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        raise(ErrorCode::InvalidConfig, "override '" + std::string(assignment) + "' must look like key.path=value");
    }
    const std::string path(assignment.substr(0, eq));
    const std::string text(assignment.substr(eq + 1));
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    json* node = &j;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!node->is_object() || !node->contains(key)) raise(ErrorCode::InvalidConfig, "unknown config key '" + path + "'");
        node = &(*node)[key];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    *node = std::move(value);
}

RunConfig resolve_run_config(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides) {
    RunConfig c;
    if (file) {
        std::ifstream in(*file, std::ios::binary);
        if (!in) raise(ErrorCode::IoError, "cannot open config '" + file->string() + "'");
        const json j = json::parse(in, nullptr, false);
        if (j.is_discarded()) raise(ErrorCode::InvalidConfig, "'" + file->string() + "' is not valid JSON");
        c = run_config_from_json(j);
    }
    if (overrides.empty()) return c;
    json j = to_json(c);
    for (const auto& o : overrides) apply_override(j, o);
    return run_config_from_json(j);
}

}  // namespace designdit
