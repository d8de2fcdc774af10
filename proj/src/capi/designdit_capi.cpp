// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#include "designdit/designdit.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include "designdit/checkpoint.hpp"
#include "designdit/conditioning.hpp"
#include "designdit/dataset.hpp"
#include "designdit/error.hpp"
#include "designdit/flow.hpp"
#include "designdit/metrics.hpp"
#include "designdit/run_config.hpp"

using namespace designdit;
using nlohmann::json;

struct ddt_sample {
    DesignSample sample;
};

struct ddt_model {
    RunConfig config;
    std::unique_ptr<Model> model;
};

namespace {

thread_local std::string g_last_error;

struct Interrupted {};

ddt_status status_of(ErrorCode c) {
    switch (c) {
    case ErrorCode::TooManyElements: return DDT_ERR_TOO_MANY_ELEMENTS;
    case ErrorCode::DescriptionTooLong: return DDT_ERR_DESCRIPTION_TOO_LONG;
    case ErrorCode::DegenerateBox: return DDT_ERR_DEGENERATE_BOX;
    case ErrorCode::OutOfRange: return DDT_ERR_OUT_OF_RANGE;
    case ErrorCode::EmptyText: return DDT_ERR_EMPTY_TEXT;
    case ErrorCode::PlacementOutOfBounds: return DDT_ERR_PLACEMENT_OUT_OF_BOUNDS;
    case ErrorCode::DimensionMismatch: return DDT_ERR_DIMENSION_MISMATCH;
    case ErrorCode::UnknownRegion: return DDT_ERR_UNKNOWN_REGION;
    case ErrorCode::ShapeMismatch: return DDT_ERR_SHAPE_MISMATCH;
    case ErrorCode::NonFiniteLoss: return DDT_ERR_NON_FINITE_LOSS;
    case ErrorCode::PlacementFailed: return DDT_ERR_PLACEMENT_FAILED;
    case ErrorCode::UnsupportedGlyph: return DDT_ERR_UNSUPPORTED_GLYPH;
    case ErrorCode::SchemaViolation: return DDT_ERR_SCHEMA_VIOLATION;
    case ErrorCode::UnknownColorWord: return DDT_ERR_UNKNOWN_COLOR_WORD;
    case ErrorCode::IoError: return DDT_ERR_IO;
    case ErrorCode::InvalidConfig: return DDT_ERR_INVALID_CONFIG;
    }
    return DDT_ERR_INTERNAL;
}

ddt_status fail(ddt_status s, std::string msg) {
    g_last_error = std::move(msg);
    return s;
}

template <typename F>
ddt_status guarded(F&& f) {
    g_last_error.clear();
    try {
        f();
        return DDT_OK;
    } catch (const Error& e) {
        return fail(status_of(e.code()), e.what());
    } catch (const json::exception& e) {
        return fail(DDT_ERR_SCHEMA_VIOLATION, e.what());
    } catch (const std::bad_alloc&) {
        return fail(DDT_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(DDT_ERR_INTERNAL, e.what());
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void require(bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidConfig, what);
}

RunConfig parse_config(const char* text) {
    if (!text || !*text) return RunConfig{};
    const json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) raise(ErrorCode::InvalidConfig, "config is not valid JSON");
    return run_config_from_json(j);
}

MaskToggles toggles_of(const RunConfig& c) { return c.attention; }

}  // namespace

extern "C" {

const char* ddt_last_error(void) { return g_last_error.c_str(); }

const char* ddt_version(void) { return "0.1.0"; }

void ddt_string_free(char* s) { std::free(s); }

ddt_status ddt_config_resolve(const char* config_path, const char* const* overrides, size_t n_overrides,
                              char** out_json) {
    if (!out_json || (n_overrides && !overrides)) return fail(DDT_ERR_INVALID_ARGUMENT, "null output or override list");
    return guarded([&] {
        std::vector<std::string> ov;
        for (size_t i = 0; i < n_overrides; ++i) {
            require(overrides[i] != nullptr, "null override");
            ov.emplace_back(overrides[i]);
        }
        std::optional<std::filesystem::path> file;
        if (config_path && *config_path) file = config_path;
        *out_json = dup_string(to_json(resolve_run_config(file, ov)).dump(2));
    });
}

ddt_status ddt_config_apply(const char* config_json, const char* const* overrides, size_t n_overrides,
                            char** out_json) {
    if (!out_json || (n_overrides && !overrides)) return fail(DDT_ERR_INVALID_ARGUMENT, "null output or override list");
    return guarded([&] {
        json j = to_json(parse_config(config_json));
        for (size_t i = 0; i < n_overrides; ++i) {
            require(overrides[i] != nullptr, "null override");
            apply_override(j, overrides[i]);
        }
        *out_json = dup_string(to_json(run_config_from_json(j)).dump(2));
    });
}

ddt_status ddt_config_get_int(const char* config_json, const char* key, int64_t* out) {
    if (!key || !out) return fail(DDT_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        const json j = to_json(parse_config(config_json));
        const json* node = &j;
        std::string path(key);
        std::size_t start = 0;
        while (true) {
            const auto dot = path.find('.', start);
            const std::string k = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (!node->is_object() || !node->contains(k)) raise(ErrorCode::InvalidConfig, "unknown config key '" + path + "'");
            node = &(*node)[k];
            if (dot == std::string::npos) break;
            start = dot + 1;
        }
        if (!node->is_number_integer()) raise(ErrorCode::InvalidConfig, "config key '" + path + "' is not an integer");
        *out = node->get<int64_t>();
    });
}

ddt_status ddt_dataset_generate(const char* config_json, const char* out_dir, int count, int jobs) {
    if (!out_dir) return fail(DDT_ERR_INVALID_ARGUMENT, "out_dir is null");
    return guarded([&] {
        const RunConfig c = parse_config(config_json);
        DatasetSpec spec{c.dataset.seed, count < 0 ? c.dataset.count : count, c.dataset.limits};
        generate_dataset(out_dir, spec, jobs < 1 ? 1 : jobs);
    });
}

ddt_status ddt_sample_load(const char* path, ddt_sample** out) {
    if (!path || !out) return fail(DDT_ERR_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    return guarded([&] {
        auto s = std::make_unique<ddt_sample>();
        s->sample = load_sample(path);
        *out = s.release();
    });
}

void ddt_sample_free(ddt_sample* sample) { delete sample; }

ddt_status ddt_sample_inspect(const ddt_sample* sample, const char* config_json, char** out_json) {
    if (!sample || !out_json) return fail(DDT_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        const RunConfig c = parse_config(config_json);
        const DesignSample& s = sample->sample;
        const ModelInputs in = prepare_inputs(c.model, s.global_prompt, s.layout, s.condition, s.width(), s.height(),
                                              toggles_of(c));
        json j;
        j["sample_id"] = s.sample_id;
        j["canvas"] = {{"w", s.width()}, {"h", s.height()}};
        j["prompt_tokens_raw"] = split_tokens(s.global_prompt).size();
        j["tokens"] = {{"layout", in.spec.count(Modality::Layout)},
                       {"prompt", in.spec.count(Modality::Prompt)},
                       {"image", in.spec.count(Modality::Image)},
                       {"subject", in.spec.count(Modality::Subject)},
                       {"total", in.spec.size()}};
        j["segments"] = json::array();
        for (Modality m : {Modality::Layout, Modality::Prompt, Modality::Image, Modality::Subject}) {
            const Segment seg = in.spec.segment(m);
            j["segments"].push_back({{"modality", to_string(m)}, {"offset", seg.offset}, {"length", seg.length}});
        }
        j["image_grid"] = {in.spec.image_grid.rows, in.spec.image_grid.cols};
        j["condition_grid"] = {in.spec.condition_grid.rows, in.spec.condition_grid.cols};
        j["layout_elements"] = s.layout.elements.size();
        j["subjects"] = s.condition.placements.size();
        const double n = static_cast<double>(in.mask.size());
        j["mask_density"] = n > 0 ? static_cast<double>(in.mask.allowed_count()) / (n * n) : 1.0;
        *out_json = dup_string(j.dump(2));
    });
}

ddt_status ddt_mask_dump(const ddt_sample* sample, const char* config_json, int layout_mask, int subject_mask,
                         const char* out_pgm) {
    if (!sample || !out_pgm) return fail(DDT_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        const RunConfig c = parse_config(config_json);
        const DesignSample& s = sample->sample;
        const ModelInputs in = prepare_inputs(c.model, s.global_prompt, s.layout, s.condition, s.width(), s.height(),
                                              {layout_mask != 0, subject_mask != 0});
        dump_mask_pgm(in.mask, out_pgm);
    });
}

ddt_status ddt_train(const char* config_json, const char* data_dir, const char* out_ckpt, const char* resume_ckpt,
                     const char* log_path, ddt_progress_fn progress, void* user) {
    if (!data_dir || !out_ckpt) return fail(DDT_ERR_INVALID_ARGUMENT, "data_dir and out_ckpt are required");
    bool interrupted = false;
    const ddt_status st = guarded([&] {
        const RunConfig c = parse_config(config_json);
        std::vector<TrainingSample> samples;
        const auto dirs = list_samples(data_dir);
        if (dirs.empty()) raise(ErrorCode::IoError, "no samples under '" + std::string(data_dir) + "'");
        for (std::size_t i = 0; i < dirs.size(); ++i) {
            const DesignSample s = load_sample(dirs[i], {c.model.max_layouts, c.model.max_desc_tokens});
            const std::pair<int, int> size{s.width(), s.height()};
            if (std::find(c.training.buckets.begin(), c.training.buckets.end(), size) == c.training.buckets.end()) {
                raise(ErrorCode::InvalidConfig, "sample '" + dirs[i].string() + "' is " + std::to_string(size.first) + "x" +
                                                    std::to_string(size.second) + ", not in training.buckets");
            }
            samples.push_back(make_training_sample(c.model, i, s.global_prompt, s.layout, s.condition, s.target,
                                                   toggles_of(c)));
        }

        std::unique_ptr<Model> model;
        TrainState state;
        if (resume_ckpt && *resume_ckpt) {
            const CheckpointData ck = read_checkpoint(resume_ckpt);
            const RunConfig saved = run_config_from_json(ck.config);
            if (!(saved.model == c.model)) raise(ErrorCode::InvalidConfig, "model config differs from the resumed checkpoint");
            model = std::make_unique<Model>(c.model, params_from_checkpoint(ck));
            state = train_state_from_checkpoint(*model, ck);
        } else {
            model = std::make_unique<Model>(c.model, c.training.seed);
            state = init_train_state(*model, c.training.seed);
        }

        std::ofstream log;
        if (log_path && *log_path) {
            log.open(log_path, std::ios::app);
            if (!log) raise(ErrorCode::IoError, "cannot open log '" + std::string(log_path) + "'");
        }
        TrainOptions opt;
        opt.steps = c.training.steps;
        opt.batch_size = c.training.batch;
        opt.adam.lr = c.training.lr;
        opt.adam.weight_decay = c.training.weight_decay;
        opt.adam.clip_norm = c.training.clip_norm;
        opt.trainable = c.training.trainable;
        opt.jobs = c.training.jobs;
        opt.on_step = [&](const TrainLogRecord& r) {
            if (log.is_open()) log << to_ndjson(r) << '\n' << std::flush;
            if (progress && progress(r.step, r.loss, r.wallclock_ms, user) != 0) throw Interrupted{};
        };
        try {
            train(*model, state, samples, opt);
        } catch (const Interrupted&) {
            interrupted = true;
        }
        write_checkpoint(out_ckpt, make_checkpoint(*model, &state, to_json(c)));
    });
    if (st == DDT_OK && interrupted) return fail(DDT_ERR_INTERRUPTED, "training stopped by the progress callback");
    return st;
}

ddt_status ddt_model_load(const char* ckpt_path, ddt_model** out) {
    if (!ckpt_path || !out) return fail(DDT_ERR_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    return guarded([&] {
        const CheckpointData ck = read_checkpoint(ckpt_path);
        auto m = std::make_unique<ddt_model>();
        m->config = run_config_from_json(ck.config);
        m->model = std::make_unique<Model>(m->config.model, params_from_checkpoint(ck));
        *out = m.release();
    });
}

void ddt_model_free(ddt_model* model) { delete model; }

ddt_status ddt_model_config(const ddt_model* model, char** out_json) {
    if (!model || !out_json) return fail(DDT_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] { *out_json = dup_string(to_json(model->config).dump(2)); });
}

ddt_status ddt_model_sample(const ddt_model* model, const ddt_sample* sample, uint64_t seed, int steps,
                            const char* out_png) {
    if (!model || !sample || !out_png) return fail(DDT_ERR_INVALID_ARGUMENT, "null argument");
    if (steps < 1) return fail(DDT_ERR_INVALID_ARGUMENT, "steps must be at least 1");
    return guarded([&] {
        const DesignSample& s = sample->sample;
        const ModelInputs in = prepare_inputs(model->config.model, s.global_prompt, s.layout, s.condition, s.width(),
                                              s.height(), toggles_of(model->config));
        write_png(sample_image(*model->model, in, steps, seed), out_png);
    });
}

ddt_status ddt_evaluate(const ddt_sample* sample, const char* generated_png, const char* detections_path,
                        const char* out_report, char** out_json) {
    if (!sample || !generated_png) return fail(DDT_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        const Image generated = read_png(generated_png);
        std::vector<DetectedText> det;
        if (detections_path && *detections_path) {
            std::ifstream in(detections_path, std::ios::binary);
            if (!in) raise(ErrorCode::IoError, "cannot open detections '" + std::string(detections_path) + "'");
            const json j = json::parse(in, nullptr, false);
            if (j.is_discarded()) raise(ErrorCode::SchemaViolation, "detections file is not valid JSON");
            det = detections_from_json(j);
        } else {
            det = detections_from_sample(sample->sample);
        }
        const MetricReport r = evaluate_generation(sample->sample, generated, StubEmbeddingOracle{}, det);
        const std::string text = to_json(r).dump(2);
        if (out_report && *out_report) {
            std::ofstream out(out_report, std::ios::binary | std::ios::trunc);
            if (!out) raise(ErrorCode::IoError, "cannot write '" + std::string(out_report) + "'");
            out << text << '\n';
        }
        if (out_json) *out_json = dup_string(text);
    });
}

}  // extern "C"
