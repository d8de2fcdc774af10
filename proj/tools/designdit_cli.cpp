// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdint>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "designdit/designdit.h"

namespace {

constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

struct DomainFailure {
    ddt_status status;
    std::string message;
};

void check(ddt_status s) {
    if (s != DDT_OK) throw DomainFailure{s, ddt_last_error()};
}

std::string take(char* s) {
    std::string out = s ? s : "";
    ddt_string_free(s);
    return out;
}

struct SampleHandle {
    ddt_sample* p = nullptr;
    explicit SampleHandle(const std::string& path) { check(ddt_sample_load(path.c_str(), &p)); }
    ~SampleHandle() { ddt_sample_free(p); }
    SampleHandle(const SampleHandle&) = delete;
    SampleHandle& operator=(const SampleHandle&) = delete;
};

struct ModelHandle {
    ddt_model* p = nullptr;
    explicit ModelHandle(const std::string& path) { check(ddt_model_load(path.c_str(), &p)); }
    ~ModelHandle() { ddt_model_free(p); }
    ModelHandle(const ModelHandle&) = delete;
    ModelHandle& operator=(const ModelHandle&) = delete;
};

std::string resolve(const std::string& config, const std::vector<std::string>& sets) {
    std::vector<const char*> ptrs;
    for (const auto& s : sets) ptrs.push_back(s.c_str());
    char* out = nullptr;
    check(ddt_config_resolve(config.empty() ? nullptr : config.c_str(), ptrs.data(), ptrs.size(), &out));
    return take(out);
}

void print_config(const std::string& json) { std::cout << "resolved config:\n" << json << "\n"; }

int on_progress(std::uint64_t step, double loss, double ms, void*) {
    if (step == 1 || step % 100 == 0) {
        std::cout << "step " << step << " loss " << loss << " (" << static_cast<long long>(ms) << " ms)\n" << std::flush;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"designdit: layout- and subject-conditioned diffusion transformer toolkit"};
    app.set_version_flag("--version", std::string(ddt_version()));
    app.require_subcommand(1);
    app.fallthrough();

    std::string config;
    std::vector<std::string> sets;
    app.add_option("--config", config, "JSON run config")->check(CLI::ExistingFile);
    app.add_option("--set", sets, "Override a config key, e.g. --set training.lr=5e-5 (repeatable)");

    // dataset gen
    auto* dataset = app.add_subcommand("dataset", "Synthetic dataset tools");
    dataset->require_subcommand(1);
    auto* gen = dataset->add_subcommand("gen", "Generate annotated design samples");
    std::string gen_out;
    int gen_count = -1, gen_jobs = 1;
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--count", gen_count, "Number of samples (default: dataset.count)");
    gen->add_option("--jobs", gen_jobs, "Worker threads")->check(CLI::PositiveNumber);

    // train
    auto* train = app.add_subcommand("train", "Train on a generated dataset");
    std::string train_data, train_out, train_resume, train_log;
    train->add_option("--data", train_data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    train->add_option("--out", train_out, "Checkpoint to write")->required();
    train->add_option("--resume", train_resume, "Checkpoint to resume from")->check(CLI::ExistingFile);
    train->add_option("--log", train_log, "Append one JSON record per step to this file");

    // sample
    auto* sample = app.add_subcommand("sample", "Generate an image for a sample's conditions");
    std::string sample_ckpt, sample_manifest, sample_out;
    std::optional<std::uint64_t> sample_seed;
    std::optional<int> sample_steps;
    sample->add_option("--ckpt", sample_ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
    sample->add_option("--manifest", sample_manifest, "Sample manifest.json or directory")->required();
    sample->add_option("--seed", sample_seed, "Noise seed (default: sampling.seed)");
    sample->add_option("--steps", sample_steps, "Euler steps (default: sampling.steps)")->check(CLI::PositiveNumber);
    sample->add_option("--out", sample_out, "Output PNG")->required();

    // mask dump
    auto* mask = app.add_subcommand("mask", "Attention mask tools");
    mask->require_subcommand(1);
    auto* dump = mask->add_subcommand("dump", "Write the attention mask as a binary PGM");
    std::string dump_manifest, dump_out;
    bool no_lam = false, no_sam = false;
    dump->add_option("--manifest", dump_manifest, "Sample manifest.json or directory")->required();
    dump->add_option("--out", dump_out, "Output PGM")->required();
    dump->add_flag("--no-lam", no_lam, "Disable the layout attention mask");
    dump->add_flag("--no-sam", no_sam, "Disable the subject attention mask");

    // eval
    auto* eval = app.add_subcommand("eval", "Score a generated image against a sample");
    std::string eval_manifest, eval_generated, eval_detections, eval_out;
    eval->add_option("--manifest", eval_manifest, "Sample manifest.json or directory")->required();
    eval->add_option("--generated", eval_generated, "Generated PNG")->required()->check(CLI::ExistingFile);
    eval->add_option("--detections", eval_detections, "Detections JSON [{text, bbox}] (default: exact annotations)")
        ->check(CLI::ExistingFile);
    eval->add_option("--out", eval_out, "Report JSON")->required();

    // inspect
    auto* inspect = app.add_subcommand("inspect", "Print the token budget and segment layout of a sample");
    std::string inspect_manifest;
    inspect->add_option("--manifest", inspect_manifest, "Sample manifest.json or directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\nremedy: run '" << argv[0] << " --help' (or '<subcommand> --help')\n";
        return kExitUsage;
    }

    try {
        const std::string resolved = resolve(config, sets);
        if (gen->parsed()) {
            print_config(resolved);
            check(ddt_dataset_generate(resolved.c_str(), gen_out.c_str(), gen_count, gen_jobs));
            std::cout << "wrote dataset to " << gen_out << "\n";
        } else if (train->parsed()) {
            print_config(resolved);
            check(ddt_train(resolved.c_str(), train_data.c_str(), train_out.c_str(),
                            train_resume.empty() ? nullptr : train_resume.c_str(),
                            train_log.empty() ? nullptr : train_log.c_str(), on_progress, nullptr));
            std::cout << "wrote checkpoint " << train_out << "\n";
        } else if (sample->parsed()) {
            ModelHandle model(sample_ckpt);
            char* cfg = nullptr;
            check(ddt_model_config(model.p, &cfg));
            std::string merged = take(cfg);
            // Sampling defaults come from the checkpoint's config; --set still applies.
            if (!sets.empty()) {
                std::vector<const char*> ptrs;
                for (const auto& o : sets) ptrs.push_back(o.c_str());
                char* out = nullptr;
                check(ddt_config_apply(merged.c_str(), ptrs.data(), ptrs.size(), &out));
                merged = take(out);
            }
            print_config(merged);
            std::int64_t cfg_seed = 0, cfg_steps = 0;
            check(ddt_config_get_int(merged.c_str(), "sampling.seed", &cfg_seed));
            check(ddt_config_get_int(merged.c_str(), "sampling.steps", &cfg_steps));
            const std::uint64_t seed = sample_seed ? *sample_seed : static_cast<std::uint64_t>(cfg_seed);
            const int steps = sample_steps ? *sample_steps : static_cast<int>(cfg_steps);
            std::cout << "seed " << seed << " steps " << steps << "\n";
            SampleHandle s(sample_manifest);
            check(ddt_model_sample(model.p, s.p, seed, steps, sample_out.c_str()));
            std::cout << "wrote " << sample_out << "\n";
        } else if (dump->parsed()) {
            print_config(resolved);
            SampleHandle s(dump_manifest);
            check(ddt_mask_dump(s.p, resolved.c_str(), no_lam ? 0 : 1, no_sam ? 0 : 1, dump_out.c_str()));
            std::cout << "wrote " << dump_out << " (layout mask " << (no_lam ? "off" : "on") << ", subject mask "
                      << (no_sam ? "off" : "on") << ")\n";
        } else if (eval->parsed()) {
            print_config(resolved);
            SampleHandle s(eval_manifest);
            char* report = nullptr;
            check(ddt_evaluate(s.p, eval_generated.c_str(), eval_detections.empty() ? nullptr : eval_detections.c_str(),
                               eval_out.c_str(), &report));
            std::cout << take(report) << "\n";
        } else if (inspect->parsed()) {
            print_config(resolved);
            SampleHandle s(inspect_manifest);
            char* out = nullptr;
            check(ddt_sample_inspect(s.p, resolved.c_str(), &out));
            std::cout << take(out) << "\n";
        }
    } catch (const DomainFailure& f) {
        std::cerr << "error: " << f.message << "\n";
        return f.status == DDT_ERR_INVALID_ARGUMENT ? kExitUsage : kExitDomain;
    }
    return 0;
}
