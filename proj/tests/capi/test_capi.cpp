// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

// Exercises the shared library through the C header only.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <unistd.h>

#include "designdit/designdit.h"
#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Scratch {
    fs::path path = fs::temp_directory_path() / ("designdit_capi_" + std::to_string(::getpid()));
    Scratch() {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~Scratch() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::string take(char* s) {
    std::string out = s ? s : "";
    ddt_string_free(s);
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

std::string resolve(std::initializer_list<const char*> sets) {
    char* out = nullptr;
    REQUIRE(ddt_config_resolve(nullptr, sets.begin(), sets.size(), &out) == DDT_OK);
    return take(out);
}

}  // namespace

TEST_CASE("version and null arguments") {
    CHECK(std::strlen(ddt_version()) > 0);
    CHECK(ddt_sample_load(nullptr, nullptr) == DDT_ERR_INVALID_ARGUMENT);
    CHECK(std::strlen(ddt_last_error()) > 0);
    ddt_sample_free(nullptr);
    ddt_model_free(nullptr);
    ddt_string_free(nullptr);
}

TEST_CASE("config round trip and errors") {
    const std::string cfg = resolve({"training.lr=0.002", "sampling.seed=9"});
    CHECK(json::parse(cfg)["training"]["lr"] == 0.002);
    std::int64_t v = 0;
    CHECK(ddt_config_get_int(cfg.c_str(), "sampling.seed", &v) == DDT_OK);
    CHECK(v == 9);
    CHECK(ddt_config_get_int(cfg.c_str(), "sampling.nothing", &v) != DDT_OK);

    const char* bad[] = {"training.unknown=1"};
    char* out = nullptr;
    CHECK(ddt_config_resolve(nullptr, bad, 1, &out) == DDT_ERR_INVALID_CONFIG);
    CHECK(out == nullptr);
    CHECK(std::string(ddt_last_error()).find("unknown") != std::string::npos);

    const char* fix[] = {"sampling.steps=3"};
    CHECK(ddt_config_apply(cfg.c_str(), fix, 1, &out) == DDT_OK);
    CHECK(json::parse(take(out))["sampling"]["steps"] == 3);
    CHECK(ddt_config_apply("{ nope", nullptr, 0, &out) == DDT_ERR_INVALID_CONFIG);
}

TEST_CASE("dataset, inspect, mask, train, sample, evaluate") {
    Scratch dir;
    const std::string cfg = resolve({"training.steps=2", "training.batch=2", "dataset.seed=4"});
    const std::string data = (dir.path / "data").string();
    REQUIRE(ddt_dataset_generate(cfg.c_str(), data.c_str(), 2, 1) == DDT_OK);
    CHECK(fs::exists(dir.path / "data" / "sample_00000" / "manifest.json"));
    CHECK(fs::exists(dir.path / "data" / "sample_00001" / "manifest.json"));

    ddt_sample* s = nullptr;
    REQUIRE(ddt_sample_load((dir.path / "data" / "sample_00000").c_str(), &s) == DDT_OK);
    char* out = nullptr;
    REQUIRE(ddt_sample_inspect(s, cfg.c_str(), &out) == DDT_OK);
    const json info = json::parse(take(out));
    const auto& t = info["tokens"];
    CHECK(t["total"] == t["layout"].get<int>() + t["prompt"].get<int>() + t["image"].get<int>() + t["subject"].get<int>());

    const fs::path pgm = dir.path / "mask.pgm";
    REQUIRE(ddt_mask_dump(s, cfg.c_str(), 1, 1, pgm.c_str()) == DDT_OK);
    const std::string bytes = slurp(pgm);
    const int n = t["total"];
    const std::string header = "P5\n" + std::to_string(n) + ' ' + std::to_string(n) + "\n255\n";
    CHECK(bytes.substr(0, header.size()) == header);
    CHECK(bytes.size() == header.size() + static_cast<std::size_t>(n) * n);

    const fs::path ckpt = dir.path / "model.ckpt";
    int calls = 0;
    auto cb = [](std::uint64_t, double loss, double, void* user) -> int {
        ++*static_cast<int*>(user);
        return loss == loss ? 0 : 1;
    };
    REQUIRE(ddt_train(cfg.c_str(), data.c_str(), ckpt.c_str(), nullptr, nullptr, cb, &calls) == DDT_OK);
    CHECK(calls == 2);

    ddt_model* m = nullptr;
    REQUIRE(ddt_model_load(ckpt.c_str(), &m) == DDT_OK);
    REQUIRE(ddt_model_config(m, &out) == DDT_OK);
    CHECK(json::parse(take(out)) == json::parse(cfg));

    const fs::path a = dir.path / "a.png", b = dir.path / "b.png";
    REQUIRE(ddt_model_sample(m, s, 5, 3, a.c_str()) == DDT_OK);
    REQUIRE(ddt_model_sample(m, s, 5, 3, b.c_str()) == DDT_OK);
    CHECK(slurp(a) == slurp(b));

    const fs::path target = dir.path / "data" / "sample_00000" / "target.png";
    REQUIRE(ddt_evaluate(s, target.c_str(), nullptr, nullptr, &out) == DDT_OK);
    const json rep = json::parse(take(out));
    for (const char* k : {"m_dino", "spatial", "sentence_accuracy", "ned", "region_color"}) CHECK(rep[k] == 1.0);
    CHECK(ddt_evaluate(s, (dir.path / "missing.png").c_str(), nullptr, nullptr, &out) == DDT_ERR_IO);

    ddt_model_free(m);
    ddt_sample_free(s);
}

TEST_CASE("interrupting training still writes the checkpoint") {
    Scratch dir;
    const std::string cfg = resolve({"training.steps=5", "training.batch=1"});
    const std::string data = (dir.path / "data").string();
    REQUIRE(ddt_dataset_generate(cfg.c_str(), data.c_str(), 1, 1) == DDT_OK);
    const fs::path ckpt = dir.path / "model.ckpt";
    auto stop = [](std::uint64_t step, double, double, void*) -> int { return step >= 2 ? 1 : 0; };
    CHECK(ddt_train(cfg.c_str(), data.c_str(), ckpt.c_str(), nullptr, nullptr, stop, nullptr) == DDT_ERR_INTERRUPTED);
    CHECK(fs::exists(ckpt));
}

TEST_CASE("load errors map to status codes") {
    Scratch dir;
    ddt_sample* s = nullptr;
    CHECK(ddt_sample_load((dir.path / "nothing").c_str(), &s) == DDT_ERR_IO);
    CHECK(s == nullptr);
    std::ofstream(dir.path / "junk.ckpt") << "not a checkpoint at all";
    ddt_model* m = nullptr;
    CHECK(ddt_model_load((dir.path / "junk.ckpt").c_str(), &m) == DDT_ERR_SCHEMA_VIOLATION);
    CHECK(m == nullptr);
}
