// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <unistd.h>

#include "designdit/error.hpp"
#include "doctest.h"

// Evaluates expr and checks that it throws designdit::Error with the given code.
#define CHECK_ERROR_CODE(expr, ec)                                      \
    do {                                                                \
        bool threw_ = false;                                            \
        try {                                                           \
            (void)(expr);                                               \
        } catch (const designdit::Error& e_) {                          \
            threw_ = true;                                              \
            CHECK_MESSAGE(e_.code() == (ec), "message: " << std::string(e_.what())); \
        }                                                               \
        CHECK_MESSAGE(threw_, "expected " #ec);                         \
    } while (0)

namespace testutil {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("designdit_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace testutil
