// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#include "designdit/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "designdit/error.hpp"

namespace designdit {

namespace {

constexpr std::array<char, 8> kMagic = {'D', 'D', 'T', 'C', 'K', 'P', 'T', '1'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    std::memcpy(b, &v, 8);
    out.write(b, 8);
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const CheckpointData& data) {
    nlohmann::json header;
    header["format"] = "designdit-checkpoint";
    header["version"] = 1;
    header["config"] = data.config;
    header["train_state"] = data.train_state;
    header["tensors"] = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& t : data.tensors) {
        header["tensors"].push_back(
            {{"name", t.name}, {"shape", {t.value.rows(), t.value.cols()}}, {"offset", offset}, {"dtype", "f32"}});
        offset += static_cast<std::uint64_t>(t.value.size()) * 4;
    }
    const std::string text = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
    out.write(kMagic.data(), kMagic.size());
    put_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    std::vector<float> buf;
    for (const auto& t : data.tensors) {
        buf.resize(static_cast<std::size_t>(t.value.size()));
        for (Eigen::Index i = 0; i < t.value.size(); ++i) buf[static_cast<std::size_t>(i)] = static_cast<float>(t.value.data()[i]);
        out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
    }
    if (!out) raise(ErrorCode::IoError, "failed writing '" + path.string() + "'");
}

CheckpointData read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::IoError, "cannot open checkpoint '" + path.string() + "'");
    std::array<char, 8> magic{};
    in.read(magic.data(), 8);
    if (!in) raise(ErrorCode::IoError, "'" + path.string() + "' is truncated");
    if (magic != kMagic) raise(ErrorCode::SchemaViolation, "'" + path.string() + "' is not a designdit checkpoint");
    std::uint64_t header_len = 0;
    in.read(reinterpret_cast<char*>(&header_len), 8);
    if (!in || header_len > (1ULL << 30)) raise(ErrorCode::IoError, "'" + path.string() + "' has a corrupt header length");
    std::string text(header_len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(header_len));
    if (!in) raise(ErrorCode::IoError, "'" + path.string() + "' is truncated");
    std::vector<char> blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    CheckpointData data;
    try {
        const nlohmann::json header = nlohmann::json::parse(text);
        if (header.at("format") != "designdit-checkpoint" || header.at("version") != 1) {
            raise(ErrorCode::SchemaViolation, "unsupported checkpoint format/version");
        }
        data.config = header.at("config");
        data.train_state = header.at("train_state");
        for (const auto& t : header.at("tensors")) {
            if (t.at("dtype") != "f32") raise(ErrorCode::SchemaViolation, "unsupported tensor dtype");
            const auto rows = t.at("shape").at(0).get<Eigen::Index>();
            const auto cols = t.at("shape").at(1).get<Eigen::Index>();
            const auto offset = t.at("offset").get<std::uint64_t>();
            if (rows < 0 || cols < 0) raise(ErrorCode::SchemaViolation, "negative tensor shape");
            const std::uint64_t bytes = static_cast<std::uint64_t>(rows * cols) * 4;
            if (offset + bytes > blob.size()) raise(ErrorCode::IoError, "'" + path.string() + "' is truncated");
            NamedTensor nt{t.at("name").get<std::string>(), Mat(rows, cols)};
            const char* src = blob.data() + offset;
            for (Eigen::Index i = 0; i < rows * cols; ++i) {
                float f;
                std::memcpy(&f, src + 4 * i, 4);
                nt.value.data()[i] = f;
            }
            data.tensors.push_back(std::move(nt));
        }
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::SchemaViolation, std::string("checkpoint header: ") + e.what());
    }
    return data;
}

}  // namespace designdit
