// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#include "designdit/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>

#include "designdit/error.hpp"

namespace designdit {

Image::Image(int width, int height, Rgba fill) : width_(width), height_(height) {
    if (width < 0 || height < 0) raise(ErrorCode::DimensionMismatch, "negative image size");
    data_.resize(static_cast<std::size_t>(width) * height * 4);
    for (std::size_t i = 0; i < data_.size(); i += 4) {
        data_[i] = fill.r;
        data_[i + 1] = fill.g;
        data_[i + 2] = fill.b;
        data_[i + 3] = fill.a;
    }
}

void Image::blend(int x, int y, Rgba src) noexcept {
    if (src.a == 255) {
        set(x, y, src);
        return;
    }
    if (src.a == 0) return;
    const Rgba dst = at(x, y);
    const int sa = src.a;
    const int da = dst.a * (255 - sa) / 255;
    const int oa = sa + da;
    auto mix = [&](int s, int d) { return static_cast<std::uint8_t>((s * sa + d * da + oa / 2) / oa); };
    set(x, y, {mix(src.r, dst.r), mix(src.g, dst.g), mix(src.b, dst.b), static_cast<std::uint8_t>(oa)});
}

FloatImage to_signed_float(const Image& image) {
    FloatImage out(image.width(), image.height());
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            const Rgba c = image.at(x, y);
            out.at(x, y, 0) = c.r / 127.5 - 1.0;
            out.at(x, y, 1) = c.g / 127.5 - 1.0;
            out.at(x, y, 2) = c.b / 127.5 - 1.0;
        }
    }
    return out;
}

Image from_signed_float(const FloatImage& image) {
    Image out(image.width, image.height, {0, 0, 0, 255});
    auto quantize = [](double v) {
        const double scaled = std::round((std::clamp(v, -1.0, 1.0) + 1.0) * 127.5);
        return static_cast<std::uint8_t>(scaled);
    };
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            out.set(x, y, {quantize(image.at(x, y, 0)), quantize(image.at(x, y, 1)), quantize(image.at(x, y, 2)), 255});
        }
    }
    return out;
}

void write_png(const Image& image, const std::filesystem::path& path) {
    png_image desc{};
    desc.version = PNG_IMAGE_VERSION;
    desc.width = static_cast<png_uint_32>(image.width());
    desc.height = static_cast<png_uint_32>(image.height());
    desc.format = PNG_FORMAT_RGBA;
    if (!png_image_write_to_file(&desc, path.c_str(), 0, image.bytes().data(), 0, nullptr)) {
        const std::string reason = desc.message;
        png_image_free(&desc);
        raise(ErrorCode::IoError, "cannot write '" + path.string() + "': " + reason);
    }
}

Image read_png(const std::filesystem::path& path) {
    png_image desc{};
    desc.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&desc, path.c_str())) {
        const std::string reason = desc.message;
        png_image_free(&desc);
        raise(ErrorCode::IoError, "cannot read '" + path.string() + "': " + reason);
    }
    desc.format = PNG_FORMAT_RGBA;
    Image image(static_cast<int>(desc.width), static_cast<int>(desc.height));
    if (!png_image_finish_read(&desc, nullptr, image.bytes().data(), 0, nullptr)) {
        const std::string reason = desc.message;
        png_image_free(&desc);
        raise(ErrorCode::IoError, "cannot decode '" + path.string() + "': " + reason);
    }
    return image;
}

}  // namespace designdit
