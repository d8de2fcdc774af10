// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

namespace designdit {

/// Token matrices are [tokens x features], row-major so a token is a contiguous row.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

// tanh approximation of GELU.
inline double gelu(double x) noexcept {
    constexpr double k = 0.7978845608028654;  // sqrt(2/pi)
    return 0.5 * x * (1.0 + std::tanh(k * (x + 0.044715 * x * x * x)));
}

inline double gelu_grad(double x) noexcept {
    constexpr double k = 0.7978845608028654;
    const double inner = k * (x + 0.044715 * x * x * x);
    const double th = std::tanh(inner);
    const double dinner = k * (1.0 + 3.0 * 0.044715 * x * x);
    return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * dinner;
}

inline double silu(double x) noexcept { return x / (1.0 + std::exp(-x)); }

inline double silu_grad(double x) noexcept {
    const double s = 1.0 / (1.0 + std::exp(-x));
    return s * (1.0 + x * (1.0 - s));
}

}  // namespace designdit
