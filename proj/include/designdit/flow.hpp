// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "designdit/checkpoint.hpp"
#include "designdit/image.hpp"
#include "designdit/mmdit.hpp"

namespace designdit {

struct FlowPair {
    Mat x_t;
    Mat v_target;
};

/// x_t = (1 - t) x + t eps, v = eps - x.
FlowPair flow_interpolate(const Mat& x, const Mat& eps, double t);

/// Mean squared error over every element.
double velocity_loss(const Mat& v_pred, const Mat& v_target);

/// Standard-normal matrix drawn from SplitMix64(seed).
Mat gaussian_noise(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed);

/// One training example: constant condition inputs plus the clean target patches.
struct TrainingSample {
    std::uint64_t key = 0;  // stable identity; drives per-item noise and reduction order
    ModelInputs inputs;
    Mat target;             // [T_z x patch_dim], pixels in [-1, 1]
    int width = 0;
    int height = 0;
};

TrainingSample make_training_sample(const ModelConfig& config, std::uint64_t key, std::string_view prompt,
                                    const SemanticLayout& layout, const MultiSubjectCondition& condition,
                                    const Image& target, MaskToggles toggles = {});

struct AdamWConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
    double clip_norm = 1.0;
};

/// Optimizer moments align index-for-index with Model::params().
struct TrainState {
    std::uint64_t step = 0;
    std::uint64_t seed = 0;
    std::vector<Mat> m;
    std::vector<Mat> v;
};

TrainState init_train_state(const Model& model, std::uint64_t seed);

/// The (t, eps) an item sees at a step; a pure function of (seed, step, key).
struct ItemNoise {
    double t;
    Mat eps;
};
ItemNoise item_noise(std::uint64_t seed, std::uint64_t step, std::uint64_t key, Eigen::Index rows, Eigen::Index cols);

struct StepResult {
    double loss = 0.0;       // batch mean
    double grad_norm = 0.0;  // before clipping
};

/// Forward/backward over the batch, deterministic reduction in key order, clipped
/// AdamW on the trainable parameters, step counter advanced. jobs > 1 runs items on
/// worker threads without changing the result. Throws NonFiniteLoss.
StepResult train_step(Model& model, TrainState& state, std::span<const TrainingSample* const> batch,
                      const AdamWConfig& adam, TrainableSet trainable, int jobs = 1);

/// Mean velocity loss on fixed (t, eps) probes; used to compare training progress.
double probe_loss(const Model& model, std::span<const TrainingSample> samples, std::span<const double> ts,
                  std::uint64_t seed, const ForwardOptions& opts = {});

/// Samples grouped by (height, width); batches never mix buckets.
struct Bucket {
    int width = 0;
    int height = 0;
    std::vector<std::size_t> members;
};
std::vector<Bucket> make_buckets(std::span<const TrainingSample> samples);

/// Dataset indices of the batch used at a step. Every epoch visits every sample
/// once in a seeded order; a pure function of (seed, step).
std::vector<std::size_t> batch_for_step(std::span<const Bucket> buckets, int batch_size, std::uint64_t seed,
                                        std::uint64_t step);

struct TrainLogRecord {
    std::uint64_t step = 0;
    double loss = 0.0;
    double lr = 0.0;
    double wallclock_ms = 0.0;
};
std::string to_ndjson(const TrainLogRecord& r);

struct TrainOptions {
    std::uint64_t steps = 0;  // train until state.step == steps
    int batch_size = 8;
    AdamWConfig adam;
    TrainableSet trainable = TrainableSet::All;
    int jobs = 1;
    std::function<void(const TrainLogRecord&)> on_step;
};

void train(Model& model, TrainState& state, std::span<const TrainingSample> samples, const TrainOptions& options);

// ---------------------------------------------------------------------------
// Checkpoint glue. Parameters are stored under their own names, optimizer moments
// under "adam.m.<name>" / "adam.v.<name>".

CheckpointData make_checkpoint(const Model& model, const TrainState* state, nlohmann::json config);
ParamStore params_from_checkpoint(const CheckpointData& data);
/// Moments and counters; a checkpoint without moments yields a fresh state.
TrainState train_state_from_checkpoint(const Model& model, const CheckpointData& data);

// ---------------------------------------------------------------------------
// Sampling.

class VelocityField {
public:
    virtual ~VelocityField() = default;
    virtual Mat velocity(const Mat& x, double t) const = 0;
};

class ModelVelocity final : public VelocityField {
public:
    ModelVelocity(const Model& model, const ModelInputs& inputs, ForwardOptions opts = {})
        : model_(model), inputs_(inputs), opts_(opts) {}
    Mat velocity(const Mat& x, double t) const override { return model_.predict(inputs_, x, t, opts_); }

private:
    const Model& model_;
    const ModelInputs& inputs_;
    ForwardOptions opts_;
};

/// Uniform grid from t = 1 to t = 0: x <- x - dt * v(x, t).
Mat euler_sample(const VelocityField& field, Mat x1, int steps);

/// Samples an image for prepared inputs: noise from seed, Euler integration, unpatchify.
Image sample_image(const Model& model, const ModelInputs& inputs, int steps, std::uint64_t seed,
                   const ForwardOptions& opts = {});

}  // namespace designdit
