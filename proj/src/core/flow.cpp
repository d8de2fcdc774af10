// Copyright (C) 2026 The designdit Authors
// SPDX-License-Identifier: Apache-2.0

#include "designdit/flow.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <sstream>
#include <thread>

#include "designdit/conditioning.hpp"
#include "designdit/encoders.hpp"
#include "designdit/error.hpp"
#include "designdit/rng.hpp"

namespace designdit {

FlowPair flow_interpolate(const Mat& x, const Mat& eps, double t) {
    if (x.rows() != eps.rows() || x.cols() != eps.cols()) raise(ErrorCode::ShapeMismatch, "flow_interpolate: x and eps differ in shape");
    return {(1.0 - t) * x + t * eps, eps - x};
}

double velocity_loss(const Mat& v_pred, const Mat& v_target) {
    if (v_pred.rows() != v_target.rows() || v_pred.cols() != v_target.cols()) {
        raise(ErrorCode::ShapeMismatch, "velocity_loss: prediction and target differ in shape");
    }
    if (v_pred.size() == 0) return 0.0;
    return (v_pred - v_target).squaredNorm() / static_cast<double>(v_pred.size());
}

Mat gaussian_noise(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    SplitMix64 rng(seed);
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.gaussian();
    return m;
}

TrainingSample make_training_sample(const ModelConfig& config, std::uint64_t key, std::string_view prompt,
                                    const SemanticLayout& layout, const MultiSubjectCondition& condition,
                                    const Image& target, MaskToggles toggles) {
    TrainingSample s;
    s.key = key;
    s.width = target.width();
    s.height = target.height();
    s.inputs = prepare_inputs(config, prompt, layout, condition, target.width(), target.height(), toggles);
    s.target = patchify_pixels(to_signed_float(target), config.patch_size);
    return s;
}

TrainState init_train_state(const Model& model, std::uint64_t seed) {
    TrainState s;
    s.seed = seed;
    for (const auto& p : model.params()) {
        s.m.push_back(Mat::Zero(p.value.rows(), p.value.cols()));
        s.v.push_back(Mat::Zero(p.value.rows(), p.value.cols()));
    }
    return s;
}

ItemNoise item_noise(std::uint64_t seed, std::uint64_t step, std::uint64_t key, Eigen::Index rows, Eigen::Index cols) {
    SplitMix64 rng(derive_seed(seed, step, key));
    ItemNoise n;
    n.t = rng.uniform_open();
    n.eps = gaussian_noise(rows, cols, rng.next());
    return n;
}

namespace {

struct ItemResult {
    double loss = 0.0;
    double t = 0.0;
    std::vector<Mat> grads;  // empty Mat where no gradient flowed or the parameter is frozen
};

ItemResult run_item(const Model& model, const TrainingSample& s, std::uint64_t seed, std::uint64_t step,
                    TrainableSet trainable) {
    ad::Tape tape;
    const auto bound = model.bind(tape, trainable);
    const ItemNoise noise = item_noise(seed, step, s.key, s.target.rows(), s.target.cols());
    const FlowPair fp = flow_interpolate(s.target, noise.eps, noise.t);
    const ad::Var pred = model.forward(tape, bound, s.inputs, fp.x_t, noise.t);
    const ad::Var loss = ad::mse(tape, pred, fp.v_target);
    ItemResult r;
    r.loss = tape.value(loss)(0, 0);
    r.t = noise.t;
    if (!std::isfinite(r.loss)) return r;
    tape.backward(loss);
    r.grads.resize(bound.size());
    for (std::size_t i = 0; i < bound.size(); ++i) {
        if (const Mat* g = tape.grad(bound[i])) r.grads[i] = *g;
    }
    return r;
}

}  // namespace

StepResult train_step(Model& model, TrainState& state, std::span<const TrainingSample* const> batch,
                      const AdamWConfig& adam, TrainableSet trainable, int jobs) {
    if (batch.empty()) raise(ErrorCode::InvalidConfig, "train_step needs a non-empty batch");
    ParamStore& params = model.params();
    if (state.m.size() != params.size() || state.v.size() != params.size()) {
        raise(ErrorCode::ShapeMismatch, "optimizer state does not match the model");
    }
    std::vector<const TrainingSample*> items(batch.begin(), batch.end());
    std::stable_sort(items.begin(), items.end(), [](auto* a, auto* b) { return a->key < b->key; });

    std::vector<ItemResult> results(items.size());
    const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, items.size());
    if (workers == 1) {
        for (std::size_t i = 0; i < items.size(); ++i) results[i] = run_item(model, *items[i], state.seed, state.step, trainable);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < items.size(); i += workers) {
                    results[i] = run_item(model, *items[i], state.seed, state.step, trainable);
                }
            });
        }
    }

    StepResult out;
    const double inv_b = 1.0 / static_cast<double>(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (!std::isfinite(results[i].loss)) {
            std::ostringstream msg;
            msg << "loss is " << results[i].loss << " at step " << state.step << " for sample " << items[i]->key
                << " (t=" << results[i].t << ")";
            raise(ErrorCode::NonFiniteLoss, msg.str());
        }
        out.loss += results[i].loss * inv_b;
    }

    // Mean gradient, reduced in key order.
    std::vector<Mat> grads(params.size());
    double sq = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (!is_trainable(params[p].group, trainable)) continue;
        grads[p] = Mat::Zero(params[p].value.rows(), params[p].value.cols());
        for (const auto& r : results) {
            if (r.grads[p].size() > 0) grads[p] += r.grads[p] * inv_b;
        }
        sq += grads[p].squaredNorm();
    }
    out.grad_norm = std::sqrt(sq);
    if (!std::isfinite(out.grad_norm)) {
        raise(ErrorCode::NonFiniteLoss, "gradient norm is not finite at step " + std::to_string(state.step));
    }
    const double clip = (adam.clip_norm > 0.0 && out.grad_norm > adam.clip_norm) ? adam.clip_norm / out.grad_norm : 1.0;

    const double k = static_cast<double>(state.step + 1);
    const double bc1 = 1.0 - std::pow(adam.beta1, k);
    const double bc2 = 1.0 - std::pow(adam.beta2, k);
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (grads[p].size() == 0) continue;
        Mat& w = params[p].value;
        Mat& m = state.m[p];
        Mat& v = state.v[p];
        const Mat g = grads[p] * clip;
        m = adam.beta1 * m + (1.0 - adam.beta1) * g;
        v = adam.beta2 * v + (1.0 - adam.beta2) * g.cwiseProduct(g);
        round_to_float(m);
        round_to_float(v);
        const Mat update = (m / bc1).array() / ((v / bc2).array().sqrt() + adam.eps);
        w -= adam.lr * (update + adam.weight_decay * w);
        round_to_float(w);
    }
    ++state.step;
    return out;
}

double probe_loss(const Model& model, std::span<const TrainingSample> samples, std::span<const double> ts,
                  std::uint64_t seed, const ForwardOptions& opts) {
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& s : samples) {
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const Mat eps = gaussian_noise(s.target.rows(), s.target.cols(), derive_seed(seed, s.key, i, 0x9e37));
            const FlowPair fp = flow_interpolate(s.target, eps, ts[i]);
            total += velocity_loss(model.predict(s.inputs, fp.x_t, ts[i], opts), fp.v_target);
            ++n;
        }
    }
    return n ? total / static_cast<double>(n) : 0.0;
}

std::vector<Bucket> make_buckets(std::span<const TrainingSample> samples) {
    std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < samples.size(); ++i) groups[{samples[i].height, samples[i].width}].push_back(i);
    std::vector<Bucket> out;
    for (auto& [hw, members] : groups) out.push_back({hw.second, hw.first, std::move(members)});
    return out;
}

std::vector<std::size_t> batch_for_step(std::span<const Bucket> buckets, int batch_size, std::uint64_t seed,
                                        std::uint64_t step) {
    if (batch_size < 1) raise(ErrorCode::InvalidConfig, "batch size must be positive");
    const auto b = static_cast<std::size_t>(batch_size);
    std::uint64_t per_epoch = 0;
    for (const auto& bk : buckets) per_epoch += (bk.members.size() + b - 1) / b;
    if (per_epoch == 0) raise(ErrorCode::InvalidConfig, "no training samples");
    const std::uint64_t epoch = step / per_epoch;

    auto shuffle = [](auto& v, std::uint64_t s) {
        SplitMix64 rng(s);
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)));
            std::swap(v[i - 1], v[j]);
        }
    };
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t k = 0; k < buckets.size(); ++k) {
        std::vector<std::size_t> order = buckets[k].members;
        shuffle(order, derive_seed(seed, epoch, k, 1));
        for (std::size_t i = 0; i < order.size(); i += b) {
            batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                                 order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + b)));
        }
    }
    shuffle(batches, derive_seed(seed, epoch, 0, 2));
    return batches[static_cast<std::size_t>(step % per_epoch)];
}

std::string to_ndjson(const TrainLogRecord& r) {
    nlohmann::json j{{"step", r.step}, {"loss", r.loss}, {"lr", r.lr}, {"wallclock_ms", r.wallclock_ms}};
    return j.dump();
}

void train(Model& model, TrainState& state, std::span<const TrainingSample> samples, const TrainOptions& options) {
    const std::vector<Bucket> buckets = make_buckets(samples);
    const auto start = std::chrono::steady_clock::now();
    while (state.step < options.steps) {
        const auto ids = batch_for_step(buckets, options.batch_size, state.seed, state.step);
        std::vector<const TrainingSample*> batch;
        for (std::size_t i : ids) batch.push_back(&samples[i]);
        const StepResult r = train_step(model, state, batch, options.adam, options.trainable, options.jobs);
        if (options.on_step) {
            const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
            options.on_step({state.step, r.loss, options.adam.lr, ms});
        }
    }
}

CheckpointData make_checkpoint(const Model& model, const TrainState* state, nlohmann::json config) {
    CheckpointData d;
    d.config = std::move(config);
    for (const auto& p : model.params()) d.tensors.push_back({p.name, p.value});
    if (state) {
        d.train_state = {{"step", state->step}, {"seed", state->seed}};
        for (std::size_t i = 0; i < model.params().size(); ++i) {
            d.tensors.push_back({"adam.m." + model.params()[i].name, state->m[i]});
            d.tensors.push_back({"adam.v." + model.params()[i].name, state->v[i]});
        }
    }
    return d;
}

ParamStore params_from_checkpoint(const CheckpointData& data) {
    ParamStore ps;
    for (const auto& t : data.tensors) {
        if (t.name.rfind("adam.", 0) == 0) continue;
        ps.add(t.name, t.value, ParamGroup::Base);
    }
    return ps;
}

TrainState train_state_from_checkpoint(const Model& model, const CheckpointData& data) {
    const std::uint64_t seed = data.train_state.value("seed", std::uint64_t{0});
    TrainState s = init_train_state(model, seed);
    std::map<std::string, const Mat*> by_name;
    for (const auto& t : data.tensors) by_name[t.name] = &t.value;
    bool any = false;
    for (std::size_t i = 0; i < model.params().size(); ++i) {
        const auto& name = model.params()[i].name;
        auto m = by_name.find("adam.m." + name);
        auto v = by_name.find("adam.v." + name);
        if (m == by_name.end() || v == by_name.end()) continue;
        if (m->second->rows() != s.m[i].rows() || m->second->cols() != s.m[i].cols() ||
            v->second->rows() != s.v[i].rows() || v->second->cols() != s.v[i].cols()) {
            raise(ErrorCode::ShapeMismatch, "optimizer moment for '" + name + "' has the wrong shape");
        }
        s.m[i] = *m->second;
        s.v[i] = *v->second;
        any = true;
    }
    if (any) s.step = data.train_state.value("step", std::uint64_t{0});
    return s;
}

Mat euler_sample(const VelocityField& field, Mat x, int steps) {
    if (steps < 1) raise(ErrorCode::InvalidConfig, "sampler needs at least one step");
    const double dt = 1.0 / steps;
    for (int i = 0; i < steps; ++i) {
        const double t = 1.0 - i * dt;
        x -= dt * field.velocity(x, t);
    }
    return x;
}

Image sample_image(const Model& model, const ModelInputs& inputs, int steps, std::uint64_t seed,
                   const ForwardOptions& opts) {
    const PatchGrid& grid = inputs.spec.image_grid;
    const Mat x1 = gaussian_noise(grid.size(), model.config().patch_dim(), derive_seed(seed, fnv1a64("sample")));
    const ModelVelocity field(model, inputs, opts);
    return from_signed_float(unpatchify_pixels(euler_sample(field, x1, steps), grid));
}

}  // namespace designdit
