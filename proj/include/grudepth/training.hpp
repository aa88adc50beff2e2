#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "grudepth/dataset.hpp"
#include "grudepth/network.hpp"
#include "grudepth/ops.hpp"
#include "grudepth/rng.hpp"

namespace grudepth {

// Per-image loss: L1 norm of the difference.
template <typename T>
T l1_loss(const TensorT<T>& y, const TensorT<T>& yhat) {
    return l1_diff(y, yhat);
}

// Mini-batch loss: mean of the per-image L1 losses.
template <typename T>
T batch_loss(const std::vector<TensorT<T>>& y, const std::vector<TensorT<T>>& yhat) {
    if (y.size() != yhat.size()) throw ShapeError("batch_loss: list length mismatch");
    if (y.empty()) throw ConfigError("batch_loss: empty batch");
    T acc = 0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += l1_diff(y[i], yhat[i]);
    return acc / static_cast<T>(y.size());
}

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename T>
struct AdamState {
    AdamConfig config;
    long step = 0;  // t, incremented once per adam_step
    std::vector<TensorT<T>> m;
    std::vector<TensorT<T>> v;

    void init(const DepthNetT<T>& net) {
        m.clear();
        v.clear();
        for (const auto& p : net.params) {
            m.push_back(TensorT<T>(p.value.shape));
            v.push_back(TensorT<T>(p.value.shape));
        }
    }
};

// One Adam update over all parameters. Non-finite gradients refuse the
// step with diagnostics rather than corrupting the parameters.
template <typename T>
void adam_step(DepthNetT<T>& net, const std::vector<TensorT<T>>& grads, AdamState<T>& state) {
    if (grads.size() != net.params.size())
        throw ShapeError("adam_step: gradient count mismatch");
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!grads[i].same_shape(net.params[i].value))
            throw ShapeError("adam_step: gradient shape mismatch for " + net.params[i].name);
        if (!grads[i].all_finite())
            throw NumericError("adam_step refused: non-finite gradient for " +
                               net.params[i].name + " at t=" + std::to_string(state.step + 1));
    }
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.config.beta1, t);
    const double c2 = 1.0 - std::pow(state.config.beta2, t);
    const T b1 = static_cast<T>(state.config.beta1);
    const T b2 = static_cast<T>(state.config.beta2);
    for (std::size_t i = 0; i < grads.size(); ++i) {
        auto& p = net.params[i].value.data;
        auto& m = state.m[i].data;
        auto& v = state.v[i].data;
        const auto& g = grads[i].data;
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = b1 * m[k] + (T(1) - b1) * g[k];
            v[k] = b2 * v[k] + (T(1) - b2) * g[k] * g[k];
            const double mhat = static_cast<double>(m[k]) / c1;
            const double vhat = static_cast<double>(v[k]) / c2;
            p[k] = static_cast<T>(p[k] -
                                  state.config.lr * mhat / (std::sqrt(vhat) + state.config.eps));
        }
    }
}

struct TrainConfig {
    int seq_len = 32;
    int burn_len = 32;
    int epochs = 10;         // one epoch = ceil(total training frames / seq_len) updates
    int max_updates = 0;     // 0 = derive from epochs
    int batch_sequences = 1; // m sequences per update, gradients averaged
    double lr = 1e-3;
    double lr_decay = 1.0;   // multiplicative step decay, 1.0 = constant
    int lr_decay_every = 0;  // updates between decays, 0 = never
    int val_interval = 50;   // updates between validation passes, 0 = never
    int val_frames = 64;     // frames per validation pass
    std::uint64_t seed = 0;
};

// A training window and its burn-in prefix, contiguous within one episode.
struct SequenceSample {
    int episode = 0;
    int start = 0;       // first frame of the training window
    int burn_start = 0;  // first burn-in frame, burn = [burn_start, start)
};

SequenceSample sample_minibatch(const std::vector<int>& episode_lengths, Rng& rng, int seq_len,
                                int burn_len);

struct LossRecord {
    long step = 0;
    double train_loss = 0;
    double val_loss = 0;  // NaN when no validation pass ran at this step
    double wall_ms = 0;
};

void write_loss_history(const std::string& path, const std::vector<LossRecord>& history);

inline constexpr int kCheckpointFormatVersion = 1;

void save_checkpoint(const std::string& path, const DepthNet& net, const AdamState<float>& adam,
                     const Rng& rng, const TrainConfig& cfg);

struct LoadedCheckpoint {
    DepthNet net;
    AdamState<float> adam;
    Rng rng;
    TrainConfig train_config;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

int updates_per_epoch(const Dataset& dataset, int seq_len);

class Trainer {
public:
    Trainer(const TrainConfig& cfg, const NetworkConfig& net_cfg, const Dataset& dataset);
    // resume: restores parameters, moments, step counter and RNG state
    Trainer(const LoadedCheckpoint& ckpt, const Dataset& dataset);

    // Runs `updates` optimizer steps (or the config-derived count when 0).
    // Per update: reset state, burn-in untaped, taped window, Adam step.
    void run(int updates = 0);

    const std::vector<LossRecord>& history() const { return history_; }
    DepthNet& net() { return net_; }
    long step() const { return adam_.step; }
    double validation_loss();  // mean per-frame L1 on the held-out split

    void save(const std::string& path) const;

private:
    double train_update();

    TrainConfig cfg_;
    const Dataset& dataset_;
    std::vector<int> train_episode_indices_;
    std::vector<int> train_lengths_;
    DepthNet net_;
    AdamState<float> adam_;
    Rng rng_;
    std::vector<LossRecord> history_;
};

}  // namespace grudepth
