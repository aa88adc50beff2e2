#include "grudepth/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "grudepth/errors.hpp"
#include "grudepth/image.hpp"

namespace grudepth {

SequenceSample sample_minibatch(const std::vector<int>& episode_lengths, Rng& rng, int seq_len,
                                int burn_len) {
    if (seq_len < 1) throw ConfigError("seq_len must be >= 1");
    if (burn_len < 0) throw ConfigError("burn_len must be >= 0");
    std::vector<int> eligible;
    for (std::size_t i = 0; i < episode_lengths.size(); ++i)
        if (episode_lengths[i] >= seq_len) eligible.push_back(static_cast<int>(i));
    if (eligible.empty())
        throw ConfigError("dataset too short: no episode has at least " +
                          std::to_string(seq_len) + " frames");

    SequenceSample s;
    s.episode = eligible[rng.uniform_int(eligible.size())];
    const int max_start = episode_lengths[s.episode] - seq_len;
    s.start = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(max_start) + 1));
    s.burn_start = std::max(0, s.start - burn_len);  // truncated prefix near episode starts
    return s;
}

void write_loss_history(const std::string& path, const std::vector<LossRecord>& history) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "step,train_loss,val_loss,wall_ms\n";
    out.precision(12);
    for (const auto& r : history) {
        out << r.step << ',' << r.train_loss << ',';
        if (std::isnan(r.val_loss))
            out << "";
        else
            out << r.val_loss;
        out << ',' << r.wall_ms << '\n';
    }
}

int updates_per_epoch(const Dataset& dataset, int seq_len) {
    long frames = 0;
    for (std::size_t i = 0; i < dataset.episodes.size(); ++i)
        if (!dataset.meta.is_test[i]) frames += static_cast<long>(dataset.episodes[i].size());
    if (frames == 0) throw ConfigError("dataset has no training episodes");
    return static_cast<int>((frames + seq_len - 1) / seq_len);
}

Trainer::Trainer(const TrainConfig& cfg, const NetworkConfig& net_cfg, const Dataset& dataset)
    : cfg_(cfg), dataset_(dataset), net_(build_network<float>(net_cfg)), rng_(cfg.seed) {
    adam_.config.lr = cfg.lr;
    adam_.init(net_);
    for (std::size_t i = 0; i < dataset_.episodes.size(); ++i) {
        if (dataset_.meta.is_test[i]) continue;
        train_episode_indices_.push_back(static_cast<int>(i));
        train_lengths_.push_back(static_cast<int>(dataset_.episodes[i].size()));
    }
    if (dataset_.meta.image_h != net_cfg.input_h || dataset_.meta.image_w != net_cfg.input_w)
        throw ConfigError("dataset image size does not match network input size");
}

Trainer::Trainer(const LoadedCheckpoint& ckpt, const Dataset& dataset)
    : cfg_(ckpt.train_config), dataset_(dataset), net_(ckpt.net), adam_(ckpt.adam),
      rng_(ckpt.rng) {
    for (std::size_t i = 0; i < dataset_.episodes.size(); ++i) {
        if (dataset_.meta.is_test[i]) continue;
        train_episode_indices_.push_back(static_cast<int>(i));
        train_lengths_.push_back(static_cast<int>(dataset_.episodes[i].size()));
    }
    if (dataset_.meta.image_h != net_.config.input_h ||
        dataset_.meta.image_w != net_.config.input_w)
        throw ConfigError("dataset image size does not match checkpointed network");
}

double Trainer::train_update() {
    const int m = std::max(1, cfg_.batch_sequences);
    std::vector<Tensor> grad_sum;
    double loss_sum = 0;

    for (int b = 0; b < m; ++b) {
        SequenceSample s =
            sample_minibatch(train_lengths_, rng_, cfg_.seq_len, cfg_.burn_len);
        const Episode& ep = dataset_.episodes[train_episode_indices_[s.episode]];

        net_.reset_state();
        // burn-in: state accumulates, nothing enters the loss
        for (int f = s.burn_start; f < s.start; ++f)
            forward_frame(net_, normalize_rgb(ep.frames[f]));

        Tape<float> tape;
        TapedRun<float> run(tape, net_);
        int loss_acc = -1;
        for (int f = s.start; f < s.start + cfg_.seq_len; ++f) {
            const int out = run.step(normalize_rgb(ep.frames[f]));
            const int target = tape.leaf(normalize_depth_target(ep.depths[f]));
            const int frame_loss = tape.l1(target, out);
            loss_acc = loss_acc < 0 ? frame_loss : tape.add(loss_acc, frame_loss);
        }
        const int loss = tape.affine(loss_acc, 1.0f / static_cast<float>(cfg_.seq_len), 0.0f);
        const double loss_value = tape.value(loss).data[0];
        if (!std::isfinite(loss_value))
            throw NumericError("non-finite training loss at step " +
                               std::to_string(adam_.step + 1));
        loss_sum += loss_value;
        tape.backward(loss);

        if (grad_sum.empty()) {
            grad_sum.reserve(net_.params.size());
            for (std::size_t i = 0; i < net_.params.size(); ++i)
                grad_sum.push_back(tape.grad(run.param_id(i)));
        } else {
            for (std::size_t i = 0; i < net_.params.size(); ++i) {
                const Tensor& g = tape.grad(run.param_id(i));
                for (std::size_t k = 0; k < g.data.size(); ++k)
                    grad_sum[i].data[k] += g.data[k];
            }
        }
    }

    if (m > 1)
        for (auto& g : grad_sum)
            for (auto& v : g.data) v /= static_cast<float>(m);

    if (cfg_.lr_decay_every > 0 && adam_.step > 0 && adam_.step % cfg_.lr_decay_every == 0)
        adam_.config.lr *= cfg_.lr_decay;

    adam_step(net_, grad_sum, adam_);
    return loss_sum / m;
}

double Trainer::validation_loss() {
    double total = 0;
    long frames = 0;
    for (std::size_t i = 0; i < dataset_.episodes.size() && frames < cfg_.val_frames; ++i) {
        if (!dataset_.meta.is_test[i]) continue;
        const Episode& ep = dataset_.episodes[i];
        DepthNet replica = net_;  // never disturb the training states
        replica.reset_state();
        for (std::size_t f = 0; f < ep.size() && frames < cfg_.val_frames; ++f, ++frames) {
            Tensor pred = forward_frame(replica, normalize_rgb(ep.frames[f]));
            total += l1_loss(normalize_depth_target(ep.depths[f]), pred);
        }
    }
    return frames > 0 ? total / static_cast<double>(frames)
                      : std::numeric_limits<double>::quiet_NaN();
}

void Trainer::run(int updates) {
    if (updates <= 0) {
        updates = cfg_.max_updates > 0
                      ? cfg_.max_updates
                      : cfg_.epochs * updates_per_epoch(dataset_, cfg_.seq_len);
    }
    using clock = std::chrono::steady_clock;
    for (int u = 0; u < updates; ++u) {
        const auto t0 = clock::now();
        const double loss = train_update();
        LossRecord rec;
        rec.step = adam_.step;
        rec.train_loss = loss;
        rec.val_loss = std::numeric_limits<double>::quiet_NaN();
        if (cfg_.val_interval > 0 && adam_.step % cfg_.val_interval == 0)
            rec.val_loss = validation_loss();
        rec.wall_ms =
            std::chrono::duration<double, std::milli>(clock::now() - t0).count();
        history_.push_back(rec);
    }
}

void Trainer::save(const std::string& path) const {
    save_checkpoint(path, net_, adam_, rng_, cfg_);
}

}  // namespace grudepth
