#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grudepth/autodiff.hpp"
#include "grudepth/ops.hpp"
#include "grudepth/rng.hpp"
#include "grudepth/tensor.hpp"

namespace grudepth {

enum class LayerKind { ConvLRelu, ConvGru, ConvTanh };

struct LayerSpec {
    std::string name;
    LayerKind kind;
    int kh, kw;
    int stride;
    int out_channels;
    bool reshape_before;  // depth-to-space (block 2) applied to the layer input
};

// Encoder / bottleneck / decoder layer stack. Four stride-2 encoder
// stages, four x2 reshapes in the decoder, tanh head with 3 channels.
inline std::vector<LayerSpec> base_layers() {
    return {
        {"E0", LayerKind::ConvLRelu, 3, 3, 2, 64, false},
        {"E1", LayerKind::ConvGru, 3, 3, 2, 256, false},
        {"E2", LayerKind::ConvGru, 3, 3, 2, 512, false},
        {"E3", LayerKind::ConvGru, 3, 3, 2, 512, false},
        {"D0", LayerKind::ConvLRelu, 1, 1, 1, 512, false},
        {"D1", LayerKind::ConvGru, 3, 3, 1, 512, true},
        {"D2", LayerKind::ConvGru, 3, 3, 1, 256, true},
        {"D3", LayerKind::ConvGru, 3, 3, 1, 256, true},
        {"D4", LayerKind::ConvGru, 3, 3, 1, 128, true},
        {"D5", LayerKind::ConvTanh, 1, 1, 1, 3, false},
    };
}

struct NetworkConfig {
    // width_scale = width_num / width_den, applied to every channel count
    // except the 3-channel head.
    int width_num = 1;
    int width_den = 1;
    int input_h = 64;
    int input_w = 64;
    LReluVariant lrelu_variant = LReluVariant::Standard;
    double lrelu_alpha = 0.1;
    std::uint64_t seed = 0;
};

inline constexpr int kReshapeBlock = 2;
inline constexpr int kInputChannels = 3;
inline constexpr int kSpatialDivisor = 16;  // four stride-2 encoder stages

template <typename T>
struct DepthNetT {
    struct Param {
        std::string name;
        TensorT<T> value;
    };

    // Resolved per-layer geometry for the configured input size.
    struct LayerPlan {
        LayerSpec spec;            // out_channels already width-scaled
        int in_channels;           // after any reshape
        ConvSpec input_conv;       // W* convolution
        ConvSpec state_conv;       // U* convolution (GRU only)
        int out_h, out_w;
        int gru_index = -1;        // index into states, -1 for non-GRU
        std::vector<int> param_indices;  // {W,b} or {Wz,Uz,bz,Wr,Ur,br,Wh,Uh,bh}
    };

    NetworkConfig config;
    std::vector<LayerPlan> plan;
    std::vector<Param> params;
    std::vector<TensorT<T>> states;  // per GRU layer; empty tensor = absent

    int num_gru_layers() const { return static_cast<int>(states.size()); }

    void reset_state() {
        for (auto& s : states) s = TensorT<T>();
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& p : params) n += p.value.numel();
        return n;
    }

    TensorT<T>* find_param(const std::string& name) {
        for (auto& p : params)
            if (p.name == name) return &p.value;
        return nullptr;
    }
};

using DepthNet = DepthNetT<float>;

inline int scaled_channels(int base, const NetworkConfig& cfg, const std::string& layer) {
    const long long num = static_cast<long long>(base) * cfg.width_num;
    if (cfg.width_num <= 0 || cfg.width_den <= 0)
        throw ConfigError("width_scale must be a positive rational");
    if (num % cfg.width_den != 0)
        throw ConfigError("width_scale " + std::to_string(cfg.width_num) + "/" +
                          std::to_string(cfg.width_den) + " does not divide channel count " +
                          std::to_string(base) + " of layer " + layer);
    const long long c = num / cfg.width_den;
    if (c <= 0) throw ConfigError("width_scale collapses layer " + layer + " to zero channels");
    return static_cast<int>(c);
}

template <typename T>
DepthNetT<T> build_network(const NetworkConfig& cfg) {
    if (cfg.input_h % kSpatialDivisor != 0 || cfg.input_w % kSpatialDivisor != 0)
        throw ConfigError("input size " + std::to_string(cfg.input_h) + "x" +
                          std::to_string(cfg.input_w) + " not divisible by " +
                          std::to_string(kSpatialDivisor));
    if (!(cfg.lrelu_alpha >= 0.0 && cfg.lrelu_alpha < 1.0))
        throw ConfigError("lrelu alpha must lie in [0,1)");

    DepthNetT<T> net;
    net.config = cfg;
    Rng rng(cfg.seed);

    int c = kInputChannels, h = cfg.input_h, w = cfg.input_w;
    int gru_count = 0;

    auto make_param = [&](const std::string& name, std::vector<int> shape, bool zero) {
        TensorT<T> t;
        if (zero) {
            t = TensorT<T>(shape);
        } else {
            // uniform +-sqrt(6/(fan_in+fan_out))
            const int kh = shape[2], kw = shape[3];
            const double fan_in = static_cast<double>(shape[1]) * kh * kw;
            const double fan_out = static_cast<double>(shape[0]) * kh * kw;
            const double bound = std::sqrt(6.0 / (fan_in + fan_out));
            t = TensorT<T>::uniform(shape, rng, static_cast<T>(-bound), static_cast<T>(bound));
        }
        net.params.push_back({name, std::move(t)});
        return static_cast<int>(net.params.size()) - 1;
    };

    for (const LayerSpec& base : base_layers()) {
        typename DepthNetT<T>::LayerPlan lp;
        lp.spec = base;
        const bool is_head = base.name == "D5";
        lp.spec.out_channels = is_head ? base.out_channels
                                       : scaled_channels(base.out_channels, cfg, base.name);

        if (base.reshape_before) {
            if (c % (kReshapeBlock * kReshapeBlock) != 0)
                throw ConfigError("width_scale breaks reshape divisibility before layer " +
                                  base.name + " (channels " + std::to_string(c) + ")");
            c /= kReshapeBlock * kReshapeBlock;
            h *= kReshapeBlock;
            w *= kReshapeBlock;
        }
        lp.in_channels = c;

        lp.input_conv = ConvSpec{base.kh, base.kw, base.stride, base.kh == 3 ? 1 : 0, c,
                                 lp.spec.out_channels};
        lp.out_h = lp.input_conv.out_h(h);
        lp.out_w = lp.input_conv.out_w(w);

        const int O = lp.spec.out_channels;
        if (base.kind == LayerKind::ConvGru) {
            // state convolution keeps the hidden state at output resolution
            lp.state_conv = ConvSpec{base.kh, base.kw, 1, base.kh == 3 ? 1 : 0, O, O};
            lp.gru_index = gru_count++;
            for (const char* gate : {"z", "r", "h"}) {
                lp.param_indices.push_back(
                    make_param(base.name + ".W" + gate, {O, c, base.kh, base.kw}, false));
                lp.param_indices.push_back(
                    make_param(base.name + ".U" + gate, {O, O, base.kh, base.kw}, false));
                lp.param_indices.push_back(make_param(base.name + ".b" + gate, {O}, true));
            }
        } else {
            lp.param_indices.push_back(
                make_param(base.name + ".W", {O, c, base.kh, base.kw}, false));
            lp.param_indices.push_back(make_param(base.name + ".b", {O}, true));
        }

        c = O;
        h = lp.out_h;
        w = lp.out_w;
        net.plan.push_back(std::move(lp));
    }

    if (c != kInputChannels || h != cfg.input_h || w != cfg.input_w)
        throw ConfigError("layer stack does not round-trip the input size");

    net.states.assign(gru_count, TensorT<T>());
    return net;
}

// One taped forward pass over a window of frames. Parameters and the
// incoming hidden states enter as leaves; states are chained across
// step() calls so gradients flow through the whole window (full BPTT).
// The prefix before the window is run on throwaway tapes, so nothing
// leaks into it.
template <typename T>
class TapedRun {
public:
    TapedRun(Tape<T>& tape, DepthNetT<T>& net) : tape_(tape), net_(net) {
        param_ids_.reserve(net.params.size());
        for (auto& p : net.params) param_ids_.push_back(tape_.leaf(p.value));
        init_states();
    }

    // Parameters already live on the tape (e.g. a gradient-check harness
    // owns the leaves); the net supplies only geometry and states.
    TapedRun(Tape<T>& tape, DepthNetT<T>& net, std::vector<int> param_ids)
        : tape_(tape), net_(net), param_ids_(std::move(param_ids)) {
        if (param_ids_.size() != net.params.size())
            throw ConfigError("TapedRun: parameter id count mismatch");
        init_states();
    }

    // frame: 3xHxW in [-1,1]; returns the tanh-head output node.
    int step(const TensorT<T>& frame) {
        if (frame.ndim() != 3 || frame.shape[0] != kInputChannels ||
            frame.shape[1] != net_.config.input_h || frame.shape[2] != net_.config.input_w)
            throw ShapeError("frame " + frame.shape_str() + " does not match configured input " +
                             std::to_string(net_.config.input_h) + "x" +
                             std::to_string(net_.config.input_w));
        int x = tape_.leaf(frame);
        for (const auto& lp : net_.plan) {
            if (lp.spec.reshape_before) x = tape_.depth_to_space(x, kReshapeBlock);
            switch (lp.spec.kind) {
                case LayerKind::ConvLRelu:
                    x = tape_.lrelu(conv_in(lp, x, 0, 1), static_cast<T>(net_.config.lrelu_alpha),
                                    net_.config.lrelu_variant);
                    break;
                case LayerKind::ConvTanh:
                    x = tape_.tanh(conv_in(lp, x, 0, 1));
                    break;
                case LayerKind::ConvGru:
                    x = gru_step(lp, x);
                    break;
            }
        }
        return x;
    }

    // Copies the window-final hidden states back into the network.
    void commit_states() {
        for (std::size_t g = 0; g < state_ids_.size(); ++g)
            net_.states[g] = tape_.value(state_ids_[g]);
    }

    int param_id(std::size_t i) const { return param_ids_[i]; }
    const std::vector<int>& param_ids() const { return param_ids_; }

private:
    void init_states() {
        state_ids_.assign(net_.states.size(), -1);
        for (const auto& lp : net_.plan) {
            if (lp.gru_index < 0) continue;
            TensorT<T>& s = net_.states[lp.gru_index];
            TensorT<T> init = s.empty()
                                  ? TensorT<T>({lp.spec.out_channels, lp.out_h, lp.out_w})
                                  : s;
            state_ids_[lp.gru_index] = tape_.leaf(std::move(init));
        }
    }

    int conv_in(const typename DepthNetT<T>::LayerPlan& lp, int x, int w_slot, int b_slot) {
        return tape_.conv2d(x, param_ids_[lp.param_indices[w_slot]],
                            flat_bias(lp.param_indices[b_slot]), lp.input_conv);
    }

    int gru_step(const typename DepthNetT<T>::LayerPlan& lp, int x) {
        const auto& pi = lp.param_indices;  // Wz,Uz,bz, Wr,Ur,br, Wh,Uh,bh
        int h = state_ids_[lp.gru_index];
        auto gate = [&](int w_idx, int u_idx, int b_idx, int state_in) {
            int wx = tape_.conv2d(x, param_ids_[pi[w_idx]], flat_bias(pi[b_idx]), lp.input_conv);
            int uh = tape_.conv2d(state_in, param_ids_[pi[u_idx]], -1, lp.state_conv);
            return tape_.add(wx, uh);
        };
        int z = tape_.sigmoid(gate(0, 1, 2, h));
        int r = tape_.sigmoid(gate(3, 4, 5, h));
        int h_cand = tape_.tanh(gate(6, 7, 8, tape_.mul(r, h)));
        int keep = tape_.mul(tape_.affine(z, T(-1), T(1)), h);
        int h_new = tape_.add(keep, tape_.mul(z, h_cand));
        state_ids_[lp.gru_index] = h_new;
        return h_new;
    }

    int flat_bias(int param_index) { return param_ids_[param_index]; }

    Tape<T>& tape_;
    DepthNetT<T>& net_;
    std::vector<int> param_ids_;
    std::vector<int> state_ids_;
};

// Stateful single-frame inference on a throwaway tape; GRU states are
// advanced in place.
template <typename T>
TensorT<T> forward_frame(DepthNetT<T>& net, const TensorT<T>& frame) {
    Tape<T> tape;
    TapedRun<T> run(tape, net);
    const int out = run.step(frame);
    run.commit_states();
    return tape.value(out);
}

template <typename T>
std::vector<TensorT<T>> forward_sequence(DepthNetT<T>& net,
                                         const std::vector<TensorT<T>>& frames) {
    if (frames.empty()) throw ConfigError("forward_sequence: empty frame list");
    std::vector<TensorT<T>> out;
    out.reserve(frames.size());
    for (const auto& f : frames) out.push_back(forward_frame(net, f));
    return out;
}

}  // namespace grudepth
