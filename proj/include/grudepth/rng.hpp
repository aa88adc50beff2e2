#pragma once

#include <array>
#include <cstdint>

namespace grudepth {

// xoshiro256++ with splitmix64 seeding. Self-contained so the full
// generator state can be serialized into checkpoints and restored
// bit-exactly, which std::mt19937 does not make convenient.
class Rng {
public:
    Rng() : Rng(0) {}

    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : state_) {
            // splitmix64
            x += 0x9E3779B97F4A7C15ull;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
            z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
            word = z ^ (z >> 31);
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), n > 0.
    std::uint64_t uniform_int(std::uint64_t n) {
        // Lemire rejection-free-ish; modulo bias is irrelevant at these ranges
        // but keep it unbiased anyway.
        std::uint64_t x = next_u64();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        std::uint64_t l = static_cast<std::uint64_t>(m);
        if (l < n) {
            std::uint64_t t = -n % n;
            while (l < t) {
                x = next_u64();
                m = static_cast<__uint128_t>(x) * n;
                l = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    std::array<std::uint64_t, 4> state() const { return state_; }
    void set_state(const std::array<std::uint64_t, 4>& s) { state_ = s; }

    // Derive an independent stream, e.g. per episode or per trial.
    Rng fork(std::uint64_t stream) const {
        Rng child;
        child.state_ = state_;
        child.state_[0] ^= 0xD2B74407B1CE6E93ull * (stream + 1);
        child.state_[2] += stream;
        child.next_u64();
        child.next_u64();
        return child;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
};

}  // namespace grudepth
