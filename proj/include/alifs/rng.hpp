#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace alifs {

// Philox4x32-10 block function (Salmon et al., counter-based).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            key[0] += W0;
            key[1] += W1;
        }
        const std::uint64_t p0 = std::uint64_t(M0) * ctr[0];
        const std::uint64_t p1 = std::uint64_t(M1) * ctr[2];
        const auto hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
        const auto hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

// Purpose tags keep streams for different tasks disjoint under one seed.
enum class Purpose : std::uint32_t {
    Generic = 0,
    Shapes = 1,
    Chain = 2,
    Constants = 3,
    Gelfand = 4,
    Martingale = 5,
    Tilted = 6,
    Comparison = 7,
    MomentMC = 8,
    BoundCheck = 9,
    Identity = 10,
    Symmetry = 11,
};

inline std::uint64_t stream_id(Purpose p, std::uint64_t index) {
    return (std::uint64_t(p) << 40) ^ index;
}

// Counter-based stream: key = seed, counter = (block, stream id).
class RandomStream {
public:
    RandomStream() : RandomStream(0, 0) {}
    RandomStream(std::uint64_t seed, std::uint64_t stream)
        : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)}, stream_(stream) {}
    RandomStream(std::uint64_t seed, Purpose p, std::uint64_t index)
        : RandomStream(seed, stream_id(p, index)) {}

    std::uint64_t next_u64() {
        if (pos_ >= 4) refill();
        const std::uint64_t lo = buf_[pos_], hi = buf_[pos_ + 1];
        pos_ += 2;
        return lo | (hi << 32);
    }

    // Uniform on [0, 1).
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on the open interval (0, 1).
    double uniform_open() { return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    // Standard normal, Marsaglia polar method.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

    // Random sign, +1 or -1 with probability 1/2 each.
    double sign() { return (next_u64() >> 63) ? 1.0 : -1.0; }

    std::uint64_t blocks_used() const { return block_; }

private:
    void refill() {
        buf_ = philox4x32({std::uint32_t(block_), std::uint32_t(block_ >> 32), std::uint32_t(stream_),
                           std::uint32_t(stream_ >> 32)},
                          key_);
        ++block_;
        pos_ = 0;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace alifs
