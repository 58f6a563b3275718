#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "qdet/special.hpp"

namespace qdet {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11), fixed here
// as the project-wide RNG so every estimate is bit-reproducible across
// platforms and thread counts. Round constants 0xD2511F53 / 0xCD9E8D57,
// Weyl keys 0x9E3779B9 / 0xBB67AE85, 10 rounds.
struct Philox4x32 {
    static std::array<std::uint32_t, 4> block(std::uint32_t k0, std::uint32_t k1,
                                              std::array<std::uint32_t, 4> ctr) {
        auto mulhilo = [](std::uint32_t a, std::uint32_t b, std::uint32_t& hi) {
            std::uint64_t p = static_cast<std::uint64_t>(a) * b;
            hi = static_cast<std::uint32_t>(p >> 32);
            return static_cast<std::uint32_t>(p);
        };
        for (int round = 0; round < 10; ++round) {
            std::uint32_t hi0, hi1;
            std::uint32_t lo0 = mulhilo(0xD2511F53u, ctr[0], hi0);
            std::uint32_t lo1 = mulhilo(0xCD9E8D57u, ctr[2], hi1);
            ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        return ctr;
    }
};

// A deterministic substream: (seed, stream) select an independent sequence;
// draws advance a 64-bit block counter. Streams never overlap.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

    std::uint32_t next_u32() {
        if (idx_ == 4) refill();
        return buf_[idx_++];
    }

    std::uint64_t next_u64() {
        std::uint64_t lo = next_u32();
        std::uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    // Uniform on (0, 1]: safe under log().
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1p-53;
    }

    // Uniform on (0, 1): safe under the inverse normal CDF.
    double uniform_open() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
    }

    double normal() { return inverse_normal_cdf(uniform_open()); }

    double exponential(double rate) { return -std::log(uniform01()) / rate; }

  private:
    void refill() {
        std::array<std::uint32_t, 4> ctr = {
            static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
            static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
        buf_ = Philox4x32::block(static_cast<std::uint32_t>(seed_),
                                 static_cast<std::uint32_t>(seed_ >> 32), ctr);
        ++block_;
        idx_ = 0;
    }

    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int idx_ = 4;
};

}  // namespace qdet
