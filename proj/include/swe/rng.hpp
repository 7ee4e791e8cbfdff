#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include <boost/random/normal_distribution.hpp>

namespace swe {

/// Philox4x32-10 block function (Salmon et al., Random123).
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t(M0) * ctr[0];
        const std::uint64_t p1 = std::uint64_t(M1) * ctr[2];
        const auto hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
        const auto hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += W0;
        key[1] += W1;
    }
    return ctr;
}

/// Stream tags separate independent uses of the same (path, step) coordinates.
enum class StreamTag : std::uint32_t {
    noise = 1,
    synthetic_normal = 2,
    monte_carlo = 3,
};

/// Counter-based 64-bit generator for one (seed, path, step, tag) stream.
///
/// Block b of the stream is philox(ctr = {b, step, path, tag}, key = seed),
/// so the map (seed, path, step, tag) -> stream is injective for path, step
/// and tag below 2^32 and the draws do not depend on scheduling.
class PhiloxStream {
public:
    using result_type = std::uint64_t;

    PhiloxStream(std::uint64_t seed, std::uint32_t path, std::uint32_t step, StreamTag tag)
        : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)},
          step_(step), path_(path), tag_(static_cast<std::uint32_t>(tag)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (lane_ == 2) refill();
        return buffer_[lane_++];
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return double((*this)() >> 11) * 0x1p-53; }

private:
    void refill() {
        const auto out = philox4x32_10({block_++, step_, path_, tag_}, key_);
        buffer_[0] = (std::uint64_t(out[1]) << 32) | out[0];
        buffer_[1] = (std::uint64_t(out[3]) << 32) | out[2];
        lane_ = 0;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint32_t step_, path_, tag_;
    std::uint32_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int lane_ = 2;
};

/// Master seed plus the documented derivation of per-(path, step, tag) streams.
struct SeedPolicy {
    std::uint64_t master_seed = 0;

    PhiloxStream stream(std::uint64_t path, std::uint64_t step, StreamTag tag) const {
        if (path > 0xFFFFFFFFull || step > 0xFFFFFFFFull)
            throw std::out_of_range("path and step indices must fit in 32 bits");
        return PhiloxStream(master_seed, static_cast<std::uint32_t>(path),
                            static_cast<std::uint32_t>(step), tag);
    }
};

/// Standard normal sampler (Boost ziggurat: platform-independent code path).
class NormalSampler {
public:
    explicit NormalSampler(PhiloxStream stream) : stream_(stream) {}
    double operator()() { return dist_(stream_); }

private:
    PhiloxStream stream_;
    boost::random::normal_distribution<double> dist_{0.0, 1.0};
};

} // namespace swe
