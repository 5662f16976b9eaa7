#pragma once

#include <cstdint>

namespace hetjb::rng {

// Counter-based splittable generator in the SplittableRandom style: the
// state advances by a fixed odd gamma and each output is a strong 64-bit
// mix of the counter. Streams for parallel work are derived by pure
// functions of (master seed, index), so any scheduling of the work sees
// the same draws. Distribution transforms are pinned (inverse-CDF normals,
// 53-bit uniforms) because the standard library's are implementation-defined.

inline constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

// Stafford "variant 13" finalizer of splitmix64.
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seed for the index-th child stream. Pure function: reproducible no matter
// which thread asks, in which order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return mix64(mix64(master ^ kGamma) + kGamma * (index + 1));
}

// Quantile of the standard normal (Wichura's AS241 via GSL); exposed for
// tests and for transforming uniforms outside Stream.
double inverse_normal_cdf(double p);

class Stream {
public:
    explicit Stream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += kGamma;
        return mix64(state_);
    }

    // Uniform on (0,1), 53-bit resolution, endpoints excluded.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal by inversion; one uniform per draw.
    double next_normal() { return inverse_normal_cdf(next_uniform()); }

private:
    std::uint64_t state_;
};

} // namespace hetjb::rng
