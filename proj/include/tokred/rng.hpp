#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace tokred {

// Deterministic pseudorandom source used for weight init and synthetic
// inputs. The scheme is fixed: splitmix64 state updates, uniforms from
// the top 53 bits, gaussians via Box-Muller (cosine branch only). Two
// calls with the same seed produce bit-identical streams on any libm
// that rounds exp/log/cos faithfully; within one binary the stream is
// always reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_uniform(); }

    // standard normal
    double next_gaussian() {
        double u1 = next_uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;  // avoid log(0)
        const double u2 = next_uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

private:
    std::uint64_t state_;
};

// FNV-1a over arbitrary bytes; used both for stream derivation and for
// kept-index digests in reports.
inline std::uint64_t fnv1a64(const void* bytes, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

// Independent named substream of a run seed: rng_stream(seed, "params")
// and rng_stream(seed, "input") never collide for distinct tags.
inline Rng rng_stream(std::uint64_t seed, std::string_view tag) {
    return Rng(seed ^ fnv1a64(tag));
}

}  // namespace tokred
