#pragma once

#include <cstdint>
#include <string_view>

namespace graphleap {

// SplitMix64: fixed-algorithm 64-bit generator (Steele/Vigna). Chosen over any
// runtime-provided engine so that identical seeds give bitwise-identical
// streams on every platform.
class SplitMix64 {
  public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 24-bit mantissa so the f32 conversion is exact.
    float next_unit() { return static_cast<float>(next_u64() >> 40) * (1.0f / 16777216.0f); }

    // Uniform in [-1, 1).
    float next_signed_unit() { return 2.0f * next_unit() - 1.0f; }

    uint64_t next_below(uint64_t bound) { return next_u64() % bound; }

  private:
    uint64_t state_;
};

// FNV-1a, used both to hash graph topologies for traces and to derive
// independent RNG streams from (seed, name) pairs.
inline uint64_t fnv1a(const void* data, size_t len, uint64_t h = 0xCBF29CE484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline uint64_t fnv1a(std::string_view s, uint64_t h = 0xCBF29CE484222325ULL) {
    return fnv1a(s.data(), s.size(), h);
}

// Stream seed for a named tensor: decorrelates per-tensor streams so layout
// changes in one tensor never shift values in another.
inline uint64_t stream_seed(uint64_t seed, std::string_view name) {
    return fnv1a(&seed, sizeof(seed), fnv1a(name));
}

}  // namespace graphleap
