#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace dgen {

// Counter-based deterministic generator (splitmix64). Unlike the standard
// distributions, every operation here is fully specified, so draws reproduce
// bit-for-bit across platforms and runs. Streams are derived from
// (seed, counter) pairs, never from call order.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t state) : state_(state) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Unbiased draw in [0, n) via rejection of the tail of the 64-bit range.
    std::uint64_t bounded(std::uint64_t n) {
        std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            std::uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

    double uniform01() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    template <class T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t state_;
};

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Stream for one prompt call: a pure function of (seed, call_index), so
// concurrent execution order cannot change what any call draws.
inline SplitMix64 rng_for_call(std::uint64_t seed, std::uint64_t call_index) {
    return SplitMix64(mix64(seed ^ mix64(call_index + 0x9E3779B97F4A7C15ULL)));
}

// Stream for a named purpose outside the call loop (e.g. pool shuffling).
inline SplitMix64 rng_for_stream(std::uint64_t seed, std::uint64_t stream_tag) {
    return SplitMix64(mix64(seed + 0xD1B54A32D192ED03ULL * stream_tag));
}

inline std::uint64_t fnv1a64(const std::string_view text) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

} // namespace dgen
