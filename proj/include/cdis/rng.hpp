#pragma once

#include <cstdint>

namespace cdis {

/// Counter-based random stream built on the SplitMix64 finalizer.
///
/// Output k of the stream for a given seed is
///   mix64(seed + (k + 1) * 0x9E3779B97F4A7C15)
/// where mix64 is the usual xor-shift/multiply chain with constants
/// 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB. Any index can be drawn
/// in O(1), so draws can be keyed by voxel index and the result is
/// independent of evaluation order.
inline std::uint64_t splitmix64_at(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t x = seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Uniform double in [0, 1) from the top 53 bits of the stream value.
inline double uniform01_at(std::uint64_t seed, std::uint64_t index) {
    return static_cast<double>(splitmix64_at(seed, index) >> 11) * 0x1.0p-53;
}

/// Sequential convenience wrapper over the counter stream.
class SplitMixStream {
public:
    explicit SplitMixStream(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t next_u64() { return splitmix64_at(seed_, counter_++); }
    double next_uniform01() { return uniform01_at(seed_, counter_++); }

    /// Uniform in [lo, hi).
    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_uniform01(); }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

} // namespace cdis
