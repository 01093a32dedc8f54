#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace ridesim {

// Seeded generator with platform-independent draws. The std distributions are
// implementation-defined, so conversions to doubles are done here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // Independent stream derived from (seed, tag) via splitmix64.
    static Rng stream(std::uint64_t seed, std::uint64_t tag) {
        std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (tag + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return Rng(z ^ (z >> 31));
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    // Index drawn from a discrete distribution given by its cumulative weights.
    std::size_t categorical(std::span<const double> cumulative) {
        const double u = uniform() * cumulative.back();
        std::size_t lo = 0, hi = cumulative.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (cumulative[mid] > u) hi = mid;
            else lo = mid + 1;
        }
        return lo;
    }

    std::uint64_t next() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

namespace stream_tag {
inline constexpr std::uint64_t kSampling = 1;
inline constexpr std::uint64_t kSynthetic = 2;
inline constexpr std::uint64_t kChoice = 3;
inline constexpr std::uint64_t kFleet = 4;
} // namespace stream_tag

} // namespace ridesim
