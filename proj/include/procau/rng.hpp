#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace procau {

// Self-contained deterministic RNG. std::uniform_int_distribution and
// friends are implementation-defined, so every sampled artifact in this
// project goes through this generator to keep runs byte-identical across
// compilers and platforms.
//
// Core is splitmix64 (Steele et al.), which is also used to mix (seed,
// stream, step) tuples into independent substreams.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        // One splitmix64 round over a combined word.
        std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform integer in [0, n). Rejection sampling, unbiased.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    // Uniform double in [0, 1) with 53 bits.
    double real01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * real01(); }

    double gaussian(double mean = 0.0, double stddev = 1.0) {
        // Box-Muller, no cached spare so the draw count stays predictable.
        double u1 = real01();
        while (u1 <= 0.0) u1 = real01();
        const double u2 = real01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

    // k distinct indices drawn from [0, n), in draw order.
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

private:
    std::uint64_t state_;
};

// A seed stream: hands out one independent RNG per (stream label, step).
// Owned by the trainer; operators receive a ready-made Rng so that each
// optimization step sees fresh, reproducible randomness.
class SeedStream {
public:
    SeedStream(std::uint64_t base_seed, std::uint64_t stream_id)
        : base_(Rng::mix(base_seed, stream_id)) {}

    Rng at(std::uint64_t step) const { return Rng(Rng::mix(base_, step)); }

    Rng next() { return at(counter_++); }

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t base_;
    std::uint64_t counter_ = 0;
};

} // namespace procau
