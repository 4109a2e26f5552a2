#ifndef HOMM_RNG_HPP
#define HOMM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace homm {

// Small explicitly-seeded generator (splitmix64). The standard <random>
// engines and distributions are not bit-stable across implementations;
// everything reproducible in this library draws from this one instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Unbiased draw from {0, ..., n-1} via rejection.
    std::uint64_t bounded(std::uint64_t n) {
        const std::uint64_t threshold = (0ULL - n) % n;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) {
                return r % n;
            }
        }
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Standard normal via Box-Muller; the second deviate is cached.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = 1.0 - uniform01(); // (0, 1]
        const double u2 = uniform01();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        cached_ = radius * std::sin(angle);
        has_cached_ = true;
        return radius * std::cos(angle);
    }

    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

// Derives an independent substream seed from a base seed and a tag.
// Used to decouple weight init, batch shuffles, per-step index draws, and
// data generation from one run seed.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t tag) {
    Rng g(base);
    Rng h(g.next_u64() ^ (tag * 0xD1B54A32D192ED03ULL + 0x9E3779B97F4A7C15ULL));
    return h.next_u64();
}

} // namespace homm

#endif
