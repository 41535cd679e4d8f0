#pragma once

// Self-contained random number generation. The standard library's
// distribution objects are implementation-defined, so every draw here is
// hand-rolled on top of a fixed engine to make byte-identical runs possible
// across compilers and platforms.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cohortforge/errors.hpp"

namespace cohortforge {

// splitmix64 finalizer; used both for seed derivation and hashing small keys.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

// Stable derivation of the i-th child seed from a parent seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return mix64(seed + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

// Independent random streams per pipeline stage so adding draws to one stage
// never perturbs another.
enum class RngStream : std::uint64_t {
    factors = 0,
    visits = 1,
    mentions = 2,
    jitter = 3,
};

constexpr std::uint64_t stream_seed(std::uint64_t seed, RngStream s) noexcept {
    return derive_seed(seed, static_cast<std::uint64_t>(s));
}

// xoshiro256** engine (Blackman & Vigna), seeded through splitmix64 so that
// any 64-bit seed, including zero, produces a well-mixed state.
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept {
        std::uint64_t sm = seed;
        for (auto& word : state_) {
            sm += 0x9E3779B97F4A7C15ULL;
            word = mix64(sm);
        }
    }

    std::uint64_t next_u64() noexcept {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform double in [0, 1) with 53 bits of precision.
    double next_double() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, bound) without modulo bias.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) {
            throw RangeError("next_below: bound must be positive");
        }
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) {
                return r % bound;
            }
        }
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
};

// Inverse-CDF draw over explicitly ordered category probabilities. The last
// category absorbs any floating point shortfall.
inline std::size_t sample_categorical(std::span<const double> probabilities, Rng& rng) {
    if (probabilities.empty()) {
        throw RangeError("sample_categorical: empty probability vector");
    }
    const double u = rng.next_double();
    double cumulative = 0.0;
    for (std::size_t i = 0; i + 1 < probabilities.size(); ++i) {
        cumulative += probabilities[i];
        if (u < cumulative) {
            return i;
        }
    }
    return probabilities.size() - 1;
}

namespace detail {

// Poisson CDF inversion for a single uniform draw. For large means, the
// recursion splits the variate into two independent halves so the sequential
// search stays short and numerically stable.
inline std::uint64_t poisson_from_uniform(double lambda, double u) noexcept {
    double p = std::exp(-lambda);
    double cumulative = p;
    std::uint64_t k = 0;
    while (u >= cumulative && k < 10000) {
        ++k;
        p *= lambda / static_cast<double>(k);
        cumulative += p;
    }
    return k;
}

} // namespace detail

// Poisson draw via sequential CDF inversion; splits the mean recursively so
// the inversion loop never walks a long tail.
inline std::uint64_t sample_poisson(double lambda, Rng& rng) {
    if (lambda < 0.0 || !std::isfinite(lambda)) {
        throw RangeError("sample_poisson: mean must be finite and non-negative");
    }
    if (lambda == 0.0) {
        return 0;
    }
    std::uint64_t total = 0;
    while (lambda > 60.0) {
        const double half = lambda / 2.0;
        total += detail::poisson_from_uniform(half, rng.next_double());
        lambda -= half;
    }
    return total + detail::poisson_from_uniform(lambda, rng.next_double());
}

// Zero-truncated Poisson: P(K = k) proportional to Poisson(lambda) restricted
// to k >= 1. For small means the zero mass is folded into the uniform draw
// directly; for large means plain rejection is effectively free.
inline std::uint64_t sample_poisson_min1(double lambda, Rng& rng) {
    if (lambda <= 0.0 || !std::isfinite(lambda)) {
        throw RangeError("sample_poisson_min1: mean must be finite and positive");
    }
    if (lambda <= 60.0) {
        const double p0 = std::exp(-lambda);
        const double u = p0 + rng.next_double() * (1.0 - p0);
        const std::uint64_t k = detail::poisson_from_uniform(lambda, u);
        return k == 0 ? 1 : k;
    }
    for (;;) {
        const std::uint64_t k = sample_poisson(lambda, rng);
        if (k >= 1) {
            return k;
        }
    }
}

// In-place Fisher-Yates shuffle.
template <typename T>
void shuffle(std::vector<T>& values, Rng& rng) {
    if (values.size() < 2) {
        return;
    }
    for (std::size_t i = values.size() - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i + 1));
        std::swap(values[i], values[j]);
    }
}

// Uniform sample of `count` distinct indices from [0, population) in selection
// order (partial Fisher-Yates over an index table).
inline std::vector<std::size_t> sample_without_replacement(std::size_t population,
                                                           std::size_t count,
                                                           Rng& rng) {
    if (count > population) {
        throw RangeError("sample_without_replacement: requested more elements than available");
    }
    std::vector<std::size_t> indices(population);
    for (std::size_t i = 0; i < population; ++i) {
        indices[i] = i;
    }
    std::vector<std::size_t> picked;
    picked.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next_below(population - i));
        std::swap(indices[i], indices[j]);
        picked.push_back(indices[i]);
    }
    return picked;
}

} // namespace cohortforge
