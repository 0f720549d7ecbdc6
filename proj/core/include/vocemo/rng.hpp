#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace vocemo::rng {

// All randomness in the library flows through these helpers instead of the
// <random> distribution classes, whose algorithms are implementation-defined.
// This keeps seeded runs reproducible across standard libraries, which the
// frozen-seed tests and the byte-identical-output guarantees rely on.

using Engine = std::mt19937_64;

/// splitmix64 finalizer.
std::uint64_t mix(std::uint64_t x);

/// Derives an independent stream seed from a master seed, a record/item
/// index, and a stream tag (audio vs. labels vs. metadata).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t stream = 0);

/// Uniform double in [0, 1).
double uniform01(Engine& g);

/// Uniform double in [lo, hi).
double uniform(Engine& g, double lo, double hi);

/// Uniform integer in [lo, hi], inclusive.
int uniform_int(Engine& g, int lo, int hi);

/// Standard normal deviate (Box-Muller, one value per call).
double normal(Engine& g);

/// Index draw proportional to non-negative weights.
std::size_t categorical(Engine& g, const std::vector<double>& weights);

/// In-place Fisher-Yates shuffle.
template <typename T>
void shuffle(std::vector<T>& v, Engine& g) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(uniform_int(g, 0, static_cast<int>(i - 1)));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace vocemo::rng
