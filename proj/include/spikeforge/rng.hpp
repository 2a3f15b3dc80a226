#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace spikeforge {

// std::mt19937_64 output is pinned by the standard; all distribution-level
// helpers are hand-rolled here so that seeded results are identical across
// platforms and standard libraries.

/// 64-bit avalanche mix (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

/// Derives an independent stream seed from a base seed and up to two indices.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

/// Uniform double in [0, 1) with 53 random bits.
double uniform_double(std::mt19937_64 &rng);

/// Uniform double in [lo, hi).
double uniform_range(std::mt19937_64 &rng, double lo, double hi);

/// Uniform integer in [0, n), n >= 1. Rejection sampling, no modulo bias.
std::uint64_t bounded(std::mt19937_64 &rng, std::uint64_t n);

/// Standard normal via Box-Muller (deterministic, one value per call pair).
double normal(std::mt19937_64 &rng);

/// In-place Fisher-Yates shuffle.
template <typename T>
void shuffle(std::vector<T> &v, std::mt19937_64 &rng)
{
	for (std::size_t i = v.size(); i > 1; i--) {
		std::size_t j = static_cast<std::size_t>(bounded(rng, i));
		std::swap(v[i - 1], v[j]);
	}
}

}  // namespace spikeforge
