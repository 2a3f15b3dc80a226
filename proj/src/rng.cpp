#include "spikeforge/rng.hpp"

#include <cmath>

namespace spikeforge {

std::uint64_t mix64(std::uint64_t x)
{
	x += 0x9e3779b97f4a7c15ULL;
	x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
	x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
	return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b)
{
	return mix64(mix64(base ^ 0x853c49e6748fea9bULL) ^ mix64(a) ^ mix64(mix64(b)));
}

double uniform_double(std::mt19937_64 &rng)
{
	return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform_range(std::mt19937_64 &rng, double lo, double hi)
{
	return lo + (hi - lo) * uniform_double(rng);
}

std::uint64_t bounded(std::mt19937_64 &rng, std::uint64_t n)
{
	if (n == 0) {
		return 0;
	}
	const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
	std::uint64_t x;
	do {
		x = rng();
	} while (x >= limit);
	return x % n;
}

double normal(std::mt19937_64 &rng)
{
	// Box-Muller; u clamped away from 0 so log() stays finite.
	double u = uniform_double(rng);
	double v = uniform_double(rng);
	if (u < 1e-300) {
		u = 1e-300;
	}
	return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
}

}  // namespace spikeforge
