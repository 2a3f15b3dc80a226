// Independent reference implementations the unit and acceptance suites check
// against. Everything here is deliberately written as plain quadruple loops
// and textbook formulas, sharing no code with the library paths under test.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "spikeforge/rng.hpp"
#include "spikeforge/stdp.hpp"
#include "spikeforge/tensor.hpp"

namespace oracles {

using spikeforge::Tensor;

inline Tensor conv2d_ref(const Tensor &in, const Tensor &w, const Tensor &b, std::size_t stride,
                         std::size_t pad)
{
	const std::size_t C = in.shape[0], H = in.shape[1], W = in.shape[2];
	const std::size_t K = w.shape[0], kh = w.shape[2], kw = w.shape[3];
	const std::size_t OH = (H + 2 * pad - kh) / stride + 1;
	const std::size_t OW = (W + 2 * pad - kw) / stride + 1;
	Tensor out({K, OH, OW});
	for (std::size_t k = 0; k < K; k++) {
		for (std::size_t oy = 0; oy < OH; oy++) {
			for (std::size_t ox = 0; ox < OW; ox++) {
				double acc = b[k];
				for (std::size_t c = 0; c < C; c++) {
					for (std::size_t dy = 0; dy < kh; dy++) {
						for (std::size_t dx = 0; dx < kw; dx++) {
							const long iy = static_cast<long>(oy * stride + dy) -
							                static_cast<long>(pad);
							const long ix = static_cast<long>(ox * stride + dx) -
							                static_cast<long>(pad);
							if (iy < 0 || iy >= static_cast<long>(H) || ix < 0 ||
							    ix >= static_cast<long>(W)) {
								continue;
							}
							acc += in.at(c, iy, ix) * w.at(k, c, dy, dx);
						}
					}
				}
				out.at(k, oy, ox) = acc;
			}
		}
	}
	return out;
}

inline Tensor avg_pool_ref(const Tensor &in, std::size_t size, std::size_t stride)
{
	const std::size_t C = in.shape[0], H = in.shape[1], W = in.shape[2];
	const std::size_t OH = (H - size) / stride + 1;
	const std::size_t OW = (W - size) / stride + 1;
	Tensor out({C, OH, OW});
	for (std::size_t c = 0; c < C; c++) {
		for (std::size_t oy = 0; oy < OH; oy++) {
			for (std::size_t ox = 0; ox < OW; ox++) {
				double acc = 0;
				for (std::size_t dy = 0; dy < size; dy++) {
					for (std::size_t dx = 0; dx < size; dx++) {
						acc += in.at(c, oy * stride + dy, ox * stride + dx);
					}
				}
				out.at(c, oy, ox) = acc / (static_cast<double>(size) * size);
			}
		}
	}
	return out;
}

inline Tensor dense_ref(const Tensor &in, const Tensor &w, const Tensor &b)
{
	const std::size_t M = w.shape[0], N = w.shape[1];
	Tensor out({M});
	for (std::size_t m = 0; m < M; m++) {
		double acc = b[m];
		for (std::size_t n = 0; n < N; n++) {
			acc += w.at(m, n) * in[n];
		}
		out[m] = acc;
	}
	return out;
}

/// Textbook two-pass Pearson: means first, then moments.
inline std::optional<double> pearson_ref(const std::vector<double> &x,
                                         const std::vector<double> &y)
{
	const double n = static_cast<double>(x.size());
	double mx = 0, my = 0;
	for (std::size_t i = 0; i < x.size(); i++) {
		mx += x[i];
		my += y[i];
	}
	mx /= n;
	my /= n;
	double sxx = 0, syy = 0, sxy = 0;
	for (std::size_t i = 0; i < x.size(); i++) {
		sxx += (x[i] - mx) * (x[i] - mx);
		syy += (y[i] - my) * (y[i] - my);
		sxy += (x[i] - mx) * (y[i] - my);
	}
	if (sxx == 0 || syy == 0) {
		return std::nullopt;
	}
	return sxy / std::sqrt(sxx * syy);
}

/// Sort-and-index nearest-rank percentile.
inline double percentile_ref(std::vector<double> v, double p)
{
	std::sort(v.begin(), v.end());
	std::size_t rank = static_cast<std::size_t>(
	    std::ceil(p / 100.0 * static_cast<double>(v.size())));
	rank = std::min(std::max<std::size_t>(rank, 1), v.size());
	return v[rank - 1];
}

/// Explicit all-pairs STDP window sum over two spike trains (steps * dt ms apart).
inline double stdp_all_pairs_ref(const std::vector<std::uint32_t> &pre,
                                 const std::vector<std::uint32_t> &post,
                                 const spikeforge::StdpParams &params, double dt_ms)
{
	double dw = 0.0;
	for (std::uint32_t tp : pre) {
		for (std::uint32_t tq : post) {
			const double delta =
			    (static_cast<double>(tq) - static_cast<double>(tp)) * dt_ms;
			if (delta > 0.0) {
				dw += params.a_plus * std::exp(-delta / params.tau_plus_ms);
			}
			else if (delta < 0.0) {
				dw -= params.a_minus * std::exp(delta / params.tau_minus_ms);
			}
		}
	}
	return dw;
}

inline Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64 &rng, double lo = -1.0,
                            double hi = 1.0)
{
	Tensor t(std::move(shape));
	for (auto &v : t.data) {
		v = spikeforge::uniform_range(rng, lo, hi);
	}
	return t;
}

inline std::vector<std::uint32_t> random_spike_train(std::mt19937_64 &rng, std::size_t steps,
                                                     double rate)
{
	std::vector<std::uint32_t> train;
	for (std::size_t t = 0; t < steps; t++) {
		if (spikeforge::uniform_double(rng) < rate) {
			train.push_back(static_cast<std::uint32_t>(t));
		}
	}
	return train;
}

}  // namespace oracles
