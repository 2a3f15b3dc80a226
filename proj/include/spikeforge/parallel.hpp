#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace spikeforge {

/**
 * @brief Runs fn(i) for i in [0, n) across worker threads.
 *
 * Work is split into contiguous chunks, so each index is processed exactly
 * once regardless of thread count. Callers must keep per-index outputs in
 * dedicated slots; any cross-index reduction belongs after the call, in a
 * fixed order, so results never depend on scheduling.
 *
 * threads == 0 picks std::thread::hardware_concurrency().
 */
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)> &fn,
                         std::size_t threads = 0)
{
	if (n == 0) {
		return;
	}
	if (threads == 0) {
		threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
	}
	threads = std::min(threads, n);
	if (threads <= 1) {
		for (std::size_t i = 0; i < n; i++) {
			fn(i);
		}
		return;
	}

	std::vector<std::thread> pool;
	std::exception_ptr error;
	std::mutex error_mutex;
	const std::size_t chunk = (n + threads - 1) / threads;
	for (std::size_t t = 0; t < threads; t++) {
		const std::size_t begin = t * chunk;
		const std::size_t end = std::min(n, begin + chunk);
		if (begin >= end) {
			break;
		}
		pool.emplace_back([&, begin, end]() {
			try {
				for (std::size_t i = begin; i < end; i++) {
					fn(i);
				}
			}
			catch (...) {
				std::lock_guard<std::mutex> lock(error_mutex);
				if (!error) {
					error = std::current_exception();
				}
			}
		});
	}
	for (auto &th : pool) {
		th.join();
	}
	if (error) {
		std::rethrow_exception(error);
	}
}

}  // namespace spikeforge
