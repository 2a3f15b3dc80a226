#pragma once

#include <cstdint>
#include <vector>

#include "spikeforge/net.hpp"
#include "spikeforge/tensor.hpp"

namespace spikeforge {

/// Minimal labeled image set, the unit of exchange between dataset loading and training.
struct LabeledSet {
	std::vector<Tensor> images;
	std::vector<std::size_t> labels;

	std::size_t size() const { return images.size(); }
};

struct Gradients {
	std::vector<Tensor> weights;
	std::vector<Tensor> biases;
	double loss = 0.0;
};

/// Cross-entropy loss of softmax(logits) against the label, plus analytic gradients.
Gradients backprop(const TrainedNetwork &net, const Tensor &input, std::size_t label);

/// Forward pass only; returns the cross-entropy loss.
double sample_loss(const TrainedNetwork &net, const Tensor &input, std::size_t label);

struct TrainOptions {
	double lr = 0.01;
	std::size_t epochs = 10;
	std::size_t batch_size = 16;
	std::uint64_t seed = 0;
	std::size_t threads = 0;  // 0 = hardware concurrency
	bool verbose = false;
};

/**
 * @brief Mini-batch SGD from a fresh seeded initialization.
 *
 * Deterministic for a fixed seed independent of thread count: per-sample
 * gradients are reduced in sample order. Returns the network with a
 * per-epoch mean loss trace in meta.epoch_losses.
 *
 * @throws std::invalid_argument on an empty dataset or batch_size == 0
 * @throws std::runtime_error naming the epoch if the loss goes non-finite
 */
TrainedNetwork train(const NetworkSpec &spec, const LabeledSet &train_set,
                     const TrainOptions &options, const LabeledSet *eval_set = nullptr);

double accuracy(const TrainedNetwork &net, const LabeledSet &set);

struct GradCheckOptions {
	double eps = 1e-4;
	/// 0 = check every parameter; otherwise a seeded random subset per tensor.
	std::size_t max_probes_per_tensor = 0;
	std::uint64_t probe_seed = 0;
};

/**
 * @brief Compares analytic gradients to central finite differences.
 *
 * Returns the worst relative error |g_a - g_fd| / max(|g_a|, |g_fd|, 1)
 * over all probed parameters. Probes whose +-eps evaluations land on
 * different ReLU activation patterns are skipped: the loss is only
 * piecewise smooth and a symmetric difference across a kink measures
 * nothing about either one-sided derivative.
 */
double gradient_check(const NetworkSpec &spec, const Tensor &input, std::size_t label,
                      const GradCheckOptions &options = {});

}  // namespace spikeforge
