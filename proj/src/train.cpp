#include "spikeforge/train.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include "spikeforge/parallel.hpp"
#include "spikeforge/rng.hpp"

namespace spikeforge {

namespace {

double cross_entropy_from_logits(const Tensor &logits, std::size_t label)
{
	double mx = -HUGE_VAL;
	for (double v : logits.data) {
		mx = std::max(mx, v);
	}
	double sum = 0.0;
	for (double v : logits.data) {
		sum += std::exp(v - mx);
	}
	return std::log(sum) + mx - logits[label];
}

Tensor conv2d_backward(const Tensor &input, const Tensor &weights, std::size_t stride,
                       std::size_t padding, const Tensor &grad_out, Tensor &grad_w,
                       Tensor &grad_b)
{
	const std::size_t C = input.shape[0], H = input.shape[1], W = input.shape[2];
	const std::size_t K = weights.shape[0], kh = weights.shape[2], kw = weights.shape[3];
	const std::size_t OH = grad_out.shape[1], OW = grad_out.shape[2];
	const long pad = static_cast<long>(padding);

	Tensor grad_in({C, H, W});
	for (std::size_t k = 0; k < K; k++) {
		for (std::size_t oy = 0; oy < OH; oy++) {
			for (std::size_t ox = 0; ox < OW; ox++) {
				const double g = grad_out.at(k, oy, ox);
				if (g == 0.0) {
					continue;
				}
				grad_b[k] += g;
				const long iy0 = static_cast<long>(oy * stride) - pad;
				const long ix0 = static_cast<long>(ox * stride) - pad;
				for (std::size_t c = 0; c < C; c++) {
					for (std::size_t dy = 0; dy < kh; dy++) {
						const long iy = iy0 + static_cast<long>(dy);
						if (iy < 0 || iy >= static_cast<long>(H)) {
							continue;
						}
						for (std::size_t dx = 0; dx < kw; dx++) {
							const long ix = ix0 + static_cast<long>(dx);
							if (ix < 0 || ix >= static_cast<long>(W)) {
								continue;
							}
							const double x = input.at(c, static_cast<std::size_t>(iy),
							                          static_cast<std::size_t>(ix));
							grad_w.at(k, c, dy, dx) += g * x;
							grad_in.at(c, static_cast<std::size_t>(iy),
							           static_cast<std::size_t>(ix)) +=
							    g * weights.at(k, c, dy, dx);
						}
					}
				}
			}
		}
	}
	return grad_in;
}

Tensor avg_pool_backward(const std::vector<std::size_t> &in_shape, std::size_t size,
                         std::size_t stride, const Tensor &grad_out)
{
	const std::size_t C = in_shape[0];
	const std::size_t OH = grad_out.shape[1], OW = grad_out.shape[2];
	const double inv = 1.0 / (static_cast<double>(size) * static_cast<double>(size));
	Tensor grad_in({in_shape[0], in_shape[1], in_shape[2]});
	for (std::size_t c = 0; c < C; c++) {
		for (std::size_t oy = 0; oy < OH; oy++) {
			for (std::size_t ox = 0; ox < OW; ox++) {
				const double g = grad_out.at(c, oy, ox) * inv;
				for (std::size_t dy = 0; dy < size; dy++) {
					for (std::size_t dx = 0; dx < size; dx++) {
						grad_in.at(c, oy * stride + dy, ox * stride + dx) += g;
					}
				}
			}
		}
	}
	return grad_in;
}

}  // namespace

Gradients backprop(const TrainedNetwork &net, const Tensor &input, std::size_t label)
{
	const std::size_t L = net.spec.layers.size();
	if (label >= net.spec.output_classes()) {
		throw std::invalid_argument("backprop: label " + std::to_string(label) +
		                            " out of range for " +
		                            std::to_string(net.spec.output_classes()) + " classes");
	}

	// Forward, caching each layer's input and pre-activation output.
	std::vector<Tensor> layer_inputs(L);
	std::vector<Tensor> pre_activations(L);
	Tensor cur = input;
	for (std::size_t i = 0; i < L; i++) {
		const LayerSpec &l = net.spec.layers[i];
		layer_inputs[i] = cur;
		switch (l.kind) {
			case LayerKind::Conv2d:
				cur = conv2d_forward(cur, net.weights[i], net.biases[i], l.stride, l.padding);
				break;
			case LayerKind::AvgPool:
				cur = avg_pool_forward(cur, l.pool_size, l.pool_stride);
				break;
			case LayerKind::Flatten:
				cur.shape = {cur.numel()};
				break;
			case LayerKind::Dense:
				cur = dense_forward(cur, net.weights[i], net.biases[i]);
				break;
		}
		pre_activations[i] = cur;
		if (i + 1 < L && (l.kind == LayerKind::Conv2d || l.kind == LayerKind::Dense)) {
			cur = relu(cur);
		}
	}

	Gradients grads;
	grads.loss = cross_entropy_from_logits(pre_activations[L - 1], label);
	grads.weights.resize(L);
	grads.biases.resize(L);
	for (std::size_t i = 0; i < L; i++) {
		if (net.spec.layers[i].has_params()) {
			grads.weights[i] = Tensor(net.weights[i].shape);
			grads.biases[i] = Tensor(net.biases[i].shape);
		}
	}

	// d(loss)/d(logits) = softmax - onehot
	Tensor grad = softmax(pre_activations[L - 1]);
	grad[label] -= 1.0;

	for (std::size_t ii = L; ii-- > 0;) {
		const LayerSpec &l = net.spec.layers[ii];
		if (ii + 1 < L && (l.kind == LayerKind::Conv2d || l.kind == LayerKind::Dense)) {
			// ReLU mask on this layer's pre-activation
			for (std::size_t j = 0; j < grad.numel(); j++) {
				if (pre_activations[ii][j] <= 0.0) {
					grad[j] = 0.0;
				}
			}
		}
		switch (l.kind) {
			case LayerKind::Conv2d: {
				grad.shape = pre_activations[ii].shape;
				grad = conv2d_backward(layer_inputs[ii], net.weights[ii], l.stride, l.padding,
				                       grad, grads.weights[ii], grads.biases[ii]);
				break;
			}
			case LayerKind::AvgPool:
				grad.shape = pre_activations[ii].shape;
				grad = avg_pool_backward(layer_inputs[ii].shape, l.pool_size, l.pool_stride,
				                         grad);
				break;
			case LayerKind::Flatten:
				grad.shape = layer_inputs[ii].shape;
				break;
			case LayerKind::Dense: {
				const Tensor &x = layer_inputs[ii];
				const std::size_t M = net.weights[ii].shape[0], N = net.weights[ii].shape[1];
				Tensor grad_in({N});
				for (std::size_t m = 0; m < M; m++) {
					const double g = grad[m];
					grads.biases[ii][m] += g;
					if (g == 0.0) {
						continue;
					}
					const double *row = net.weights[ii].data.data() + m * N;
					double *gw = grads.weights[ii].data.data() + m * N;
					for (std::size_t n = 0; n < N; n++) {
						gw[n] += g * x[n];
						grad_in[n] += g * row[n];
					}
				}
				grad_in.shape = layer_inputs[ii].shape;
				grad = std::move(grad_in);
				break;
			}
		}
	}
	return grads;
}

double sample_loss(const TrainedNetwork &net, const Tensor &input, std::size_t label)
{
	return cross_entropy_from_logits(forward_all(net, input).logits, label);
}

namespace {

// Loss plus an FNV-1a hash of the ReLU activation pattern. Central
// differences are only meaningful while the active set stays fixed.
double loss_with_pattern(const TrainedNetwork &net, const Tensor &input, std::size_t label,
                         std::uint64_t &pattern)
{
	pattern = 1469598103934665603ULL;
	const std::size_t L = net.spec.layers.size();
	Tensor cur = input;
	for (std::size_t i = 0; i < L; i++) {
		const LayerSpec &l = net.spec.layers[i];
		switch (l.kind) {
			case LayerKind::Conv2d:
				cur = conv2d_forward(cur, net.weights[i], net.biases[i], l.stride, l.padding);
				break;
			case LayerKind::AvgPool:
				cur = avg_pool_forward(cur, l.pool_size, l.pool_stride);
				break;
			case LayerKind::Flatten:
				cur.shape = {cur.numel()};
				break;
			case LayerKind::Dense:
				cur = dense_forward(cur, net.weights[i], net.biases[i]);
				break;
		}
		if (i + 1 < L && (l.kind == LayerKind::Conv2d || l.kind == LayerKind::Dense)) {
			for (auto &v : cur.data) {
				pattern = (pattern ^ (v > 0.0 ? 0x9dULL : 0x31ULL)) * 1099511628211ULL;
				v = std::max(0.0, v);
			}
		}
	}
	return cross_entropy_from_logits(cur, label);
}

}  // namespace

TrainedNetwork train(const NetworkSpec &spec, const LabeledSet &train_set,
                     const TrainOptions &options, const LabeledSet *eval_set)
{
	if (train_set.size() == 0) {
		throw std::invalid_argument("train: empty dataset");
	}
	if (train_set.images.size() != train_set.labels.size()) {
		throw std::invalid_argument("train: images/labels length mismatch");
	}
	if (options.batch_size == 0) {
		throw std::invalid_argument("train: batch_size must be >= 1");
	}

	TrainedNetwork net = init_network(spec, options.seed);
	net.meta.epochs = options.epochs;

	std::mt19937_64 shuffle_rng(derive_seed(options.seed, 0x5A5A5A));
	std::vector<std::size_t> order(train_set.size());
	std::iota(order.begin(), order.end(), 0);

	const std::size_t n_params = spec.layers.size();
	for (std::size_t epoch = 0; epoch < options.epochs; epoch++) {
		shuffle(order, shuffle_rng);
		double loss_sum = 0.0;
		for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
			const std::size_t bsz = std::min(options.batch_size, order.size() - start);
			std::vector<Gradients> slots(bsz);
			parallel_for(
			    bsz,
			    [&](std::size_t i) {
				    const std::size_t s = order[start + i];
				    slots[i] = backprop(net, train_set.images[s], train_set.labels[s]);
			    },
			    options.threads);

			// Reduce in sample order, then one SGD step with the batch mean.
			const double scale = options.lr / static_cast<double>(bsz);
			for (std::size_t i = 1; i < bsz; i++) {
				for (std::size_t p = 0; p < n_params; p++) {
					for (std::size_t j = 0; j < slots[0].weights[p].numel(); j++) {
						slots[0].weights[p][j] += slots[i].weights[p][j];
					}
					for (std::size_t j = 0; j < slots[0].biases[p].numel(); j++) {
						slots[0].biases[p][j] += slots[i].biases[p][j];
					}
				}
				slots[0].loss += slots[i].loss;
			}
			loss_sum += slots[0].loss;
			if (!std::isfinite(slots[0].loss)) {
				throw std::runtime_error("train: non-finite loss at epoch " +
				                         std::to_string(epoch));
			}
			for (std::size_t p = 0; p < n_params; p++) {
				for (std::size_t j = 0; j < net.weights[p].numel(); j++) {
					net.weights[p][j] -= scale * slots[0].weights[p][j];
				}
				for (std::size_t j = 0; j < net.biases[p].numel(); j++) {
					net.biases[p][j] -= scale * slots[0].biases[p][j];
				}
			}
		}
		const double mean_loss = loss_sum / static_cast<double>(train_set.size());
		if (!std::isfinite(mean_loss)) {
			throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
		}
		net.meta.epoch_losses.push_back(mean_loss);
		if (options.verbose) {
			std::cerr << "epoch " << epoch << ": mean loss " << mean_loss << "\n";
		}
	}

	net.meta.final_train_accuracy = accuracy(net, train_set);
	if (eval_set && eval_set->size() > 0) {
		net.meta.final_test_accuracy = accuracy(net, *eval_set);
	}
	return net;
}

double accuracy(const TrainedNetwork &net, const LabeledSet &set)
{
	if (set.size() == 0) {
		return 0.0;
	}
	std::vector<uint8_t> hit(set.size(), 0);
	parallel_for(set.size(), [&](std::size_t i) {
		hit[i] = predict_class(net, set.images[i]) == set.labels[i] ? 1 : 0;
	});
	std::size_t correct = 0;
	for (auto h : hit) {
		correct += h;
	}
	return static_cast<double>(correct) / static_cast<double>(set.size());
}

double gradient_check(const NetworkSpec &spec, const Tensor &input, std::size_t label,
                      const GradCheckOptions &options)
{
	if (!(options.eps > 0.0 && options.eps <= 1e-2)) {
		throw std::invalid_argument("gradient_check: eps must be in (0, 1e-2]");
	}
	TrainedNetwork net = init_network(spec, derive_seed(options.probe_seed, 0x6052AD));
	Gradients analytic = backprop(net, input, label);

	std::mt19937_64 probe_rng(derive_seed(options.probe_seed, 0xF1D0));
	double worst = 0.0;
	auto check_tensor = [&](Tensor &param, const Tensor &grad) {
		const std::size_t n = param.numel();
		std::vector<std::size_t> idx;
		if (options.max_probes_per_tensor == 0 || options.max_probes_per_tensor >= n) {
			idx.resize(n);
			std::iota(idx.begin(), idx.end(), 0);
		}
		else {
			for (std::size_t i = 0; i < options.max_probes_per_tensor; i++) {
				idx.push_back(static_cast<std::size_t>(bounded(probe_rng, n)));
			}
		}
		for (std::size_t j : idx) {
			const double saved = param[j];
			std::uint64_t pattern_p = 0, pattern_m = 0;
			param[j] = saved + options.eps;
			const double fp = loss_with_pattern(net, input, label, pattern_p);
			param[j] = saved - options.eps;
			const double fm = loss_with_pattern(net, input, label, pattern_m);
			param[j] = saved;
			if (pattern_p != pattern_m) {
				continue;  // probe straddles a ReLU kink; the symmetric difference is invalid there
			}
			const double fd = (fp - fm) / (2.0 * options.eps);
			const double ga = grad[j];
			const double err =
			    std::abs(ga - fd) / std::max({std::abs(ga), std::abs(fd), 1.0});
			worst = std::max(worst, err);
		}
	};

	for (std::size_t p = 0; p < spec.layers.size(); p++) {
		if (!spec.layers[p].has_params()) {
			continue;
		}
		check_tensor(net.weights[p], analytic.weights[p]);
		check_tensor(net.biases[p], analytic.biases[p]);
	}
	return worst;
}

}  // namespace spikeforge
