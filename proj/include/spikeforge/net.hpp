#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spikeforge/tensor.hpp"

namespace spikeforge {

enum class LayerKind { Conv2d, AvgPool, Flatten, Dense };

/**
 * @brief Descriptor for one layer of the classifier.
 *
 * Hidden Conv2d/Dense layers carry an implicit ReLU; the final layer feeds a
 * softmax. AvgPool and Flatten have no parameters and no activation.
 */
struct LayerSpec {
	LayerKind kind = LayerKind::Dense;
	// Conv2d
	std::size_t out_channels = 0;
	std::size_t kernel_h = 0, kernel_w = 0;
	std::size_t stride = 1, padding = 0;
	// AvgPool
	std::size_t pool_size = 0, pool_stride = 0;
	// Dense
	std::size_t units = 0;

	static LayerSpec conv2d(std::size_t out_ch, std::size_t kh, std::size_t kw,
	                        std::size_t stride = 1, std::size_t padding = 0);
	static LayerSpec avg_pool(std::size_t size, std::size_t stride);
	static LayerSpec flatten();
	static LayerSpec dense(std::size_t units);

	bool has_params() const { return kind == LayerKind::Conv2d || kind == LayerKind::Dense; }
	std::string name(std::size_t index) const;
};

std::string layer_kind_name(LayerKind kind);

/**
 * @brief Ordered layer topology plus the input shape it expects.
 */
struct NetworkSpec {
	std::vector<std::size_t> input_shape;  // {C, H, W} or {N}
	std::vector<LayerSpec> layers;

	/**
	 * The default topology: two convolutional layers, two average-pooling
	 * layers and three dense layers, sized for small grayscale inputs.
	 */
	static NetworkSpec default_gesture_net(std::size_t height = 32, std::size_t width = 32,
	                                       std::size_t classes = 10,
	                                       std::size_t conv1_channels = 16,
	                                       std::size_t conv2_channels = 32,
	                                       std::size_t dense1_units = 128,
	                                       std::size_t dense2_units = 64);

	/**
	 * @brief Output shape after each layer; validates shape chaining.
	 * @throws std::invalid_argument on any inconsistent consecutive shapes.
	 */
	std::vector<std::vector<std::size_t>> layer_output_shapes() const;

	std::size_t output_classes() const;
};

struct TrainingMeta {
	std::size_t epochs = 0;
	double final_train_accuracy = 0.0;
	double final_test_accuracy = -1.0;  // -1 = no eval set supplied
	std::uint64_t seed = 0;
	std::vector<double> epoch_losses;
};

/**
 * @brief A NetworkSpec together with its learned parameters.
 *
 * weights[i]/biases[i] are empty tensors for layers without parameters, so
 * indices line up with spec.layers.
 */
struct TrainedNetwork {
	NetworkSpec spec;
	std::vector<Tensor> weights;
	std::vector<Tensor> biases;
	TrainingMeta meta;
};

// --- single-layer forward kernels ---

/**
 * @brief Cross-correlation convolution.
 *
 * input [C,H,W], weights [K,C,kh,kw], bias [K]; output [K,H',W'] with
 * H' = (H + 2*padding - kh)/stride + 1, which must divide evenly.
 */
Tensor conv2d_forward(const Tensor &input, const Tensor &weights, const Tensor &bias,
                      std::size_t stride, std::size_t padding);

/// Mean over non-overlapping (or strided) windows; windows must tile the input.
Tensor avg_pool_forward(const Tensor &input, std::size_t size, std::size_t stride);

/// out[m] = sum_n weights[m,n] * input[n] + bias[m].
Tensor dense_forward(const Tensor &input, const Tensor &weights, const Tensor &bias);

Tensor relu(const Tensor &input);

/// Numerically stable softmax over the flattened input.
Tensor softmax(const Tensor &input);

// --- whole-network forward ---

struct ForwardTrace {
	/// Post-activation output of every layer; the final entry is softmax probabilities.
	std::vector<Tensor> activations;
	/// Pre-softmax output of the final layer.
	Tensor logits;
};

ForwardTrace forward_all(const TrainedNetwork &net, const Tensor &input);

std::size_t argmax(const Tensor &t);

std::size_t predict_class(const TrainedNetwork &net, const Tensor &input);

/// Fresh network with uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases.
TrainedNetwork init_network(const NetworkSpec &spec, std::uint64_t seed);

}  // namespace spikeforge
