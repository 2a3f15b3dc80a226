#include "spikeforge/net.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spikeforge/rng.hpp"

namespace spikeforge {

LayerSpec LayerSpec::conv2d(std::size_t out_ch, std::size_t kh, std::size_t kw,
                            std::size_t stride, std::size_t padding)
{
	LayerSpec s;
	s.kind = LayerKind::Conv2d;
	s.out_channels = out_ch;
	s.kernel_h = kh;
	s.kernel_w = kw;
	s.stride = stride;
	s.padding = padding;
	return s;
}

LayerSpec LayerSpec::avg_pool(std::size_t size, std::size_t stride)
{
	LayerSpec s;
	s.kind = LayerKind::AvgPool;
	s.pool_size = size;
	s.pool_stride = stride;
	return s;
}

LayerSpec LayerSpec::flatten()
{
	LayerSpec s;
	s.kind = LayerKind::Flatten;
	return s;
}

LayerSpec LayerSpec::dense(std::size_t units)
{
	LayerSpec s;
	s.kind = LayerKind::Dense;
	s.units = units;
	return s;
}

std::string layer_kind_name(LayerKind kind)
{
	switch (kind) {
		case LayerKind::Conv2d:
			return "conv2d";
		case LayerKind::AvgPool:
			return "avg_pool";
		case LayerKind::Flatten:
			return "flatten";
		case LayerKind::Dense:
			return "dense";
	}
	return "?";
}

std::string LayerSpec::name(std::size_t index) const
{
	return layer_kind_name(kind) + "_" + std::to_string(index);
}

NetworkSpec NetworkSpec::default_gesture_net(std::size_t height, std::size_t width,
                                             std::size_t classes, std::size_t conv1_channels,
                                             std::size_t conv2_channels,
                                             std::size_t dense1_units, std::size_t dense2_units)
{
	NetworkSpec spec;
	spec.input_shape = {1, height, width};
	spec.layers = {
	    LayerSpec::conv2d(conv1_channels, 3, 3, 1, 1),
	    LayerSpec::avg_pool(2, 2),
	    LayerSpec::conv2d(conv2_channels, 3, 3, 1, 1),
	    LayerSpec::avg_pool(2, 2),
	    LayerSpec::flatten(),
	    LayerSpec::dense(dense1_units),
	    LayerSpec::dense(dense2_units),
	    LayerSpec::dense(classes),
	};
	return spec;
}

namespace {

std::size_t conv_out_dim(std::size_t in, std::size_t pad, std::size_t k, std::size_t stride,
                         const char *what)
{
	if (k == 0 || stride == 0) {
		throw std::invalid_argument(std::string(what) + ": kernel and stride must be >= 1");
	}
	const std::size_t padded = in + 2 * pad;
	if (k > padded) {
		throw std::invalid_argument(std::string(what) + ": kernel size " + std::to_string(k) +
		                            " exceeds padded input extent " + std::to_string(padded));
	}
	if ((padded - k) % stride != 0) {
		throw std::invalid_argument(std::string(what) + ": (in + 2*pad - k) = " +
		                            std::to_string(padded - k) +
		                            " is not divisible by stride " + std::to_string(stride));
	}
	return (padded - k) / stride + 1;
}

}  // namespace

std::vector<std::vector<std::size_t>> NetworkSpec::layer_output_shapes() const
{
	std::vector<std::vector<std::size_t>> shapes;
	std::vector<std::size_t> cur = input_shape;
	for (std::size_t i = 0; i < layers.size(); i++) {
		const LayerSpec &l = layers[i];
		const std::string where = l.name(i);
		switch (l.kind) {
			case LayerKind::Conv2d: {
				if (cur.size() != 3) {
					throw std::invalid_argument(where + ": expects [C,H,W] input, got " +
					                            shape_str(cur));
				}
				std::size_t oh = conv_out_dim(cur[1], l.padding, l.kernel_h, l.stride,
				                              where.c_str());
				std::size_t ow = conv_out_dim(cur[2], l.padding, l.kernel_w, l.stride,
				                              where.c_str());
				cur = {l.out_channels, oh, ow};
				break;
			}
			case LayerKind::AvgPool: {
				if (cur.size() != 3) {
					throw std::invalid_argument(where + ": expects [C,H,W] input, got " +
					                            shape_str(cur));
				}
				if (l.pool_size == 0 || l.pool_stride == 0) {
					throw std::invalid_argument(where + ": size and stride must be >= 1");
				}
				if (cur[1] < l.pool_size || (cur[1] - l.pool_size) % l.pool_stride != 0 ||
				    cur[2] < l.pool_size || (cur[2] - l.pool_size) % l.pool_stride != 0) {
					throw std::invalid_argument(where + ": " + std::to_string(l.pool_size) +
					                            "x" + std::to_string(l.pool_size) +
					                            " windows at stride " +
					                            std::to_string(l.pool_stride) +
					                            " do not tile input " + shape_str(cur));
				}
				cur = {cur[0], (cur[1] - l.pool_size) / l.pool_stride + 1,
				       (cur[2] - l.pool_size) / l.pool_stride + 1};
				break;
			}
			case LayerKind::Flatten:
				cur = {shape_numel(cur)};
				break;
			case LayerKind::Dense: {
				if (cur.size() != 1) {
					throw std::invalid_argument(where + ": expects flat input, got " +
					                            shape_str(cur) + " (insert a flatten layer)");
				}
				if (l.units == 0) {
					throw std::invalid_argument(where + ": units must be >= 1");
				}
				cur = {l.units};
				break;
			}
		}
		shapes.push_back(cur);
	}
	return shapes;
}

std::size_t NetworkSpec::output_classes() const
{
	auto shapes = layer_output_shapes();
	if (shapes.empty()) {
		throw std::invalid_argument("NetworkSpec: no layers");
	}
	return shape_numel(shapes.back());
}

Tensor conv2d_forward(const Tensor &input, const Tensor &weights, const Tensor &bias,
                      std::size_t stride, std::size_t padding)
{
	if (input.rank() != 3) {
		throw std::invalid_argument("conv2d_forward: input must be [C,H,W], got " +
		                            shape_str(input.shape));
	}
	if (weights.rank() != 4) {
		throw std::invalid_argument("conv2d_forward: weights must be [K,C,kh,kw], got " +
		                            shape_str(weights.shape));
	}
	const std::size_t C = input.shape[0], H = input.shape[1], W = input.shape[2];
	const std::size_t K = weights.shape[0], kh = weights.shape[2], kw = weights.shape[3];
	if (weights.shape[1] != C) {
		throw std::invalid_argument("conv2d_forward: weights expect " +
		                            std::to_string(weights.shape[1]) + " input channels, input has " +
		                            std::to_string(C));
	}
	if (bias.numel() != K) {
		throw std::invalid_argument("conv2d_forward: bias length " + std::to_string(bias.numel()) +
		                            " != " + std::to_string(K) + " kernels");
	}
	const std::size_t OH = conv_out_dim(H, padding, kh, stride, "conv2d_forward");
	const std::size_t OW = conv_out_dim(W, padding, kw, stride, "conv2d_forward");

	Tensor out({K, OH, OW});
	const double *in = input.data.data();
	const double *wt = weights.data.data();
	double *dst = out.data.data();
	const long pad = static_cast<long>(padding);
	for (std::size_t k = 0; k < K; k++) {
		const double b = bias[k];
		for (std::size_t oy = 0; oy < OH; oy++) {
			for (std::size_t ox = 0; ox < OW; ox++) {
				double acc = b;
				const long iy0 = static_cast<long>(oy * stride) - pad;
				const long ix0 = static_cast<long>(ox * stride) - pad;
				for (std::size_t c = 0; c < C; c++) {
					const double *in_c = in + c * H * W;
					const double *wt_kc = wt + (k * C + c) * kh * kw;
					for (std::size_t dy = 0; dy < kh; dy++) {
						const long iy = iy0 + static_cast<long>(dy);
						if (iy < 0 || iy >= static_cast<long>(H)) {
							continue;
						}
						const double *row = in_c + static_cast<std::size_t>(iy) * W;
						const double *wrow = wt_kc + dy * kw;
						for (std::size_t dx = 0; dx < kw; dx++) {
							const long ix = ix0 + static_cast<long>(dx);
							if (ix < 0 || ix >= static_cast<long>(W)) {
								continue;
							}
							acc += row[ix] * wrow[dx];
						}
					}
				}
				dst[(k * OH + oy) * OW + ox] = acc;
			}
		}
	}
	return out;
}

Tensor avg_pool_forward(const Tensor &input, std::size_t size, std::size_t stride)
{
	if (input.rank() != 3) {
		throw std::invalid_argument("avg_pool_forward: input must be [C,H,W], got " +
		                            shape_str(input.shape));
	}
	if (size == 0 || stride == 0) {
		throw std::invalid_argument("avg_pool_forward: size and stride must be >= 1");
	}
	const std::size_t C = input.shape[0], H = input.shape[1], W = input.shape[2];
	if (H < size || (H - size) % stride != 0 || W < size || (W - size) % stride != 0) {
		throw std::invalid_argument("avg_pool_forward: " + std::to_string(size) + "x" +
		                            std::to_string(size) + " windows at stride " +
		                            std::to_string(stride) + " do not tile input " +
		                            shape_str(input.shape));
	}
	const std::size_t OH = (H - size) / stride + 1;
	const std::size_t OW = (W - size) / stride + 1;
	const double inv = 1.0 / (static_cast<double>(size) * static_cast<double>(size));

	Tensor out({C, OH, OW});
	for (std::size_t c = 0; c < C; c++) {
		for (std::size_t oy = 0; oy < OH; oy++) {
			for (std::size_t ox = 0; ox < OW; ox++) {
				double acc = 0.0;
				for (std::size_t dy = 0; dy < size; dy++) {
					for (std::size_t dx = 0; dx < size; dx++) {
						acc += input.at(c, oy * stride + dy, ox * stride + dx);
					}
				}
				out.at(c, oy, ox) = acc * inv;
			}
		}
	}
	return out;
}

Tensor dense_forward(const Tensor &input, const Tensor &weights, const Tensor &bias)
{
	if (weights.rank() != 2) {
		throw std::invalid_argument("dense_forward: weights must be [M,N], got " +
		                            shape_str(weights.shape));
	}
	const std::size_t M = weights.shape[0], N = weights.shape[1];
	if (input.numel() != N) {
		throw std::invalid_argument("dense_forward: input length " +
		                            std::to_string(input.numel()) + " != weight columns " +
		                            std::to_string(N));
	}
	if (bias.numel() != M) {
		throw std::invalid_argument("dense_forward: bias length " + std::to_string(bias.numel()) +
		                            " != weight rows " + std::to_string(M));
	}
	Tensor out({M});
	const double *in = input.data.data();
	for (std::size_t m = 0; m < M; m++) {
		const double *row = weights.data.data() + m * N;
		double acc = bias[m];
		for (std::size_t n = 0; n < N; n++) {
			acc += row[n] * in[n];
		}
		out[m] = acc;
	}
	return out;
}

Tensor relu(const Tensor &input)
{
	Tensor out = input;
	for (auto &v : out.data) {
		v = std::max(0.0, v);
	}
	return out;
}

Tensor softmax(const Tensor &input)
{
	Tensor out = input;
	out.shape = {input.numel()};
	double mx = -HUGE_VAL;
	for (double v : out.data) {
		mx = std::max(mx, v);
	}
	double sum = 0.0;
	for (auto &v : out.data) {
		v = std::exp(v - mx);
		sum += v;
	}
	for (auto &v : out.data) {
		v /= sum;
	}
	return out;
}

ForwardTrace forward_all(const TrainedNetwork &net, const Tensor &input)
{
	if (input.shape != net.spec.input_shape) {
		throw std::invalid_argument("forward_all: input shape " + shape_str(input.shape) +
		                            " does not match network input " +
		                            shape_str(net.spec.input_shape));
	}
	ForwardTrace trace;
	Tensor cur = input;
	const std::size_t L = net.spec.layers.size();
	for (std::size_t i = 0; i < L; i++) {
		const LayerSpec &l = net.spec.layers[i];
		const bool last = (i + 1 == L);
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
		if (last) {
			trace.logits = cur;
			cur = softmax(cur);
		}
		else if (l.kind == LayerKind::Conv2d || l.kind == LayerKind::Dense) {
			cur = relu(cur);
		}
		trace.activations.push_back(cur);
	}
	return trace;
}

std::size_t argmax(const Tensor &t)
{
	std::size_t best = 0;
	for (std::size_t i = 1; i < t.numel(); i++) {
		if (t[i] > t[best]) {
			best = i;
		}
	}
	return best;
}

std::size_t predict_class(const TrainedNetwork &net, const Tensor &input)
{
	return argmax(forward_all(net, input).logits);
}

TrainedNetwork init_network(const NetworkSpec &spec, std::uint64_t seed)
{
	auto shapes = spec.layer_output_shapes();  // validates chaining
	TrainedNetwork net;
	net.spec = spec;
	net.meta.seed = seed;
	net.weights.resize(spec.layers.size());
	net.biases.resize(spec.layers.size());

	std::mt19937_64 rng(derive_seed(seed, 0xC0FFEE));
	std::vector<std::size_t> cur = spec.input_shape;
	for (std::size_t i = 0; i < spec.layers.size(); i++) {
		const LayerSpec &l = spec.layers[i];
		if (l.kind == LayerKind::Conv2d) {
			const std::size_t C = cur[0];
			net.weights[i] = Tensor({l.out_channels, C, l.kernel_h, l.kernel_w});
			net.biases[i] = Tensor({l.out_channels});
			const double fan_in = static_cast<double>(C * l.kernel_h * l.kernel_w);
			const double fan_out = static_cast<double>(l.out_channels * l.kernel_h * l.kernel_w);
			const double limit = std::sqrt(6.0 / (fan_in + fan_out));
			for (auto &w : net.weights[i].data) {
				w = uniform_range(rng, -limit, limit);
			}
		}
		else if (l.kind == LayerKind::Dense) {
			const std::size_t N = shape_numel(cur);
			net.weights[i] = Tensor({l.units, N});
			net.biases[i] = Tensor({l.units});
			const double limit = std::sqrt(6.0 / (static_cast<double>(N) + l.units));
			for (auto &w : net.weights[i].data) {
				w = uniform_range(rng, -limit, limit);
			}
		}
		cur = shapes[i];
	}
	return net;
}

}  // namespace spikeforge
