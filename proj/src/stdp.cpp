#include "spikeforge/stdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "spikeforge/rng.hpp"

namespace spikeforge {

void StdpParams::validate() const
{
	if (a_plus <= 0.0 || a_minus <= 0.0) {
		throw std::invalid_argument("StdpParams: amplitudes must be positive");
	}
	if (tau_plus_ms <= 0.0 || tau_minus_ms <= 0.0) {
		throw std::invalid_argument("StdpParams: time constants must be positive");
	}
	if (!(w_min < w_max)) {
		throw std::invalid_argument("StdpParams: w_min must be below w_max");
	}
}

double stdp_window(double delta_t_ms, const StdpParams &params)
{
	if (delta_t_ms > 0.0) {
		return params.a_plus * std::exp(-delta_t_ms / params.tau_plus_ms);
	}
	if (delta_t_ms < 0.0) {
		return -params.a_minus * std::exp(delta_t_ms / params.tau_minus_ms);
	}
	return 0.0;
}

StdpLayer::StdpLayer(std::size_t pre, std::size_t post, const StdpParams &params,
                     std::uint64_t seed)
    : pre_size(pre), post_size(post)
{
	params.validate();
	weights.resize(pre * post);
	std::mt19937_64 rng(derive_seed(seed, 0x57D9, pre * 1000003 + post));
	for (auto &w : weights) {
		w = uniform_range(rng, params.w_min, params.w_max);
	}
	pre_trace.assign(pre, 0.0);
	post_trace.assign(post, 0.0);
	thresholds.assign(post, base_threshold);
}

void StdpLayer::reset_traces()
{
	std::fill(pre_trace.begin(), pre_trace.end(), 0.0);
	std::fill(post_trace.begin(), post_trace.end(), 0.0);
}

void StdpLayer::reset_state()
{
	reset_traces();
}

void stdp_apply(StdpLayer &layer, const std::vector<std::vector<std::uint32_t>> &pre_spikes,
                const std::vector<std::vector<std::uint32_t>> &post_spikes,
                const StdpParams &params, double dt_ms, std::size_t total_steps)
{
	params.validate();
	if (pre_spikes.size() != layer.pre_size || post_spikes.size() != layer.post_size) {
		throw std::invalid_argument("stdp_apply: spike train counts do not match layer shape");
	}
	layer.reset_traces();

	const double decay_pre = std::exp(-dt_ms / params.tau_plus_ms);
	const double decay_post = std::exp(-dt_ms / params.tau_minus_ms);

	// Per-step event lists.
	std::vector<std::vector<std::uint32_t>> pre_at(total_steps), post_at(total_steps);
	for (std::size_t i = 0; i < pre_spikes.size(); i++) {
		for (std::uint32_t t : pre_spikes[i]) {
			if (t >= total_steps) {
				throw std::invalid_argument("stdp_apply: pre spike time out of range");
			}
			pre_at[t].push_back(static_cast<std::uint32_t>(i));
		}
	}
	for (std::size_t j = 0; j < post_spikes.size(); j++) {
		for (std::uint32_t t : post_spikes[j]) {
			if (t >= total_steps) {
				throw std::invalid_argument("stdp_apply: post spike time out of range");
			}
			post_at[t].push_back(static_cast<std::uint32_t>(j));
		}
	}

	auto clip = [&](double w) { return std::min(params.w_max, std::max(params.w_min, w)); };

	for (std::size_t t = 0; t < total_steps; t++) {
		for (auto &x : layer.pre_trace) {
			x *= decay_pre;
		}
		for (auto &x : layer.post_trace) {
			x *= decay_post;
		}
		// Traces exclude this step's events, so simultaneous pairs add zero.
		for (std::uint32_t j : post_at[t]) {
			double *row = layer.weights.data() + static_cast<std::size_t>(j) * layer.pre_size;
			for (std::size_t i = 0; i < layer.pre_size; i++) {
				if (layer.pre_trace[i] != 0.0) {
					row[i] = clip(row[i] + params.a_plus * layer.pre_trace[i]);
				}
			}
		}
		for (std::uint32_t i : pre_at[t]) {
			for (std::size_t j = 0; j < layer.post_size; j++) {
				if (layer.post_trace[j] != 0.0) {
					double &w = layer.weights[j * layer.pre_size + i];
					w = clip(w - params.a_minus * layer.post_trace[j]);
				}
			}
		}
		for (std::uint32_t i : pre_at[t]) {
			layer.pre_trace[i] += 1.0;
		}
		for (std::uint32_t j : post_at[t]) {
			layer.post_trace[j] += 1.0;
		}
	}
}

namespace {

// Dense per-step masks from per-neuron step lists.
std::vector<std::vector<std::uint8_t>> to_masks(
    const std::vector<std::vector<std::uint32_t>> &trains, std::size_t n,
    std::size_t total_steps)
{
	std::vector<std::vector<std::uint8_t>> masks(total_steps,
	                                             std::vector<std::uint8_t>(n, 0));
	for (std::size_t i = 0; i < trains.size(); i++) {
		for (std::uint32_t t : trains[i]) {
			masks[t][i] = 1;
		}
	}
	return masks;
}

/**
 * Runs one layer under winner-take-all: at most one neuron fires per step
 * (largest margin past threshold, ties toward the lowest index); the winner
 * resets by subtraction and every other membrane is cleared, which is the
 * algorithmic form of lateral inhibition. With adapt set, each spike bumps
 * the winner's threshold (homeostasis) and the adaptive part decays slowly.
 */
std::vector<std::vector<std::uint32_t>> run_wta_layer(
    StdpLayer &layer, const std::vector<std::vector<std::uint8_t>> &pre_masks, double dt_ms,
    bool adapt)
{
	const std::size_t total_steps = pre_masks.size();
	std::vector<std::vector<std::uint32_t>> out(layer.post_size);
	std::vector<double> v(layer.post_size, 0.0);
	const double theta_decay = std::exp(-dt_ms / layer.theta_decay_tau_ms);

	for (std::size_t t = 0; t < total_steps; t++) {
		const auto &mask = pre_masks[t];
		long winner = -1;
		double best_margin = 0.0;
		for (std::size_t j = 0; j < layer.post_size; j++) {
			double acc = 0.0;
			const double *row = layer.weights.data() + j * layer.pre_size;
			for (std::size_t i = 0; i < layer.pre_size; i++) {
				if (mask[i]) {
					acc += row[i];
				}
			}
			v[j] += acc;
			const double margin = v[j] - layer.thresholds[j];
			if (v[j] >= layer.thresholds[j] * (1.0 - 1e-9) &&
			    (winner < 0 || margin > best_margin)) {
				winner = static_cast<long>(j);
				best_margin = margin;
			}
		}
		if (winner >= 0) {
			const std::size_t j = static_cast<std::size_t>(winner);
			out[j].push_back(static_cast<std::uint32_t>(t));
			v[j] -= layer.thresholds[j];
			if (v[j] < 0.0) {
				v[j] = 0.0;
			}
			for (std::size_t o = 0; o < layer.post_size; o++) {
				if (o != j) {
					v[o] = 0.0;
				}
			}
			if (adapt) {
				layer.thresholds[j] += layer.theta_plus;
			}
		}
		if (adapt) {
			for (auto &th : layer.thresholds) {
				th = layer.base_threshold + (th - layer.base_threshold) * theta_decay;
			}
		}
	}
	return out;
}

std::vector<std::vector<std::uint32_t>> encode_input_trains(const Tensor &image,
                                                            const SimConfig &cfg,
                                                            std::uint64_t stream_seed)
{
	std::mt19937_64 rng(stream_seed);
	SpikeRaster raster = poisson_encode(image, cfg, rng);
	return raster.layers[0];
}

}  // namespace

std::vector<std::vector<std::vector<std::uint32_t>>> stdp_forward_spikes(
    const StdpNetwork &net, const Tensor &image, const SimConfig &cfg,
    std::uint64_t stream_seed)
{
	const std::size_t steps = cfg.total_steps();
	std::vector<std::vector<std::vector<std::uint32_t>>> all;
	all.push_back(encode_input_trains(image, cfg, stream_seed));
	for (const auto &layer_const : net.layers) {
		StdpLayer layer = layer_const;  // thresholds stay frozen during inference
		auto masks = to_masks(all.back(), layer.pre_size, steps);
		all.push_back(run_wta_layer(layer, masks, cfg.dt_ms, false));
	}
	return all;
}

StdpNetwork train_unsupervised(const LabeledSet &train_set, const std::vector<std::size_t> &arch,
                               const StdpParams &params, const StdpTrainOptions &options,
                               const SimConfig &cfg)
{
	params.validate();
	if (arch.empty()) {
		throw std::invalid_argument("train_unsupervised: need at least one trainable layer");
	}
	if (train_set.size() == 0) {
		throw std::invalid_argument("train_unsupervised: empty training set");
	}
	const std::size_t input_size = train_set.images[0].numel();
	const std::size_t steps = cfg.total_steps();

	StdpNetwork net;
	net.params = params;
	std::vector<std::size_t> sizes = arch;
	std::size_t prev = input_size;
	for (std::size_t k = 0; k < sizes.size(); k++) {
		StdpLayer layer(prev, sizes[k], params, derive_seed(options.seed, 0x1A7E5, k));
		layer.base_threshold = options.base_threshold;
		layer.theta_plus = options.theta_plus;
		layer.theta_decay_tau_ms = options.theta_decay_tau_ms;
		std::fill(layer.thresholds.begin(), layer.thresholds.end(), options.base_threshold);
		net.layers.push_back(std::move(layer));
		prev = sizes[k];
	}

	// Greedy layer-wise: train layer k with layers 0..k-1 frozen.
	for (std::size_t k = 0; k < net.layers.size(); k++) {
		StdpLayer &layer = net.layers[k];
		for (std::size_t epoch = 0; epoch < options.epochs; epoch++) {
			std::vector<std::size_t> order(train_set.size());
			std::iota(order.begin(), order.end(), 0);
			std::mt19937_64 order_rng(derive_seed(options.seed, 0x0EDE5, k * 8191 + epoch));
			shuffle(order, order_rng);

			std::size_t layer_spikes = 0;
			for (std::size_t s : order) {
				const std::uint64_t stream =
				    derive_seed(options.seed, k * 1000003 + epoch, s);
				auto trains = encode_input_trains(train_set.images[s], cfg, stream);
				for (std::size_t f = 0; f < k; f++) {
					StdpLayer frozen = net.layers[f];
					auto masks = to_masks(trains, frozen.pre_size, steps);
					trains = run_wta_layer(frozen, masks, cfg.dt_ms, false);
				}
				auto pre_masks = to_masks(trains, layer.pre_size, steps);
				auto post_trains = run_wta_layer(layer, pre_masks, cfg.dt_ms, true);
				for (const auto &train : post_trains) {
					layer_spikes += train.size();
				}
				stdp_apply(layer, trains, post_trains, params, cfg.dt_ms, steps);
			}
			if (options.verbose) {
				std::cerr << "stdp layer " << k << " epoch " << epoch << ": "
				          << layer_spikes << " spikes\n";
			}
			if (layer_spikes == 0) {
				throw std::runtime_error(
				    "train_unsupervised: layer " + std::to_string(k) +
				    " was silent for a whole epoch; lower base_threshold or raise the "
				    "input rate");
			}
		}
	}

	// Rate-based label assignment; labels enter here only.
	std::size_t n_classes = 0;
	for (std::size_t label : train_set.labels) {
		n_classes = std::max(n_classes, label + 1);
	}
	const std::size_t out_size = net.layers.back().post_size;
	net.response = Tensor({out_size, n_classes});
	std::vector<std::size_t> class_counts(n_classes, 0);
	for (std::size_t s = 0; s < train_set.size(); s++) {
		const auto spikes = stdp_forward_spikes(net, train_set.images[s], cfg,
		                                        derive_seed(options.seed, 0xA551, s));
		const auto &out_trains = spikes.back();
		const std::size_t cls = train_set.labels[s];
		class_counts[cls]++;
		for (std::size_t j = 0; j < out_size; j++) {
			net.response.at(j, cls) +=
			    static_cast<double>(out_trains[j].size()) / static_cast<double>(steps);
		}
	}
	for (std::size_t j = 0; j < out_size; j++) {
		for (std::size_t c = 0; c < n_classes; c++) {
			if (class_counts[c] > 0) {
				net.response.at(j, c) /= static_cast<double>(class_counts[c]);
			}
		}
	}
	net.label_assignment.assign(out_size, 0);
	for (std::size_t j = 0; j < out_size; j++) {
		std::size_t best = 0;
		for (std::size_t c = 1; c < n_classes; c++) {
			if (net.response.at(j, c) > net.response.at(j, best)) {
				best = c;
			}
		}
		net.label_assignment[j] = best;
	}
	return net;
}

std::size_t stdp_classify(const StdpNetwork &net, const Tensor &image, const SimConfig &cfg,
                          std::uint64_t stream_seed)
{
	const auto spikes = stdp_forward_spikes(net, image, cfg, stream_seed);
	const auto &out_trains = spikes.back();
	std::size_t n_classes = 1;
	for (std::size_t c : net.label_assignment) {
		n_classes = std::max(n_classes, c + 1);
	}
	// Mean rate over the neurons assigned to each class.
	std::vector<double> score(n_classes, 0.0);
	std::vector<std::size_t> members(n_classes, 0);
	for (std::size_t j = 0; j < out_trains.size(); j++) {
		score[net.label_assignment[j]] += static_cast<double>(out_trains[j].size());
		members[net.label_assignment[j]]++;
	}
	std::size_t best = 0;
	double best_score = -1.0;
	for (std::size_t c = 0; c < n_classes; c++) {
		const double s = members[c] ? score[c] / static_cast<double>(members[c]) : -1.0;
		if (s > best_score) {
			best_score = s;
			best = c;
		}
	}
	return best;
}

void save_label_assignment(const StdpNetwork &net, const std::filesystem::path &path)
{
	nlohmann::json j;
	for (std::size_t i = 0; i < net.label_assignment.size(); i++) {
		j[std::to_string(i)] = net.label_assignment[i];
	}
	std::ofstream out(path, std::ios::trunc);
	if (!out) {
		throw std::runtime_error("save_label_assignment: cannot write " + path.string());
	}
	out << j.dump(2) << "\n";
}

}  // namespace spikeforge
