#include "spikeforge/convert.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace spikeforge {

ConnectionTable LayerConnections::to_table() const
{
	ConnectionTable table;
	table.rows.reserve(weight.size());
	for (std::size_t post = 0; post < post_size; post++) {
		for (std::size_t r = row_offsets[post]; r < row_offsets[post + 1]; r++) {
			table.rows.push_back({pre_index[r], post, weight[r], delay_ms});
		}
	}
	std::sort(table.rows.begin(), table.rows.end(), [](const SynapseRow &a, const SynapseRow &b) {
		return a.pre != b.pre ? a.pre < b.pre : a.post < b.post;
	});
	return table;
}

LayerConnections LayerConnections::from_table(const ConnectionTable &table, std::size_t pre_size,
                                              std::size_t post_size)
{
	LayerConnections conn;
	conn.pre_size = pre_size;
	conn.post_size = post_size;
	conn.bias_current.assign(post_size, 0.0);

	std::vector<SynapseRow> rows = table.rows;
	for (const auto &r : rows) {
		if (r.pre >= pre_size || r.post >= post_size) {
			throw std::out_of_range("connection row (" + std::to_string(r.pre) + ", " +
			                        std::to_string(r.post) + ") outside populations " +
			                        std::to_string(pre_size) + " -> " +
			                        std::to_string(post_size));
		}
	}
	std::sort(rows.begin(), rows.end(), [](const SynapseRow &a, const SynapseRow &b) {
		return a.post != b.post ? a.post < b.post : a.pre < b.pre;
	});
	conn.row_offsets.assign(post_size + 1, 0);
	for (const auto &r : rows) {
		conn.row_offsets[r.post + 1]++;
	}
	for (std::size_t i = 0; i < post_size; i++) {
		conn.row_offsets[i + 1] += conn.row_offsets[i];
	}
	conn.pre_index.reserve(rows.size());
	conn.weight.reserve(rows.size());
	for (const auto &r : rows) {
		conn.pre_index.push_back(static_cast<std::uint32_t>(r.pre));
		conn.weight.push_back(r.weight);
	}
	if (!rows.empty()) {
		conn.delay_ms = rows.front().delay_ms;
	}
	return conn;
}

void SpikingNetwork::validate() const
{
	if (populations.size() != connections.size()) {
		throw std::invalid_argument("SpikingNetwork: populations/connections size mismatch");
	}
	std::size_t prev = input_size();
	for (std::size_t k = 0; k < populations.size(); k++) {
		if (populations[k].threshold <= 0.0) {
			throw std::invalid_argument("SpikingNetwork: population " + populations[k].name +
			                            " has non-positive threshold");
		}
		const auto &c = connections[k];
		if (c.pre_size != prev || c.post_size != populations[k].size) {
			throw std::invalid_argument("SpikingNetwork: connection block " + std::to_string(k) +
			                            " sizes do not match the populations");
		}
		if (c.delay_ms <= 0.0 ||
		    std::abs(c.delay_ms / dt_ms - std::round(c.delay_ms / dt_ms)) > 1e-9) {
			throw std::invalid_argument("SpikingNetwork: delay must be a positive multiple of dt");
		}
		prev = populations[k].size;
	}
}

double nearest_rank_percentile(std::vector<double> values, double percentile)
{
	if (values.empty()) {
		throw std::invalid_argument("nearest_rank_percentile: empty value set");
	}
	std::sort(values.begin(), values.end());
	const double n = static_cast<double>(values.size());
	std::size_t rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * n));
	rank = std::min(std::max<std::size_t>(rank, 1), values.size());
	return values[rank - 1];
}

ScaleReport compute_activation_scales(const TrainedNetwork &net,
                                      const std::vector<Tensor> &calibration, double percentile)
{
	if (calibration.empty()) {
		throw std::invalid_argument("compute_activation_scales: calibration set is empty");
	}
	if (!(percentile > 50.0 && percentile <= 100.0)) {
		throw std::invalid_argument("compute_activation_scales: percentile must be in (50, 100]");
	}

	const std::size_t L = net.spec.layers.size();
	std::vector<std::vector<double>> values;  // per population
	std::vector<std::string> names;
	std::vector<std::size_t> pop_layers;
	for (std::size_t i = 0; i < L; i++) {
		if (net.spec.layers[i].kind == LayerKind::Flatten) {
			continue;
		}
		names.push_back(net.spec.layers[i].name(i));
		pop_layers.push_back(i);
		values.emplace_back();
	}

	for (const auto &sample : calibration) {
		ForwardTrace trace = forward_all(net, sample);
		for (std::size_t k = 0; k < pop_layers.size(); k++) {
			const std::size_t i = pop_layers[k];
			// The SNN approximates pre-softmax output on the last layer.
			const Tensor &act = (i + 1 == L) ? trace.logits : trace.activations[i];
			values[k].insert(values[k].end(), act.data.begin(), act.data.end());
		}
	}

	ScaleReport report;
	report.percentile = percentile;
	report.calibration_samples = calibration.size();
	report.layer_names = names;
	for (std::size_t k = 0; k < values.size(); k++) {
		const bool all_zero =
		    std::all_of(values[k].begin(), values[k].end(), [](double v) { return v == 0.0; });
		double scale;
		if (all_zero) {
			std::cerr << "warning: layer " << names[k]
			          << " produced no nonzero activations on the calibration set; "
			             "using scale 1\n";
			scale = 1.0;
		}
		else {
			scale = std::max(nearest_rank_percentile(values[k], percentile), 1e-6);
		}
		report.all_zero.push_back(all_zero);
		report.scales.push_back(scale);
	}
	return report;
}

namespace {

struct Builder {
	std::vector<SynapseRow> rows;  // filled in (post, pre) order per layer
	std::vector<double> bias_current;

	LayerConnections finish(std::size_t pre_size, std::size_t post_size)
	{
		LayerConnections conn;
		conn.pre_size = pre_size;
		conn.post_size = post_size;
		conn.bias_current = std::move(bias_current);
		if (conn.bias_current.empty()) {
			conn.bias_current.assign(post_size, 0.0);
		}
		std::sort(rows.begin(), rows.end(), [](const SynapseRow &a, const SynapseRow &b) {
			return a.post != b.post ? a.post < b.post : a.pre < b.pre;
		});
		conn.row_offsets.assign(post_size + 1, 0);
		for (const auto &r : rows) {
			conn.row_offsets[r.post + 1]++;
		}
		for (std::size_t i = 0; i < post_size; i++) {
			conn.row_offsets[i + 1] += conn.row_offsets[i];
		}
		for (const auto &r : rows) {
			conn.pre_index.push_back(static_cast<std::uint32_t>(r.pre));
			conn.weight.push_back(r.weight);
		}
		return conn;
	}
};

}  // namespace

SpikingNetwork convert_network(const TrainedNetwork &net, const ScaleReport &scales)
{
	const auto shapes = net.spec.layer_output_shapes();
	const std::size_t L = net.spec.layers.size();

	SpikingNetwork snn;
	snn.input_shape = net.spec.input_shape;

	double prev_scale = 1.0;  // input scale
	std::vector<std::size_t> prev_shape = net.spec.input_shape;
	std::size_t prev_size = shape_numel(prev_shape);
	std::size_t pop = 0;

	for (std::size_t i = 0; i < L; i++) {
		const LayerSpec &l = net.spec.layers[i];
		if (l.kind == LayerKind::Flatten) {
			prev_shape = shapes[i];  // same values, flat indexing is unchanged
			continue;
		}
		if (pop >= scales.scales.size()) {
			throw std::invalid_argument("convert_network: scale report does not cover layer " +
			                            l.name(i));
		}
		const double scale = scales.scales[pop];
		const double ratio = prev_scale / scale;
		const std::size_t post_size = shape_numel(shapes[i]);
		Builder b;
		b.bias_current.assign(post_size, 0.0);

		switch (l.kind) {
			case LayerKind::Conv2d: {
				const std::size_t C = prev_shape[0], H = prev_shape[1], W = prev_shape[2];
				const std::size_t K = l.out_channels;
				const std::size_t OH = shapes[i][1], OW = shapes[i][2];
				const long pad = static_cast<long>(l.padding);
				const Tensor &wt = net.weights[i];
				for (std::size_t k = 0; k < K; k++) {
					for (std::size_t oy = 0; oy < OH; oy++) {
						for (std::size_t ox = 0; ox < OW; ox++) {
							const std::size_t post = (k * OH + oy) * OW + ox;
							b.bias_current[post] = net.biases[i][k] / scale;
							for (std::size_t c = 0; c < C; c++) {
								for (std::size_t dy = 0; dy < l.kernel_h; dy++) {
									const long iy =
									    static_cast<long>(oy * l.stride + dy) - pad;
									if (iy < 0 || iy >= static_cast<long>(H)) {
										continue;
									}
									for (std::size_t dx = 0; dx < l.kernel_w; dx++) {
										const long ix =
										    static_cast<long>(ox * l.stride + dx) - pad;
										if (ix < 0 || ix >= static_cast<long>(W)) {
											continue;
										}
										const std::size_t pre =
										    (c * H + static_cast<std::size_t>(iy)) * W +
										    static_cast<std::size_t>(ix);
										b.rows.push_back(
										    {pre, post, wt.at(k, c, dy, dx) * ratio, snn.dt_ms});
									}
								}
							}
						}
					}
				}
				break;
			}
			case LayerKind::AvgPool: {
				const std::size_t C = prev_shape[0], H = prev_shape[1], W = prev_shape[2];
				const std::size_t OH = shapes[i][1], OW = shapes[i][2];
				const double w = ratio / (static_cast<double>(l.pool_size) * l.pool_size);
				for (std::size_t c = 0; c < C; c++) {
					for (std::size_t oy = 0; oy < OH; oy++) {
						for (std::size_t ox = 0; ox < OW; ox++) {
							const std::size_t post = (c * OH + oy) * OW + ox;
							for (std::size_t dy = 0; dy < l.pool_size; dy++) {
								for (std::size_t dx = 0; dx < l.pool_size; dx++) {
									const std::size_t pre =
									    (c * H + oy * l.pool_stride + dy) * W +
									    ox * l.pool_stride + dx;
									b.rows.push_back({pre, post, w, snn.dt_ms});
								}
							}
						}
					}
				}
				break;
			}
			case LayerKind::Dense: {
				const Tensor &wt = net.weights[i];
				const std::size_t M = wt.shape[0], N = wt.shape[1];
				if (N != prev_size) {
					throw std::invalid_argument("convert_network: dense layer " + l.name(i) +
					                            " input size mismatch");
				}
				for (std::size_t m = 0; m < M; m++) {
					b.bias_current[m] = net.biases[i][m] / scale;
					for (std::size_t n = 0; n < N; n++) {
						b.rows.push_back({n, m, wt.at(m, n) * ratio, snn.dt_ms});
					}
				}
				break;
			}
			case LayerKind::Flatten:
				break;  // handled above
		}

		IfPopulation p;
		p.name = l.name(i);
		p.size = post_size;
		p.threshold = 1.0;
		p.ann_layer_index = i;
		p.shape = shapes[i];
		snn.populations.push_back(std::move(p));
		snn.connections.push_back(b.finish(prev_size, post_size));

		prev_scale = scale;
		prev_shape = shapes[i];
		prev_size = post_size;
		pop++;
	}

	snn.validate();
	return snn;
}

}  // namespace spikeforge
