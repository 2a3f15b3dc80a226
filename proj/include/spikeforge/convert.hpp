#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spikeforge/net.hpp"
#include "spikeforge/tensor.hpp"

namespace spikeforge {

/// One synapse row of the four-column interchange format.
struct SynapseRow {
	std::size_t pre = 0, post = 0;
	double weight = 0.0;
	double delay_ms = 1.0;
};

struct ConnectionTable {
	std::vector<SynapseRow> rows;
};

/// Integrate-and-fire population mirroring one (non-flatten) classifier layer.
struct IfPopulation {
	std::string name;
	std::size_t size = 0;
	double threshold = 1.0;
	std::size_t ann_layer_index = 0;       // index into the source spec's layer list
	std::vector<std::size_t> shape;        // activation shape of the source layer
};

/**
 * @brief Incoming connectivity of one population, compressed by post neuron.
 *
 * Rows are sorted by (post, pre); pre indices ascend within each post row, so
 * accumulation order matches a dense matrix-vector product with the zero
 * entries skipped (identical floating-point sums).
 */
struct LayerConnections {
	std::size_t pre_size = 0, post_size = 0;
	std::vector<std::size_t> row_offsets;  // post_size + 1 entries
	std::vector<std::uint32_t> pre_index;
	std::vector<double> weight;
	/// Constant current injected into each post neuron every step (scaled bias), per dt.
	std::vector<double> bias_current;
	double delay_ms = 1.0;

	std::size_t synapse_count() const { return weight.size(); }
	ConnectionTable to_table() const;
	static LayerConnections from_table(const ConnectionTable &table, std::size_t pre_size,
	                                   std::size_t post_size);
};

/**
 * @brief IF populations plus weighted, delayed connections — the product of
 * rate-based conversion.
 */
struct SpikingNetwork {
	std::vector<std::size_t> input_shape;
	double dt_ms = 1.0;
	std::vector<IfPopulation> populations;
	/// connections[k] feeds populations[k]; source is populations[k-1] (input spikes for k = 0).
	std::vector<LayerConnections> connections;

	std::size_t input_size() const { return shape_numel(input_shape); }
	void validate() const;
};

/// Per-layer activation percentiles used to rescale weights into firing-rate range.
struct ScaleReport {
	std::vector<double> scales;            // one per population, > 0
	std::vector<std::string> layer_names;
	std::vector<bool> all_zero;            // layer had no nonzero activation (scale forced to 1)
	double percentile = 99.9;
	std::size_t calibration_samples = 0;
};

/// Nearest-rank percentile: sorted ascending, element at ceil(p/100 * n) - 1.
double nearest_rank_percentile(std::vector<double> values, double percentile);

/**
 * @brief Collects the given percentile of post-activation values per layer
 * over a calibration set (pre-softmax values for the final layer).
 *
 * Scales are clamped below at 1e-6; an all-zero layer gets scale 1 with a
 * warning on stderr.
 */
ScaleReport compute_activation_scales(const TrainedNetwork &net,
                                      const std::vector<Tensor> &calibration,
                                      double percentile);

/**
 * @brief Rate-based conversion with data-based weight normalization.
 *
 * Layer-l weights are scaled by scale[l-1]/scale[l] (input scale = 1), biases
 * by 1/scale[l] and injected as constant per-step current; thresholds are 1;
 * conv and avg-pool layers unroll into flat connection lists (pool weights
 * 1/size^2); softmax is dropped, classification falls to output spike counts.
 */
SpikingNetwork convert_network(const TrainedNetwork &net, const ScaleReport &scales);

}  // namespace spikeforge
