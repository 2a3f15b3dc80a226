#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spikeforge/sim.hpp"
#include "spikeforge/tensor.hpp"

namespace spikeforge {

/**
 * @brief Pearson correlation coefficient.
 *
 * Returns nullopt ("undefined") when either vector is constant — the silent-
 * layer case is a diagnostic in its own right, distinct from r = 0.
 * @throws std::invalid_argument on length mismatch or length < 2
 */
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

struct LayerCorrelation {
	std::string layer_name;
	std::optional<double> r;  // nullopt = undefined (constant input)
	std::size_t sample_count = 0;
	std::size_t neuron_count = 0;
};

struct CorrelationReport {
	std::vector<LayerCorrelation> layers;
	/// Final-layer r per sample (nullopt where undefined), for debugging.
	std::vector<std::optional<double>> final_layer_per_sample;
};

/**
 * @brief Per-layer correlation between ANN activations and SNN spike rates,
 * pooled over all neurons and samples.
 *
 * ann_activations[sample][layer] must align with snn_rates[sample][layer];
 * feed pre-softmax values for the final layer to match the converted
 * network's bare accumulation.
 */
CorrelationReport correlation_report(const std::vector<std::vector<Tensor>> &ann_activations,
                                     const std::vector<std::vector<Tensor>> &snn_rates,
                                     const std::vector<std::string> &layer_names);

/**
 * @brief Writes correlations.csv, accuracy.csv, summary.json and an SVG
 * scatter of final-layer activation vs rate into out_dir.
 *
 * eval_report may be null (accuracy.csv then holds only its header). The
 * scatter uses the pooled final-layer pairs when provided.
 */
void emit_report(const CorrelationReport &report, const EvaluationReport *eval_report,
                 const std::filesystem::path &out_dir,
                 const std::vector<std::pair<double, double>> &final_layer_pairs = {});

}  // namespace spikeforge
