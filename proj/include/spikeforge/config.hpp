#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spikeforge/sim.hpp"
#include "spikeforge/stdp.hpp"

namespace spikeforge {

/**
 * @brief All pipeline settings, INI-style sections mirroring the stages.
 *
 * Unspecified keys take the standard defaults: simulation batch_size 8,
 * duration 200 ms, num_runs 20, input rate 1000 Hz, evaluate_ann true.
 */
struct PipelineConfig {
	// [paths]
	std::string dataset_root;
	std::string workdir = "spikeforge-work";
	std::string manifest;  // optional dataset manifest JSON

	// [ann]
	std::size_t input_h = 32, input_w = 32;
	std::size_t conv1_channels = 16, conv2_channels = 32;
	std::size_t dense1_units = 128, dense2_units = 64;
	std::size_t classes = 10;
	double lr = 0.01;
	std::size_t epochs = 15;
	std::size_t batch_size = 16;
	std::uint64_t seed = 1;
	double test_fraction = 0.2;
	std::uint64_t split_seed = 7;
	bool by_subject = false;

	// [conversion]
	double percentile = 99.9;
	std::size_t calibration_samples = 64;

	// [simulation]
	SimConfig sim;

	// [stdp]
	StdpParams stdp;
	std::vector<std::size_t> stdp_arch = {100};
	std::size_t stdp_epochs = 1;
	std::uint64_t stdp_seed = 3;
	double stdp_threshold = 1.0;

	// [report]
	std::size_t correlation_samples = 20;

	NetworkSpec ann_spec() const;
};

/**
 * @brief Parses an INI config: `[section]`, `key = value`, '#' comments.
 *
 * Unknown sections/keys, unparsable values and constraint violations raise
 * errors carrying the file name and line number.
 */
PipelineConfig parse_config(const std::filesystem::path &path);

/// Same parser over in-memory text (the name only labels error messages).
PipelineConfig parse_config_text(const std::string &text, const std::string &name = "<config>");

}  // namespace spikeforge
