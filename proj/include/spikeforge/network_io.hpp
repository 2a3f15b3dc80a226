#pragma once

#include <filesystem>

#include "spikeforge/net.hpp"

namespace spikeforge {

/**
 * @brief Archives a trained network as a ZIP of NPY records
 * (`layer<i>_weights` / `layer<i>_bias` per parameterized layer) plus a
 * UTF-8 `spec.json` entry describing the layer list and training metadata.
 */
void save_network(const TrainedNetwork &net, const std::filesystem::path &path);

TrainedNetwork load_network(const std::filesystem::path &path);

/// JSON round trip for the topology (used by spec.json and tests).
std::string network_spec_to_json(const NetworkSpec &spec, const TrainingMeta *meta = nullptr);
NetworkSpec network_spec_from_json(const std::string &text, TrainingMeta *meta_out = nullptr);

}  // namespace spikeforge
