#pragma once

#include <filesystem>

#include "spikeforge/convert.hpp"

namespace spikeforge {

/**
 * @brief Writes one `layer_<l>_to_<l+1>.txt` per layer pair (four
 * space-separated columns: pre post weight delay_ms, rows sorted by
 * (pre, post), weights as shortest round-trip decimals), plus
 * `populations.txt` with `layer_index size threshold` rows. Layers with any
 * nonzero injected bias additionally get `layer_<l>_biases.txt`
 * (`post_index bias` rows).
 */
void export_connections(const SpikingNetwork &snn, const std::filesystem::path &dir);

/**
 * @brief Rebuilds a SpikingNetwork from a connection directory.
 *
 * layer_sizes lists every population including the input layer (index 0).
 * @throws std::runtime_error with file and line number on out-of-range
 * indices or malformed rows
 */
SpikingNetwork import_connections(const std::filesystem::path &dir,
                                  const std::vector<std::size_t> &layer_sizes);

/// Shortest round-trip decimal formatting ("1", "0.5", "-0.25").
std::string format_double(double value);

/// Population sizes (input first) as recorded in a directory's populations.txt.
std::vector<std::size_t> read_population_sizes(const std::filesystem::path &dir);

}  // namespace spikeforge
