#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "spikeforge/tensor.hpp"

namespace spikeforge {

/**
 * @brief Minimal ZIP container, enough for NPZ interchange.
 *
 * The writer emits stored (uncompressed) entries with fixed timestamps so
 * identical inputs produce byte-identical archives. The reader additionally
 * accepts deflated entries.
 */
struct ZipEntry {
	std::string name;
	std::vector<std::uint8_t> data;
};

void write_zip(const std::filesystem::path &path, const std::vector<ZipEntry> &entries);
std::vector<ZipEntry> read_zip(const std::filesystem::path &path);

/// Serializes a tensor as an NPY v1.0 record ('<f8', C order, 64-byte aligned header).
std::vector<std::uint8_t> encode_npy(const Tensor &tensor);

/**
 * @brief Parses an NPY v1.0/v2.0 record ('<f8' or '<f4', C order).
 * @throws std::runtime_error naming entry_name on bad magic, header or truncation
 */
Tensor decode_npy(const std::vector<std::uint8_t> &bytes, const std::string &entry_name);

/**
 * @brief Writes records as `<name>.npy` members of an NPZ (ZIP) archive.
 *
 * Record names must be non-empty ASCII without '/'. read_npz(write_npz(x))
 * reproduces shapes and values exactly.
 */
void write_npz(const std::map<std::string, Tensor> &records, const std::filesystem::path &path);

std::map<std::string, Tensor> read_npz(const std::filesystem::path &path);

}  // namespace spikeforge
