#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spikeforge/tensor.hpp"
#include "spikeforge/train.hpp"

namespace spikeforge {

/**
 * @brief The 10-class hand-gesture image set: [1,H,W] tensors in [0,1] plus
 * class and subject ids.
 */
struct GestureDataset {
	std::vector<Tensor> images;
	std::vector<std::size_t> labels;       // 0..9
	std::vector<std::size_t> subject_ids;  // 0..9
	std::vector<std::string> class_names;

	std::size_t size() const { return images.size(); }
	void validate() const;
};

struct SplitDataset {
	GestureDataset train;
	GestureDataset test;
	std::uint64_t split_seed = 0;
	double split_fraction = 0.0;
};

/// Optional JSON manifest overriding directory naming: {"class_dirs": [...], "subject_dirs": [...]}.
struct DatasetManifest {
	std::vector<std::string> class_dirs;
	std::vector<std::string> subject_dirs;

	static DatasetManifest load(const std::filesystem::path &path);
};

/**
 * @brief Loads `root/subject_XX/class_YY/` image files (PGM or PNG).
 *
 * Ids are the numeric suffixes unless a manifest lists directory names
 * explicitly (position = id). Unknown class/subject directories and empty
 * datasets are errors.
 */
GestureDataset load_image_dir(const std::filesystem::path &root,
                              const std::optional<DatasetManifest> &manifest = std::nullopt);

/// Area-averaging (box filter) resize of a [1,H,W] image; exact no-op at target size.
Tensor box_resize(const Tensor &image, std::size_t target_h, std::size_t target_w);

GestureDataset preprocess(const GestureDataset &ds, std::size_t target_h, std::size_t target_w);

/**
 * @brief Seeded stratified split; per-class train/test proportions within
 * one sample of the requested fraction.
 *
 * Samples are shuffled once with the seed before per-class assignment.
 * @throws std::invalid_argument if any class has fewer than 2 samples
 */
SplitDataset stratified_split(const GestureDataset &ds, double test_fraction,
                              std::uint64_t seed);

/// Holds out whole subjects instead: ceil(fraction * n_subjects) subjects go to test.
SplitDataset split_by_subject(const GestureDataset &ds, double test_fraction,
                              std::uint64_t seed);

LabeledSet to_labeled(const GestureDataset &ds);

void save_dataset_npz(const SplitDataset &split, const std::filesystem::path &path);
SplitDataset load_dataset_npz(const std::filesystem::path &path);

}  // namespace spikeforge
