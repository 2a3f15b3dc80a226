#pragma once

#include <cstdint>

#include "spikeforge/dataset.hpp"

namespace spikeforge {

/**
 * @brief Procedurally rendered 10-class hand-gesture corpus.
 *
 * Each class is a palm silhouette with a distinct finger/thumb pattern;
 * each of the 10 subjects applies a deterministic style offset (finger
 * length/width, palm size), and every sample adds jitter and pixel noise.
 * Rendered at 2x resolution and box-downsampled to (height, width).
 *
 * Stands in for the leap-motion near-IR gesture set when that data is not
 * on disk; same directory conventions apply once written out as images.
 */
GestureDataset synthetic_gesture_dataset(std::size_t samples_per_class_per_subject,
                                         std::size_t height, std::size_t width,
                                         std::uint64_t seed);

/**
 * @brief Separable 2-class set of 8x8 images: horizontal vs vertical bars
 * with positional jitter and noise. Labels are 0 and 1.
 */
GestureDataset toy_two_class_dataset(std::size_t n_samples, std::uint64_t seed);

}  // namespace spikeforge
