#pragma once

#include <filesystem>
#include <vector>

namespace spikeforge {

/// Grayscale image with pixel values already scaled to [0, 1].
struct GrayImage {
	std::size_t height = 0, width = 0;
	std::vector<double> pixels;  // row-major
};

/// Binary PGM (P5), 8-bit. Values are divided by the file's maxval.
GrayImage read_pgm(const std::filesystem::path &path);

/// 8-bit grayscale PNG. Values are divided by 255.
GrayImage read_png_gray8(const std::filesystem::path &path);

/// Dispatches on the file's magic bytes (PGM or PNG).
GrayImage read_gray_image(const std::filesystem::path &path);

/// Quantizes [0,1] pixels to 8-bit and writes a binary PGM.
void write_pgm(const std::filesystem::path &path, const GrayImage &image);

}  // namespace spikeforge
