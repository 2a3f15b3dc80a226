#include "spikeforge/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace spikeforge {

namespace {

[[noreturn]] void fail(const std::filesystem::path &path, const std::string &what)
{
	throw std::runtime_error(path.string() + ": " + what);
}

// Reads the next whitespace-delimited token, skipping '#' comment lines.
std::string next_pnm_token(std::istream &in)
{
	std::string tok;
	int c;
	while ((c = in.get()) != EOF) {
		if (c == '#') {
			while ((c = in.get()) != EOF && c != '\n') {
			}
			continue;
		}
		if (std::isspace(c)) {
			if (!tok.empty()) {
				break;
			}
			continue;
		}
		tok.push_back(static_cast<char>(c));
	}
	return tok;
}

std::size_t parse_dim(const std::string &tok, const std::filesystem::path &path,
                      const char *what)
{
	if (tok.empty()) {
		fail(path, std::string("truncated PGM header reading ") + what);
	}
	for (char c : tok) {
		if (c < '0' || c > '9') {
			fail(path, std::string("bad PGM ") + what + " '" + tok + "'");
		}
	}
	return static_cast<std::size_t>(std::stoull(tok));
}

}  // namespace

GrayImage read_pgm(const std::filesystem::path &path)
{
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		fail(path, "cannot open file");
	}
	char m0 = 0, m1 = 0;
	in.get(m0);
	in.get(m1);
	if (m0 != 'P' || m1 != '5') {
		fail(path, "not a binary PGM (P5) file");
	}
	const std::size_t width = parse_dim(next_pnm_token(in), path, "width");
	const std::size_t height = parse_dim(next_pnm_token(in), path, "height");
	const std::size_t maxval = parse_dim(next_pnm_token(in), path, "maxval");
	if (width == 0 || height == 0) {
		fail(path, "zero image dimension");
	}
	if (maxval == 0 || maxval > 255) {
		fail(path, "unsupported PGM maxval " + std::to_string(maxval) + " (expected 1..255)");
	}
	// The single whitespace byte after maxval was already consumed by the tokenizer.
	std::vector<std::uint8_t> raw(width * height);
	in.read(reinterpret_cast<char *>(raw.data()), static_cast<std::streamsize>(raw.size()));
	if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
		fail(path, "truncated PGM pixel data");
	}

	GrayImage img;
	img.height = height;
	img.width = width;
	img.pixels.resize(raw.size());
	const double inv = 1.0 / static_cast<double>(maxval);
	for (std::size_t i = 0; i < raw.size(); i++) {
		img.pixels[i] = raw[i] * inv;
	}
	return img;
}

GrayImage read_png_gray8(const std::filesystem::path &path)
{
	std::FILE *fp = std::fopen(path.string().c_str(), "rb");
	if (!fp) {
		fail(path, "cannot open file");
	}
	png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
	png_infop info = png ? png_create_info_struct(png) : nullptr;
	if (!png || !info) {
		if (png) {
			png_destroy_read_struct(&png, &info, nullptr);
		}
		std::fclose(fp);
		fail(path, "libpng initialization failed");
	}
	if (setjmp(png_jmpbuf(png))) {
		png_destroy_read_struct(&png, &info, nullptr);
		std::fclose(fp);
		fail(path, "libpng failed to decode file");
	}
	png_init_io(png, fp);
	png_read_info(png, info);

	// Normalize everything to 8-bit grayscale.
	png_set_strip_16(png);
	png_set_strip_alpha(png);
	const int color_type = png_get_color_type(png, info);
	if (color_type == PNG_COLOR_TYPE_PALETTE) {
		png_set_palette_to_rgb(png);
	}
	if (color_type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) {
		png_set_expand_gray_1_2_4_to_8(png);
	}
	if (color_type & PNG_COLOR_MASK_COLOR) {
		png_set_rgb_to_gray_fixed(png, 1, -1, -1);
	}
	png_read_update_info(png, info);

	const std::size_t width = png_get_image_width(png, info);
	const std::size_t height = png_get_image_height(png, info);
	std::vector<std::uint8_t> raw(width * height);
	std::vector<png_bytep> rows(height);
	for (std::size_t y = 0; y < height; y++) {
		rows[y] = raw.data() + y * width;
	}
	png_read_image(png, rows.data());
	png_destroy_read_struct(&png, &info, nullptr);
	std::fclose(fp);

	GrayImage img;
	img.height = height;
	img.width = width;
	img.pixels.resize(raw.size());
	for (std::size_t i = 0; i < raw.size(); i++) {
		img.pixels[i] = raw[i] / 255.0;
	}
	return img;
}

GrayImage read_gray_image(const std::filesystem::path &path)
{
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		fail(path, "cannot open file");
	}
	std::uint8_t magic[2] = {0, 0};
	in.read(reinterpret_cast<char *>(magic), 2);
	in.close();
	if (magic[0] == 'P' && magic[1] == '5') {
		return read_pgm(path);
	}
	if (magic[0] == 0x89 && magic[1] == 'P') {
		return read_png_gray8(path);
	}
	fail(path, "unrecognized image format (expected PGM P5 or PNG)");
}

void write_pgm(const std::filesystem::path &path, const GrayImage &image)
{
	std::ofstream out(path, std::ios::binary | std::ios::trunc);
	if (!out) {
		fail(path, "cannot open file for writing");
	}
	out << "P5\n" << image.width << " " << image.height << "\n255\n";
	for (double v : image.pixels) {
		const double clamped = std::min(1.0, std::max(0.0, v));
		out.put(static_cast<char>(std::lround(clamped * 255.0)));
	}
	if (!out) {
		fail(path, "write failed");
	}
}

}  // namespace spikeforge
