// Writes the synthetic gesture corpus as a subject_XX/class_YY PGM tree, the
// same layout the real dataset ships in, so prepare-data can ingest either.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "spikeforge/image_io.hpp"
#include "spikeforge/synthetic.hpp"

using namespace spikeforge;
namespace fs = std::filesystem;

int main(int argc, char **argv)
{
	CLI::App app{"generate a synthetic hand-gesture image tree"};
	std::string out_dir = "gesture-data";
	std::size_t samples = 20, height = 64, width = 64;
	std::uint64_t seed = 1;
	app.add_option("--out", out_dir, "output directory");
	app.add_option("--samples", samples, "samples per class per subject");
	app.add_option("--height", height, "image height");
	app.add_option("--width", width, "image width");
	app.add_option("--seed", seed, "generation seed");
	CLI11_PARSE(app, argc, argv);

	try {
		GestureDataset ds = synthetic_gesture_dataset(samples, height, width, seed);
		std::vector<std::size_t> counter(100, 0);
		for (std::size_t i = 0; i < ds.size(); i++) {
			const std::size_t subject = ds.subject_ids[i];
			const std::size_t cls = ds.labels[i];
			char sub_name[32], cls_name[32], file_name[32];
			std::snprintf(sub_name, sizeof(sub_name), "subject_%02zu", subject);
			std::snprintf(cls_name, sizeof(cls_name), "class_%02zu", cls);
			std::snprintf(file_name, sizeof(file_name), "%04zu.pgm",
			              counter[subject * 10 + cls]++);
			const fs::path dir = fs::path(out_dir) / sub_name / cls_name;
			fs::create_directories(dir);
			GrayImage img;
			img.height = ds.images[i].shape[1];
			img.width = ds.images[i].shape[2];
			img.pixels = ds.images[i].data;
			write_pgm(dir / file_name, img);
		}
		std::cout << "wrote " << ds.size() << " images under " << out_dir << "\n";
	}
	catch (const std::exception &e) {
		std::cerr << e.what() << "\n";
		return 1;
	}
	return 0;
}
