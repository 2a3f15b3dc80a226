#include "spikeforge/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "spikeforge/rng.hpp"

namespace spikeforge {

namespace {

struct Canvas {
	std::size_t h, w;
	std::vector<double> px;

	Canvas(std::size_t h_, std::size_t w_) : h(h_), w(w_), px(h_ * w_, 0.0) {}

	void fill_ellipse(double cy, double cx, double ry, double rx, double value)
	{
		for (std::size_t y = 0; y < h; y++) {
			for (std::size_t x = 0; x < w; x++) {
				const double dy = (y + 0.5 - cy) / ry;
				const double dx = (x + 0.5 - cx) / rx;
				if (dy * dy + dx * dx <= 1.0) {
					px[y * w + x] = std::max(px[y * w + x], value);
				}
			}
		}
	}

	// Thick segment rendered as a swept disc.
	void stroke(double y0, double x0, double y1, double x1, double radius, double value)
	{
		const double len = std::hypot(y1 - y0, x1 - x0);
		const int steps = std::max(2, static_cast<int>(len * 2.0));
		for (int s = 0; s <= steps; s++) {
			const double t = static_cast<double>(s) / steps;
			fill_ellipse(y0 + t * (y1 - y0), x0 + t * (x1 - x0), radius, radius, value);
		}
	}
};

// Which of the five fingers (thumb excluded) are extended per class; classes
// differ from their neighbors by a single finger, so the task is not linearly
// trivial at pixel level.
constexpr bool kFingerMask[10][5] = {
    {true, false, false, false, false}, {true, true, false, false, false},
    {true, true, true, false, false},   {true, true, true, true, false},
    {true, true, true, true, true},     {false, true, true, true, true},
    {false, false, true, true, true},   {false, false, false, true, true},
    {false, false, false, false, true}, {false, false, false, false, false},
};

}  // namespace

GestureDataset synthetic_gesture_dataset(std::size_t samples_per_class_per_subject,
                                         std::size_t height, std::size_t width,
                                         std::uint64_t seed)
{
	GestureDataset ds;
	for (std::size_t c = 0; c < 10; c++) {
		ds.class_names.push_back("class_" + std::to_string(c));
	}

	const std::size_t rh = height * 2, rw = width * 2;  // render at 2x, then box-filter down
	for (std::size_t subject = 0; subject < 10; subject++) {
		std::mt19937_64 style_rng(derive_seed(seed, 0x57F1E, subject));
		const double palm_scale = 0.9 + 0.2 * uniform_double(style_rng);
		const double finger_len_bias = 0.85 + 0.3 * uniform_double(style_rng);
		const double finger_rad_bias = 0.8 + 0.4 * uniform_double(style_rng);

		for (std::size_t cls = 0; cls < 10; cls++) {
			for (std::size_t k = 0; k < samples_per_class_per_subject; k++) {
				std::mt19937_64 rng(derive_seed(seed, (subject * 10 + cls) * 131071 + k, 0xA11));
				Canvas cv(rh, rw);

				const double jy = (uniform_double(rng) - 0.5) * 0.12 * rh;
				const double jx = (uniform_double(rng) - 0.5) * 0.12 * rw;
				const double cy = rh * 0.62 + jy;
				const double cx = rw * 0.5 + jx;
				const double pry = rh * 0.21 * palm_scale;
				const double prx = rw * 0.17 * palm_scale;
				cv.fill_ellipse(cy, cx, pry, prx, 0.85);

				for (int f = 0; f < 5; f++) {
					if (!kFingerMask[cls][f]) {
						continue;
					}
					// Fingers fan out from the palm top edge.
					const double angle = (-62.0 + 31.0 * f) * M_PI / 180.0 +
					                     (uniform_double(rng) - 0.5) * 0.10;
					const double base_y = cy - pry * 0.75;
					const double base_x = cx + (f - 2.0) * prx * 0.42;
					const double len = rh * 0.26 * finger_len_bias *
					                   (0.92 + 0.16 * uniform_double(rng));
					const double tip_y = base_y - len * std::cos(angle * 0.35);
					const double tip_x = base_x + len * std::sin(angle);
					cv.stroke(base_y, base_x, tip_y, tip_x,
					          rw * 0.030 * finger_rad_bias, 1.0);
				}

				// Wrist stub grounds every silhouette the same way.
				cv.stroke(cy + pry * 0.8, cx, rh - 1.0, cx, rw * 0.06 * palm_scale, 0.7);

				Tensor full({1, rh, rw});
				full.data = cv.px;
				Tensor img = box_resize(full, height, width);
				for (auto &v : img.data) {
					v = std::min(1.0, std::max(0.0, v + 0.05 * normal(rng)));
				}
				ds.images.push_back(std::move(img));
				ds.labels.push_back(cls);
				ds.subject_ids.push_back(subject);
			}
		}
	}
	ds.validate();
	return ds;
}

GestureDataset toy_two_class_dataset(std::size_t n_samples, std::uint64_t seed)
{
	GestureDataset ds;
	ds.class_names = {"horizontal", "vertical"};
	const std::size_t dim = 8;
	for (std::size_t i = 0; i < n_samples; i++) {
		std::mt19937_64 rng(derive_seed(seed, i, 0x707));
		const std::size_t cls = i % 2;
		Tensor img({1, dim, dim});
		const std::size_t pos = 1 + bounded(rng, dim - 3);  // bar start, 2 px thick
		for (std::size_t a = 0; a < 2; a++) {
			for (std::size_t b = 0; b < dim; b++) {
				if (cls == 0) {
					img.at(0, pos + a, b) = 1.0;
				}
				else {
					img.at(0, b, pos + a) = 1.0;
				}
			}
		}
		for (auto &v : img.data) {
			v = std::min(1.0, std::max(0.0, v + 0.1 * (uniform_double(rng) - 0.5)));
		}
		ds.images.push_back(std::move(img));
		ds.labels.push_back(cls);
		ds.subject_ids.push_back(i % 10);
	}
	ds.validate();
	return ds;
}

}  // namespace spikeforge
