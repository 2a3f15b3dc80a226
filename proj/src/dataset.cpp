#include "spikeforge/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "spikeforge/image_io.hpp"
#include "spikeforge/npz.hpp"
#include "spikeforge/rng.hpp"

namespace spikeforge {

namespace fs = std::filesystem;

void GestureDataset::validate() const
{
	if (images.size() != labels.size() || images.size() != subject_ids.size()) {
		throw std::invalid_argument("GestureDataset: images/labels/subjects length mismatch");
	}
	for (std::size_t i = 0; i < images.size(); i++) {
		if (labels[i] > 9) {
			throw std::invalid_argument("GestureDataset: label " + std::to_string(labels[i]) +
			                            " out of range 0..9 at sample " + std::to_string(i));
		}
		for (double v : images[i].data) {
			if (!(v >= 0.0 && v <= 1.0)) {
				throw std::invalid_argument("GestureDataset: pixel value " + std::to_string(v) +
				                            " outside [0,1] at sample " + std::to_string(i));
			}
		}
	}
}

DatasetManifest DatasetManifest::load(const fs::path &path)
{
	std::ifstream in(path);
	if (!in) {
		throw std::runtime_error("manifest: cannot open " + path.string());
	}
	nlohmann::json j;
	try {
		in >> j;
	}
	catch (const nlohmann::json::exception &e) {
		throw std::runtime_error("manifest: " + path.string() + ": " + e.what());
	}
	DatasetManifest m;
	if (j.contains("class_dirs")) {
		m.class_dirs = j.at("class_dirs").get<std::vector<std::string>>();
	}
	if (j.contains("subject_dirs")) {
		m.subject_dirs = j.at("subject_dirs").get<std::vector<std::string>>();
	}
	return m;
}

namespace {

// "class_03" / "subject_7" -> 3 / 7; nullopt when the prefix doesn't match.
std::optional<std::size_t> id_from_dir_name(const std::string &name, const std::string &prefix)
{
	if (name.size() <= prefix.size() || name.compare(0, prefix.size(), prefix) != 0) {
		return std::nullopt;
	}
	std::size_t id = 0;
	for (std::size_t i = prefix.size(); i < name.size(); i++) {
		if (name[i] < '0' || name[i] > '9') {
			return std::nullopt;
		}
		id = id * 10 + static_cast<std::size_t>(name[i] - '0');
	}
	return id;
}

std::optional<std::size_t> resolve_id(const std::string &dir_name, const std::string &prefix,
                                      const std::vector<std::string> &manifest_dirs)
{
	if (!manifest_dirs.empty()) {
		for (std::size_t i = 0; i < manifest_dirs.size(); i++) {
			if (manifest_dirs[i] == dir_name) {
				return i;
			}
		}
		return std::nullopt;
	}
	return id_from_dir_name(dir_name, prefix);
}

bool is_image_file(const fs::path &p)
{
	const std::string ext = p.extension().string();
	return ext == ".pgm" || ext == ".png" || ext == ".PGM" || ext == ".PNG";
}

}  // namespace

GestureDataset load_image_dir(const fs::path &root, const std::optional<DatasetManifest> &manifest)
{
	if (!fs::is_directory(root)) {
		throw std::runtime_error("load_image_dir: " + root.string() + " is not a directory");
	}
	const std::vector<std::string> no_dirs;
	const auto &class_dirs = manifest ? manifest->class_dirs : no_dirs;
	const auto &subject_dirs = manifest ? manifest->subject_dirs : no_dirs;

	// Sorted traversal keeps sample order stable across filesystems.
	std::vector<fs::path> subjects;
	for (const auto &e : fs::directory_iterator(root)) {
		if (e.is_directory()) {
			subjects.push_back(e.path());
		}
	}
	std::sort(subjects.begin(), subjects.end());

	GestureDataset ds;
	std::map<std::size_t, std::string> names_by_class;
	for (const auto &subject_path : subjects) {
		const auto subject_id =
		    resolve_id(subject_path.filename().string(), "subject_", subject_dirs);
		if (!subject_id) {
			throw std::runtime_error("load_image_dir: unknown subject directory '" +
			                         subject_path.filename().string() + "'");
		}
		std::vector<fs::path> classes;
		for (const auto &e : fs::directory_iterator(subject_path)) {
			if (e.is_directory()) {
				classes.push_back(e.path());
			}
		}
		std::sort(classes.begin(), classes.end());
		for (const auto &class_path : classes) {
			const std::string class_dir = class_path.filename().string();
			const auto class_id = resolve_id(class_dir, "class_", class_dirs);
			if (!class_id) {
				throw std::runtime_error("load_image_dir: unknown class directory '" +
				                         class_dir + "'");
			}
			names_by_class[*class_id] = class_dir;

			std::vector<fs::path> files;
			for (const auto &e : fs::directory_iterator(class_path)) {
				if (e.is_regular_file() && is_image_file(e.path())) {
					files.push_back(e.path());
				}
			}
			std::sort(files.begin(), files.end());
			for (const auto &file : files) {
				GrayImage img;
				try {
					img = read_gray_image(file);
				}
				catch (const std::exception &e) {
					throw std::runtime_error("load_image_dir: " + std::string(e.what()));
				}
				Tensor t;
				t.shape = {1, img.height, img.width};
				t.data = std::move(img.pixels);
				ds.images.push_back(std::move(t));
				ds.labels.push_back(*class_id);
				ds.subject_ids.push_back(*subject_id);
			}
		}
	}
	if (ds.images.empty()) {
		throw std::runtime_error("load_image_dir: no samples found under " + root.string());
	}
	std::size_t max_class = 0;
	for (std::size_t c : ds.labels) {
		max_class = std::max(max_class, c);
	}
	for (std::size_t c = 0; c <= std::max<std::size_t>(max_class, 9); c++) {
		auto it = names_by_class.find(c);
		ds.class_names.push_back(it != names_by_class.end()
		                             ? it->second
		                             : "class_" + std::to_string(c));
	}
	ds.validate();
	return ds;
}

Tensor box_resize(const Tensor &image, std::size_t target_h, std::size_t target_w)
{
	if (image.rank() != 3 || image.shape[0] != 1) {
		throw std::invalid_argument("box_resize: expected [1,H,W] image, got " +
		                            shape_str(image.shape));
	}
	const std::size_t H = image.shape[1], W = image.shape[2];
	if (H == target_h && W == target_w) {
		return image;
	}
	// Proper area averaging: target pixel (ty,tx) integrates the source over
	// [ty*H/th, (ty+1)*H/th) x [tx*W/tw, (tx+1)*W/tw) with fractional edges.
	Tensor out({1, target_h, target_w});
	const double sy = static_cast<double>(H) / static_cast<double>(target_h);
	const double sx = static_cast<double>(W) / static_cast<double>(target_w);
	for (std::size_t ty = 0; ty < target_h; ty++) {
		const double y0 = ty * sy, y1 = (ty + 1) * sy;
		const std::size_t iy0 = static_cast<std::size_t>(std::floor(y0));
		const std::size_t iy1 = std::min(H, static_cast<std::size_t>(std::ceil(y1)));
		for (std::size_t tx = 0; tx < target_w; tx++) {
			const double x0 = tx * sx, x1 = (tx + 1) * sx;
			const std::size_t ix0 = static_cast<std::size_t>(std::floor(x0));
			const std::size_t ix1 = std::min(W, static_cast<std::size_t>(std::ceil(x1)));
			double acc = 0.0, area = 0.0;
			for (std::size_t iy = iy0; iy < iy1; iy++) {
				const double hy = std::min<double>(y1, iy + 1.0) - std::max<double>(y0, iy);
				for (std::size_t ix = ix0; ix < ix1; ix++) {
					const double wx = std::min<double>(x1, ix + 1.0) - std::max<double>(x0, ix);
					acc += image.at(0, iy, ix) * hy * wx;
					area += hy * wx;
				}
			}
			out.at(0, ty, tx) = acc / area;
		}
	}
	// Convex combination of [0,1] inputs; clamp residual rounding.
	for (auto &v : out.data) {
		v = std::min(1.0, std::max(0.0, v));
	}
	return out;
}

GestureDataset preprocess(const GestureDataset &ds, std::size_t target_h, std::size_t target_w)
{
	if (target_h < 8 || target_w < 8) {
		throw std::invalid_argument("preprocess: target dimensions must be >= 8");
	}
	GestureDataset out = ds;
	for (auto &img : out.images) {
		img = box_resize(img, target_h, target_w);
	}
	return out;
}

namespace {

SplitDataset assemble_split(const GestureDataset &ds, const std::vector<std::size_t> &test_idx,
                            const std::vector<std::size_t> &train_idx, double fraction,
                            std::uint64_t seed)
{
	SplitDataset split;
	split.split_seed = seed;
	split.split_fraction = fraction;
	split.train.class_names = ds.class_names;
	split.test.class_names = ds.class_names;
	for (std::size_t i : train_idx) {
		split.train.images.push_back(ds.images[i]);
		split.train.labels.push_back(ds.labels[i]);
		split.train.subject_ids.push_back(ds.subject_ids[i]);
	}
	for (std::size_t i : test_idx) {
		split.test.images.push_back(ds.images[i]);
		split.test.labels.push_back(ds.labels[i]);
		split.test.subject_ids.push_back(ds.subject_ids[i]);
	}
	return split;
}

}  // namespace

SplitDataset stratified_split(const GestureDataset &ds, double test_fraction, std::uint64_t seed)
{
	if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
		throw std::invalid_argument("stratified_split: test_fraction must be in (0, 1)");
	}
	std::vector<std::size_t> order(ds.size());
	for (std::size_t i = 0; i < order.size(); i++) {
		order[i] = i;
	}
	std::mt19937_64 rng(derive_seed(seed, 0x517A7));
	shuffle(order, rng);

	std::map<std::size_t, std::vector<std::size_t>> by_class;
	for (std::size_t i : order) {
		by_class[ds.labels[i]].push_back(i);
	}
	std::vector<std::size_t> train_idx, test_idx;
	for (const auto &[cls, idx] : by_class) {
		if (idx.size() < 2) {
			throw std::invalid_argument("stratified_split: class " + std::to_string(cls) +
			                            " has fewer than 2 samples");
		}
		std::size_t n_test = static_cast<std::size_t>(
		    std::llround(test_fraction * static_cast<double>(idx.size())));
		n_test = std::min(std::max<std::size_t>(n_test, 1), idx.size() - 1);
		for (std::size_t j = 0; j < idx.size(); j++) {
			(j < n_test ? test_idx : train_idx).push_back(idx[j]);
		}
	}
	return assemble_split(ds, test_idx, train_idx, test_fraction, seed);
}

SplitDataset split_by_subject(const GestureDataset &ds, double test_fraction, std::uint64_t seed)
{
	if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
		throw std::invalid_argument("split_by_subject: test_fraction must be in (0, 1)");
	}
	std::vector<std::size_t> subjects;
	for (std::size_t s : ds.subject_ids) {
		if (std::find(subjects.begin(), subjects.end(), s) == subjects.end()) {
			subjects.push_back(s);
		}
	}
	std::sort(subjects.begin(), subjects.end());
	if (subjects.size() < 2) {
		throw std::invalid_argument("split_by_subject: need at least 2 subjects");
	}
	std::mt19937_64 rng(derive_seed(seed, 0x5B7EC7));
	shuffle(subjects, rng);
	const std::size_t n_test_subjects = std::min(
	    subjects.size() - 1,
	    std::max<std::size_t>(
	        1, static_cast<std::size_t>(
	               std::ceil(test_fraction * static_cast<double>(subjects.size())))));
	std::vector<std::size_t> test_subjects(subjects.begin(),
	                                       subjects.begin() +
	                                           static_cast<std::ptrdiff_t>(n_test_subjects));

	std::vector<std::size_t> train_idx, test_idx;
	for (std::size_t i = 0; i < ds.size(); i++) {
		const bool in_test = std::find(test_subjects.begin(), test_subjects.end(),
		                               ds.subject_ids[i]) != test_subjects.end();
		(in_test ? test_idx : train_idx).push_back(i);
	}
	return assemble_split(ds, test_idx, train_idx, test_fraction, seed);
}

LabeledSet to_labeled(const GestureDataset &ds)
{
	LabeledSet set;
	set.images = ds.images;
	set.labels = ds.labels;
	return set;
}

namespace {

Tensor stack_images(const std::vector<Tensor> &images)
{
	if (images.empty()) {
		return Tensor({0, 1, 1, 1});
	}
	const auto &s = images[0].shape;
	Tensor out({images.size(), s[0], s[1], s[2]});
	const std::size_t per = images[0].numel();
	for (std::size_t i = 0; i < images.size(); i++) {
		if (images[i].shape != s) {
			throw std::invalid_argument("save_dataset_npz: inhomogeneous image shapes");
		}
		std::copy(images[i].data.begin(), images[i].data.end(),
		          out.data.begin() + static_cast<std::ptrdiff_t>(i * per));
	}
	return out;
}

Tensor ids_tensor(const std::vector<std::size_t> &ids)
{
	Tensor t({ids.size()});
	for (std::size_t i = 0; i < ids.size(); i++) {
		t[i] = static_cast<double>(ids[i]);
	}
	return t;
}

void unstack(const Tensor &images, const Tensor &labels, const Tensor &subjects,
             GestureDataset &out)
{
	if (images.rank() != 4) {
		throw std::runtime_error("dataset npz: image record must be [N,C,H,W]");
	}
	const std::size_t n = images.shape[0];
	if (labels.numel() != n || subjects.numel() != n) {
		throw std::runtime_error("dataset npz: labels/subjects do not match image count");
	}
	const std::size_t per = images.numel() / std::max<std::size_t>(n, 1);
	for (std::size_t i = 0; i < n; i++) {
		Tensor img({images.shape[1], images.shape[2], images.shape[3]});
		std::copy(images.data.begin() + static_cast<std::ptrdiff_t>(i * per),
		          images.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * per),
		          img.data.begin());
		out.images.push_back(std::move(img));
		out.labels.push_back(static_cast<std::size_t>(labels[i]));
		out.subject_ids.push_back(static_cast<std::size_t>(subjects[i]));
	}
}

}  // namespace

void save_dataset_npz(const SplitDataset &split, const std::filesystem::path &path)
{
	std::map<std::string, Tensor> records;
	records["train_images"] = stack_images(split.train.images);
	records["train_labels"] = ids_tensor(split.train.labels);
	records["train_subjects"] = ids_tensor(split.train.subject_ids);
	records["test_images"] = stack_images(split.test.images);
	records["test_labels"] = ids_tensor(split.test.labels);
	records["test_subjects"] = ids_tensor(split.test.subject_ids);
	records["split_meta"] = Tensor::from(
	    {2}, {split.split_fraction, static_cast<double>(split.split_seed)});
	write_npz(records, path);
}

SplitDataset load_dataset_npz(const std::filesystem::path &path)
{
	auto records = read_npz(path);
	auto need = [&](const std::string &name) -> const Tensor & {
		auto it = records.find(name);
		if (it == records.end()) {
			throw std::runtime_error("dataset npz: " + path.string() + " lacks record '" +
			                         name + "'");
		}
		return it->second;
	};
	SplitDataset split;
	unstack(need("train_images"), need("train_labels"), need("train_subjects"), split.train);
	unstack(need("test_images"), need("test_labels"), need("test_subjects"), split.test);
	const Tensor &meta = need("split_meta");
	if (meta.numel() == 2) {
		split.split_fraction = meta[0];
		split.split_seed = static_cast<std::uint64_t>(meta[1]);
	}
	for (std::size_t c = 0; c < 10; c++) {
		split.train.class_names.push_back("class_" + std::to_string(c));
	}
	split.test.class_names = split.train.class_names;
	return split;
}

}  // namespace spikeforge
