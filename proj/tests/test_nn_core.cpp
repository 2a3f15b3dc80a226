#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>
#include <set>

#include "oracles.hpp"
#include "spikeforge/net.hpp"
#include "spikeforge/network_io.hpp"
#include "spikeforge/npz.hpp"
#include "spikeforge/rng.hpp"
#include "spikeforge/synthetic.hpp"
#include "spikeforge/train.hpp"

using namespace spikeforge;
namespace fs = std::filesystem;

TEST_CASE("conv2d: 1x1 identity kernel passes the input through")
{
	std::mt19937_64 rng(1);
	Tensor in = oracles::random_tensor({1, 5, 5}, rng);
	Tensor w = Tensor::from({1, 1, 1, 1}, {1.0});
	Tensor b({1});
	Tensor out = conv2d_forward(in, w, b, 1, 0);
	REQUIRE(out.shape == in.shape);
	for (std::size_t i = 0; i < in.numel(); i++) {
		CHECK(out[i] == in[i]);
	}
}

TEST_CASE("conv2d: all-ones 3x3 kernel on all-ones 4x4 input sums to 9")
{
	Tensor in = Tensor::full({1, 4, 4}, 1.0);
	Tensor w = Tensor::full({1, 1, 3, 3}, 1.0);
	Tensor b({1});
	Tensor out = conv2d_forward(in, w, b, 1, 0);
	REQUIRE(out.shape == std::vector<std::size_t>{1, 2, 2});
	for (double v : out.data) {
		CHECK(v == doctest::Approx(9.0).epsilon(1e-12));
	}
}

TEST_CASE("conv2d: strided padded case matches the loop oracle elementwise")
{
	std::mt19937_64 rng(7);
	Tensor in = oracles::random_tensor({2, 5, 5}, rng);
	Tensor w = oracles::random_tensor({3, 2, 3, 3}, rng);
	Tensor b = oracles::random_tensor({3}, rng);
	Tensor got = conv2d_forward(in, w, b, 2, 1);
	Tensor want = oracles::conv2d_ref(in, w, b, 2, 1);
	REQUIRE(got.shape == want.shape);
	for (std::size_t i = 0; i < got.numel(); i++) {
		CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
	}
}

TEST_CASE("conv2d: shape errors are descriptive")
{
	Tensor in({2, 4, 4});
	Tensor w({1, 3, 3, 3});  // wrong channel count
	Tensor b({1});
	CHECK_THROWS_AS(conv2d_forward(in, w, b, 1, 0), std::invalid_argument);
	Tensor w2({1, 2, 3, 3});
	CHECK_THROWS_AS(conv2d_forward(in, w2, b, 2, 0), std::invalid_argument);  // non-integer output
	Tensor big({1, 2, 7, 7});
	Tensor b1({1});
	CHECK_THROWS_AS(conv2d_forward(in, big, b1, 1, 0), std::invalid_argument);  // kernel too big
}

TEST_CASE("avg_pool: constant input stays constant")
{
	Tensor in = Tensor::full({3, 4, 4}, 0.37);
	Tensor out = avg_pool_forward(in, 2, 2);
	REQUIRE(out.shape == std::vector<std::size_t>{3, 2, 2});
	for (double v : out.data) {
		CHECK(v == doctest::Approx(0.37).epsilon(1e-15));
	}
}

TEST_CASE("avg_pool: 2x2 mean of [[1,2],[3,4]] is 2.5")
{
	Tensor in = Tensor::from({1, 2, 2}, {1, 2, 3, 4});
	Tensor out = avg_pool_forward(in, 2, 2);
	REQUIRE(out.shape == std::vector<std::size_t>{1, 1, 1});
	CHECK(out[0] == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("avg_pool: random case matches the loop oracle; non-tiling errors")
{
	std::mt19937_64 rng(9);
	Tensor in = oracles::random_tensor({3, 8, 8}, rng);
	Tensor got = avg_pool_forward(in, 2, 2);
	Tensor want = oracles::avg_pool_ref(in, 2, 2);
	for (std::size_t i = 0; i < got.numel(); i++) {
		CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
	}
	Tensor bad({1, 5, 5});
	CHECK_THROWS_AS(avg_pool_forward(bad, 2, 2), std::invalid_argument);
}

TEST_CASE("dense: identity weights pass through, zero weights give the bias")
{
	Tensor in = Tensor::from({3}, {1.5, -2.0, 0.25});
	Tensor eye({3, 3});
	for (std::size_t i = 0; i < 3; i++) {
		eye.at(i, i) = 1.0;
	}
	Tensor zero_b({3});
	Tensor out = dense_forward(in, eye, zero_b);
	for (std::size_t i = 0; i < 3; i++) {
		CHECK(out[i] == in[i]);
	}

	Tensor zeros({2, 3});
	Tensor b = Tensor::from({2}, {4.0, -1.0});
	Tensor out2 = dense_forward(in, zeros, b);
	CHECK(out2[0] == 4.0);
	CHECK(out2[1] == -1.0);
}

TEST_CASE("dense: random 4->3 matches the loop oracle; mismatch errors")
{
	std::mt19937_64 rng(11);
	Tensor in = oracles::random_tensor({4}, rng);
	Tensor w = oracles::random_tensor({3, 4}, rng);
	Tensor b = oracles::random_tensor({3}, rng);
	Tensor got = dense_forward(in, w, b);
	Tensor want = oracles::dense_ref(in, w, b);
	for (std::size_t i = 0; i < 3; i++) {
		CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
	}
	Tensor short_in({3});
	CHECK_THROWS_AS(dense_forward(short_in, w, b), std::invalid_argument);
}

TEST_CASE("forward kernels match oracles on randomized shapes to 1e-12")
{
	std::mt19937_64 rng(123);
	for (int trial = 0; trial < 25; trial++) {
		const std::size_t C = 1 + bounded(rng, 3);
		const std::size_t H = 4 + 2 * bounded(rng, 4);
		const std::size_t K = 1 + bounded(rng, 4);
		const std::size_t k = 1 + 2 * bounded(rng, 2);  // 1 or 3
		Tensor in = oracles::random_tensor({C, H, H}, rng);
		Tensor w = oracles::random_tensor({K, C, k, k}, rng);
		Tensor b = oracles::random_tensor({K}, rng);
		const std::size_t pad = bounded(rng, 2);
		Tensor got = conv2d_forward(in, w, b, 1, pad);
		Tensor want = oracles::conv2d_ref(in, w, b, 1, pad);
		for (std::size_t i = 0; i < got.numel(); i++) {
			REQUIRE(std::abs(got[i] - want[i]) <= 1e-12);
		}
	}
}

TEST_CASE("default topology: exactly two conv, two pool, three dense layers, shapes chain")
{
	NetworkSpec spec = NetworkSpec::default_gesture_net(32, 32);
	std::size_t convs = 0, pools = 0, denses = 0;
	for (const auto &l : spec.layers) {
		convs += l.kind == LayerKind::Conv2d;
		pools += l.kind == LayerKind::AvgPool;
		denses += l.kind == LayerKind::Dense;
	}
	CHECK(convs == 2);
	CHECK(pools == 2);
	CHECK(denses == 3);
	auto shapes = spec.layer_output_shapes();  // must not throw
	CHECK(shapes.back() == std::vector<std::size_t>{10});
	CHECK(spec.output_classes() == 10);

	// Inconsistent chains are rejected with a descriptive error.
	NetworkSpec bad;
	bad.input_shape = {1, 7, 7};
	bad.layers = {LayerSpec::avg_pool(2, 2)};
	CHECK_THROWS_AS(bad.layer_output_shapes(), std::invalid_argument);
	NetworkSpec no_flatten;
	no_flatten.input_shape = {1, 8, 8};
	no_flatten.layers = {LayerSpec::conv2d(2, 3, 3, 1, 1), LayerSpec::dense(4)};
	CHECK_THROWS_WITH_AS(no_flatten.layer_output_shapes(), doctest::Contains("flatten"),
	                     std::invalid_argument);
}

TEST_CASE("relu: max(0, x) elementwise, identity for non-negative input")
{
	Tensor t = Tensor::from({4}, {-1.0, 0.0, 2.5, -0.001});
	Tensor r = relu(t);
	CHECK(r[0] == 0.0);
	CHECK(r[1] == 0.0);
	CHECK(r[2] == 2.5);
	CHECK(r[3] == 0.0);
}

TEST_CASE("softmax: positive, sums to 1 within 1e-9 for |x| <= 50")
{
	std::mt19937_64 rng(5);
	for (int trial = 0; trial < 50; trial++) {
		Tensor t = oracles::random_tensor({1 + bounded(rng, 12)}, rng, -50.0, 50.0);
		Tensor s = softmax(t);
		double sum = 0.0;
		for (double v : s.data) {
			CHECK(v > 0.0);
			sum += v;
		}
		CHECK(std::abs(sum - 1.0) <= 1e-9);
	}
}

namespace {

TrainedNetwork small_net(std::uint64_t seed)
{
	NetworkSpec spec;
	spec.input_shape = {1, 6, 6};
	spec.layers = {LayerSpec::conv2d(2, 3, 3, 1, 1), LayerSpec::avg_pool(2, 2),
	               LayerSpec::flatten(), LayerSpec::dense(5), LayerSpec::dense(3)};
	return init_network(spec, seed);
}

}  // namespace

TEST_CASE("forward_all: one activation per layer, softmax last, matches composed oracles")
{
	TrainedNetwork net = small_net(21);
	std::mt19937_64 rng(22);
	Tensor in = oracles::random_tensor({1, 6, 6}, rng, 0.0, 1.0);
	ForwardTrace trace = forward_all(net, in);
	REQUIRE(trace.activations.size() == net.spec.layers.size());

	double sum = 0.0;
	for (double v : trace.activations.back().data) {
		sum += v;
	}
	CHECK(std::abs(sum - 1.0) <= 1e-9);

	// Compose single-layer oracles independently.
	Tensor x = oracles::conv2d_ref(in, net.weights[0], net.biases[0], 1, 1);
	for (auto &v : x.data) {
		v = std::max(0.0, v);
	}
	x = oracles::avg_pool_ref(x, 2, 2);
	x.shape = {x.numel()};
	x = oracles::dense_ref(x, net.weights[3], net.biases[3]);
	for (auto &v : x.data) {
		v = std::max(0.0, v);
	}
	x = oracles::dense_ref(x, net.weights[4], net.biases[4]);
	std::size_t oracle_argmax = 0;
	for (std::size_t i = 1; i < x.numel(); i++) {
		if (x[i] > x[oracle_argmax]) {
			oracle_argmax = i;
		}
	}
	CHECK(predict_class(net, in) == oracle_argmax);
	for (std::size_t i = 0; i < x.numel(); i++) {
		CHECK(trace.logits[i] == doctest::Approx(x[i]).epsilon(1e-12));
	}

	Tensor wrong({1, 5, 5});
	CHECK_THROWS_AS(forward_all(net, wrong), std::invalid_argument);
}

TEST_CASE("gradient_check: dense+softmax at 1e-4 eps is within 1e-5")
{
	NetworkSpec spec;
	spec.input_shape = {5};
	spec.layers = {LayerSpec::dense(3)};
	std::mt19937_64 rng(31);
	Tensor in = oracles::random_tensor({5}, rng);
	GradCheckOptions opt;
	opt.eps = 1e-4;
	opt.probe_seed = 2;
	CHECK(gradient_check(spec, in, 1, opt) <= 1e-5);
}

TEST_CASE("gradient_check: zero input stays finite (ReLU kink straddles 0 here)")
{
	NetworkSpec spec;
	spec.input_shape = {4};
	spec.layers = {LayerSpec::dense(4), LayerSpec::dense(2)};
	Tensor in({4});
	const double err = gradient_check(spec, in, 0, {});
	CHECK(std::isfinite(err));

	Gradients grads = backprop(init_network(spec, 1), in, 0);
	for (const auto &g : grads.weights) {
		CHECK(g.all_finite());
	}
	for (const auto &g : grads.biases) {
		CHECK(g.all_finite());
	}
}

TEST_CASE("gradient_check: conv/pool stack is within 1e-4")
{
	NetworkSpec spec;
	spec.input_shape = {1, 8, 8};
	spec.layers = {LayerSpec::conv2d(3, 3, 3, 1, 1), LayerSpec::avg_pool(2, 2),
	               LayerSpec::flatten(), LayerSpec::dense(6), LayerSpec::dense(3)};
	std::mt19937_64 rng(33);
	Tensor in = oracles::random_tensor({1, 8, 8}, rng, 0.0, 1.0);
	GradCheckOptions opt;
	opt.probe_seed = 5;
	CHECK(gradient_check(spec, in, 2, opt) <= 1e-4);
}

TEST_CASE("train: separable 2-class toy set reaches 95% within 50 epochs")
{
	GestureDataset ds = toy_two_class_dataset(40, 99);
	// 4x4 crops keep this quick: downsample the 8x8 toy images.
	LabeledSet set;
	for (std::size_t i = 0; i < ds.size(); i++) {
		set.images.push_back(box_resize(ds.images[i], 4, 4));
		set.labels.push_back(ds.labels[i]);
	}
	NetworkSpec spec;
	spec.input_shape = {1, 4, 4};
	spec.layers = {LayerSpec::flatten(), LayerSpec::dense(8), LayerSpec::dense(2)};
	TrainOptions opt;
	opt.lr = 0.5;
	opt.epochs = 50;
	opt.batch_size = 8;
	opt.seed = 4;
	TrainedNetwork net = train(spec, set, opt);
	CHECK(net.meta.final_train_accuracy >= 0.95);
	CHECK(net.meta.epoch_losses.back() < net.meta.epoch_losses.front());
}

TEST_CASE("train: zero learning rate leaves parameters at initialization")
{
	GestureDataset ds = toy_two_class_dataset(16, 44);
	LabeledSet set = to_labeled(ds);
	NetworkSpec spec;
	spec.input_shape = {1, 8, 8};
	spec.layers = {LayerSpec::flatten(), LayerSpec::dense(4), LayerSpec::dense(2)};
	TrainOptions opt;
	opt.lr = 0.0;
	opt.epochs = 3;
	opt.seed = 17;
	TrainedNetwork trained = train(spec, set, opt);
	TrainedNetwork fresh = init_network(spec, 17);
	for (std::size_t p = 0; p < spec.layers.size(); p++) {
		REQUIRE(trained.weights[p].data == fresh.weights[p].data);
		REQUIRE(trained.biases[p].data == fresh.biases[p].data);
	}
}

TEST_CASE("train: bit-reproducible for a fixed seed, across thread counts")
{
	GestureDataset ds = toy_two_class_dataset(24, 3);
	LabeledSet set = to_labeled(ds);
	NetworkSpec spec;
	spec.input_shape = {1, 8, 8};
	spec.layers = {LayerSpec::conv2d(2, 3, 3, 1, 1), LayerSpec::avg_pool(2, 2),
	               LayerSpec::flatten(), LayerSpec::dense(2)};
	TrainOptions opt;
	opt.lr = 0.1;
	opt.epochs = 4;
	opt.batch_size = 6;
	opt.seed = 8;
	opt.threads = 1;
	TrainedNetwork a = train(spec, set, opt);
	opt.threads = 4;
	TrainedNetwork b = train(spec, set, opt);
	for (std::size_t p = 0; p < spec.layers.size(); p++) {
		REQUIRE(a.weights[p].data == b.weights[p].data);
		REQUIRE(a.biases[p].data == b.biases[p].data);
	}
	CHECK(a.meta.epoch_losses == b.meta.epoch_losses);
}

TEST_CASE("train: empty dataset and zero batch are rejected")
{
	NetworkSpec spec;
	spec.input_shape = {2};
	spec.layers = {LayerSpec::dense(2)};
	LabeledSet empty;
	CHECK_THROWS_AS(train(spec, empty, {}), std::invalid_argument);
	LabeledSet one;
	one.images.push_back(Tensor({2}));
	one.labels.push_back(0);
	TrainOptions opt;
	opt.batch_size = 0;
	CHECK_THROWS_AS(train(spec, one, opt), std::invalid_argument);
}

TEST_CASE("network archive: layer<i>_weights/_bias records plus spec.json, exact round trip")
{
	const fs::path dir = fs::temp_directory_path() / "spikeforge_test_netio";
	fs::remove_all(dir);
	fs::create_directories(dir);

	TrainedNetwork net = small_net(61);
	net.meta.epochs = 7;
	net.meta.final_test_accuracy = 0.5;
	net.meta.epoch_losses = {2.0, 1.5};
	save_network(net, dir / "net.npz");

	std::set<std::string> names;
	for (const auto &entry : read_zip(dir / "net.npz")) {
		names.insert(entry.name);
	}
	const std::set<std::string> want = {"spec.json", "layer0_weights.npy", "layer0_bias.npy",
	                                    "layer3_weights.npy", "layer3_bias.npy",
	                                    "layer4_weights.npy", "layer4_bias.npy"};
	CHECK(names == want);

	TrainedNetwork back = load_network(dir / "net.npz");
	REQUIRE(back.spec.layers.size() == net.spec.layers.size());
	for (std::size_t i = 0; i < net.spec.layers.size(); i++) {
		REQUIRE(back.weights[i].shape == net.weights[i].shape);
		REQUIRE(back.weights[i].data == net.weights[i].data);
		REQUIRE(back.biases[i].data == net.biases[i].data);
	}
	CHECK(back.meta.epochs == 7);
	CHECK(back.meta.final_test_accuracy == 0.5);
	CHECK(back.meta.epoch_losses == net.meta.epoch_losses);

	std::mt19937_64 rng(62);
	Tensor in = oracles::random_tensor({1, 6, 6}, rng, 0.0, 1.0);
	CHECK(forward_all(back, in).logits.data == forward_all(net, in).logits.data);
}

TEST_CASE("nn-core outputs stay finite on finite inputs")
{
	TrainedNetwork net = small_net(55);
	std::mt19937_64 rng(56);
	for (int trial = 0; trial < 10; trial++) {
		Tensor in = oracles::random_tensor({1, 6, 6}, rng, -5.0, 5.0);
		ForwardTrace trace = forward_all(net, in);
		for (const auto &act : trace.activations) {
			REQUIRE(act.all_finite());
		}
	}
}
